//! Emitter taxonomy, OOBE assignment and UE uplink power control.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::antenna::PanelPointing;
use crate::error::{Error, Result};
use crate::geometry::GroundPoint;
use crate::propagation::fspl_unchecked;
use crate::units::{bandwidth_rescale, Decibel, DecibelPower};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EmitterKind {
    Gnb,
    RepeaterDown,
    RepeaterUp,
    Ue,
}

impl EmitterKind {
    pub const ALL: [EmitterKind; 4] = [
        EmitterKind::Gnb,
        EmitterKind::RepeaterDown,
        EmitterKind::Ue,
        EmitterKind::RepeaterUp,
    ];

    pub fn direction(self) -> Direction {
        match self {
            EmitterKind::Gnb | EmitterKind::RepeaterDown => Direction::Downstream,
            EmitterKind::Ue | EmitterKind::RepeaterUp => Direction::Upstream,
        }
    }

    pub fn is_repeater(self) -> bool {
        matches!(self, EmitterKind::RepeaterDown | EmitterKind::RepeaterUp)
    }
}

impl fmt::Display for EmitterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmitterKind::Gnb => "GNB",
            EmitterKind::RepeaterDown => "REPEATER_DOWN",
            EmitterKind::RepeaterUp => "REPEATER_UP",
            EmitterKind::Ue => "UE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Downstream,
    Upstream,
}

/// One transmitter in a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterNode {
    pub kind: EmitterKind,
    pub position: GroundPoint,
    /// OOBE total radiated power in the sounder reference bandwidth, before
    /// any power-control reduction.
    pub oobe_trp: DecibelPower,
    /// In-band power reduction applied by UE power control (zero otherwise).
    pub l_pwrctl: Decibel,
    pub pointing: PanelPointing,
    /// Electrical steering target, global azimuth and elevation in degrees.
    pub steer_azimuth_deg: f64,
    pub steer_elevation_deg: f64,
    /// Node a UE (or upstream relay) transmits toward.
    pub serving_position: Option<GroundPoint>,
    pub high_power: bool,
    pub active: bool,
}

impl EmitterNode {
    /// OOBE after power control, the level that actually radiates.
    pub fn effective_oobe(&self) -> DecibelPower {
        effective_ue_oobe(self.l_pwrctl, self.oobe_trp)
    }
}

/// Open-loop fractional uplink power control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerControlConfig {
    pub enabled: bool,
    pub p0_dbm: f64,
    pub alpha: f64,
    pub p_max_dbm: f64,
    pub p_min_dbm: f64,
}

impl Default for PowerControlConfig {
    fn default() -> Self {
        PowerControlConfig {
            enabled: true,
            p0_dbm: -90.0,
            alpha: 1.0,
            p_max_dbm: 22.0,
            p_min_dbm: -40.0,
        }
    }
}

impl PowerControlConfig {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        for (name, v) in [
            ("p0_dbm", self.p0_dbm),
            ("p_max_dbm", self.p_max_dbm),
            ("p_min_dbm", self.p_min_dbm),
        ] {
            if !v.is_finite() {
                return Err(Error::config(format!("{prefix}.{name}"), "must be finite"));
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config(format!("{prefix}.alpha"), "must be in [0, 1]"));
        }
        if self.p_min_dbm > self.p_max_dbm {
            return Err(Error::config(format!("{prefix}.p_min_dbm"), "must not exceed p_max_dbm"));
        }
        Ok(())
    }
}

/// UE in-band transmit power and the reduction below maximum it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeTransmitPower {
    pub tx_power_dbm: f64,
    pub l_pwrctl: Decibel,
}

pub fn ue_transmit_power(cfg: &PowerControlConfig, coupling_loss: Decibel) -> UeTransmitPower {
    if !cfg.enabled {
        return UeTransmitPower {
            tx_power_dbm: cfg.p_max_dbm,
            l_pwrctl: Decibel::ZERO,
        };
    }
    let tx = (cfg.p0_dbm + cfg.alpha * coupling_loss.db()).clamp(cfg.p_min_dbm, cfg.p_max_dbm);
    UeTransmitPower {
        tx_power_dbm: tx,
        l_pwrctl: Decibel::new(cfg.p_max_dbm - tx).unwrap_or(Decibel::ZERO),
    }
}

/// In-band coupling loss between a UE and its serving node: free-space loss
/// at the link frequency over the ground separation plus the fixed loss.
/// Separations below `min_distance_m` are raised to it.
pub fn coupling_loss(
    ue: &GroundPoint,
    serving: &GroundPoint,
    link_frequency_hz: f64,
    l_other_db: f64,
    min_distance_m: f64,
) -> Decibel {
    let d_km = ue.distance_km(serving).max(min_distance_m * 1e-3);
    Decibel::new(fspl_unchecked(link_frequency_hz, d_km) + l_other_db).unwrap_or(Decibel::ZERO)
}

/// OOBE scales dB for dB with the in-band power-control reduction.
pub fn effective_ue_oobe(l_pwrctl: Decibel, base_oobe: DecibelPower) -> DecibelPower {
    base_oobe.offset(-l_pwrctl)
}

/// Per-class OOBE levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OobeLimits {
    /// Bandwidth the levels below are integrated over. Defaults to the
    /// scenario reference bandwidth.
    pub bandwidth_hz: Option<f64>,
    pub gnb_dbm: Option<f64>,
    /// Defaults to the gNB level.
    pub repeater_dbm: Option<f64>,
    /// UE OOBE relative to the UE maximum in-band power.
    pub ue_offset_db: Option<f64>,
    /// Same, for high-power (Class 1) fixed-wireless UEs.
    pub high_power_ue_offset_db: Option<f64>,
}

impl Default for OobeLimits {
    fn default() -> Self {
        OobeLimits {
            bandwidth_hz: None,
            gnb_dbm: Some(-27.0),
            repeater_dbm: None,
            ue_offset_db: Some(-49.0),
            high_power_ue_offset_db: Some(-49.0),
        }
    }
}

/// Maximum in-band powers of the two UE subclasses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeMaxPowers {
    pub standard_dbm: f64,
    pub high_power_dbm: f64,
}

/// Configured OOBE for one emitter class in the reference bandwidth.
pub fn assign_oobe_trp(
    kind: EmitterKind,
    high_power: bool,
    limits: &OobeLimits,
    ue_max: UeMaxPowers,
    ref_bandwidth_hz: f64,
) -> Result<DecibelPower> {
    let missing = |field: &str| Error::config(format!("oobe.{field}"), "no OOBE level configured for this class");
    let gnb = limits.gnb_dbm.ok_or_else(|| missing("gnb_dbm"));
    let dbm = match kind {
        EmitterKind::Gnb => gnb?,
        EmitterKind::RepeaterDown | EmitterKind::RepeaterUp => match limits.repeater_dbm {
            Some(v) => v,
            None => gnb?,
        },
        EmitterKind::Ue if high_power => {
            ue_max.high_power_dbm
                + limits
                    .high_power_ue_offset_db
                    .ok_or_else(|| missing("high_power_ue_offset_db"))?
        }
        EmitterKind::Ue => ue_max.standard_dbm + limits.ue_offset_db.ok_or_else(|| missing("ue_offset_db"))?,
    };
    let stated = DecibelPower::new(dbm, limits.bandwidth_hz.unwrap_or(ref_bandwidth_hz))
        .map_err(|e| Error::config("oobe", e.to_string()))?;
    bandwidth_rescale(stated, ref_bandwidth_hz)
}
