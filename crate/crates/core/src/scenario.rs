//! Scenario file schema.
//!
//! Scenarios are JSON. Every field is optional and falls back to the
//! documented default; unknown keys are rejected. See `docs/scenario.md`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::antenna::{ArrayConfig, ElementPattern, OobeCorrelation, SounderPattern};
use crate::emitters::{EmitterKind, OobeLimits, PowerControlConfig};
use crate::error::{Error, Result};
use crate::geometry::SounderGeometry;

pub const SCHEMA_VERSION: u32 = 1;

/// Identifier of the only supported trial RNG: SplitMix64 seed mixing into
/// ChaCha8 with one stream per draw purpose.
pub const RNG_ALGORITHM: &str = "splitmix64-chacha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplexMode {
    Downstream,
    Upstream,
    #[default]
    Both,
}

impl DuplexMode {
    pub fn has_downstream(self) -> bool {
        matches!(self, DuplexMode::Downstream | DuplexMode::Both)
    }

    pub fn has_upstream(self) -> bool {
        matches!(self, DuplexMode::Upstream | DuplexMode::Both)
    }
}

/// How a UE picks its serving node inside its gNB cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UeAttachment {
    /// Nearest of the cell's gNB and repeaters.
    #[default]
    Nearest,
    /// Nearest of the cell's repeaters; the gNB when the cell has none.
    RepeaterOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HighPowerUeConfig {
    pub p_max_dbm: f64,
    pub power_control_enabled: bool,
}

impl Default for HighPowerUeConfig {
    fn default() -> Self {
        HighPowerUeConfig {
            p_max_dbm: 40.0,
            power_control_enabled: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxAntenna {
    #[serde(default)]
    pub element: ElementPattern,
    pub array: ArrayConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntennaSet {
    pub oobe_correlation: OobeCorrelation,
    pub gnb: TxAntenna,
    /// Defaults to the gNB antenna.
    pub repeater: Option<TxAntenna>,
    pub ue: TxAntenna,
}

impl Default for AntennaSet {
    fn default() -> Self {
        AntennaSet {
            oobe_correlation: OobeCorrelation::Uncorrelated,
            gnb: TxAntenna {
                element: ElementPattern::default(),
                array: ArrayConfig::square(8, 6.0),
            },
            repeater: None,
            ue: TxAntenna {
                element: ElementPattern::default(),
                array: ArrayConfig::square(4, 0.0),
            },
        }
    }
}

impl AntennaSet {
    pub fn for_kind(&self, kind: EmitterKind) -> &TxAntenna {
        match kind {
            EmitterKind::Gnb => &self.gnb,
            EmitterKind::RepeaterDown | EmitterKind::RepeaterUp => self.repeater.as_ref().unwrap_or(&self.gnb),
            EmitterKind::Ue => &self.ue,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassLosses {
    pub gnb: f64,
    pub repeater: f64,
    pub ue: f64,
}

impl Default for ClassLosses {
    fn default() -> Self {
        ClassLosses {
            gnb: 3.0,
            repeater: 3.0,
            ue: 3.0,
        }
    }
}

impl ClassLosses {
    pub fn for_kind(&self, kind: EmitterKind) -> f64 {
        match kind {
            EmitterKind::Gnb => self.gnb,
            EmitterKind::RepeaterDown | EmitterKind::RepeaterUp => self.repeater,
            EmitterKind::Ue => self.ue,
        }
    }
}

/// Per-trial random steering of downstream panels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteeringConfig {
    /// Beams point uniformly within +/- this azimuth of the panel boresight.
    pub sector_half_width_deg: f64,
    /// Beams point uniformly between the horizon and this depression angle.
    pub max_depression_deg: f64,
}

impl Default for SteeringConfig {
    fn default() -> Self {
        SteeringConfig {
            sector_half_width_deg: 60.0,
            max_depression_deg: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub schema_version: u32,
    pub geometry: SounderGeometry,
    pub sounder: SounderPattern,
    /// EESS channel center.
    pub frequency_hz: f64,
    /// Bandwidth every OOBE level and result is integrated over.
    pub ref_bandwidth_hz: f64,
    /// IMT carrier, used for UE coupling loss.
    pub link_frequency_hz: f64,
    pub gnb_density_per_km2: f64,
    pub cell_radius_km: f64,
    /// Repeaters per gNB cell.
    pub repeater_factor_f: u32,
    pub repeaters_relay_upstream: bool,
    pub ue_attachment: UeAttachment,
    pub ues_per_gnb: u32,
    pub duplex_mode: DuplexMode,
    pub tdd_downlink_fraction: f64,
    pub network_loading: f64,
    pub power_control: PowerControlConfig,
    pub high_power_ue_fraction: f64,
    pub high_power_ue: HighPowerUeConfig,
    pub oobe: OobeLimits,
    pub antennas: AntennaSet,
    pub steering: SteeringConfig,
    pub zenith_attenuation_db: f64,
    pub l_other_db: ClassLosses,
    pub min_coupling_distance_m: f64,
    pub trials: u32,
    pub master_seed: u64,
    pub rng: String,
    pub threshold_dbm: Option<f64>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            schema_version: SCHEMA_VERSION,
            geometry: SounderGeometry::default(),
            sounder: SounderPattern::default(),
            frequency_hz: 23.8e9,
            ref_bandwidth_hz: 200e6,
            link_frequency_hz: 24.35e9,
            gnb_density_per_km2: 0.1,
            cell_radius_km: 0.5,
            repeater_factor_f: 0,
            repeaters_relay_upstream: false,
            ue_attachment: UeAttachment::Nearest,
            ues_per_gnb: 3,
            duplex_mode: DuplexMode::Both,
            tdd_downlink_fraction: 0.75,
            network_loading: 0.5,
            power_control: PowerControlConfig::default(),
            high_power_ue_fraction: 0.0,
            high_power_ue: HighPowerUeConfig::default(),
            oobe: OobeLimits::default(),
            antennas: AntennaSet::default(),
            steering: SteeringConfig::default(),
            zenith_attenuation_db: 1.0,
            l_other_db: ClassLosses::default(),
            min_coupling_distance_m: 1.0,
            trials: 1000,
            master_seed: 1,
            rng: RNG_ALGORITHM.to_owned(),
            threshold_dbm: None,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be > 0, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be >= 0, got {v}")))
    }
}

fn fraction(field: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be in [0, 1], got {v}")))
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        self.geometry.validate()?;
        self.sounder.validate()?;
        positive("frequency_hz", self.frequency_hz)?;
        positive("ref_bandwidth_hz", self.ref_bandwidth_hz)?;
        positive("link_frequency_hz", self.link_frequency_hz)?;
        non_negative("gnb_density_per_km2", self.gnb_density_per_km2)?;
        positive("cell_radius_km", self.cell_radius_km)?;
        fraction("tdd_downlink_fraction", self.tdd_downlink_fraction)?;
        fraction("network_loading", self.network_loading)?;
        fraction("high_power_ue_fraction", self.high_power_ue_fraction)?;
        self.power_control.validate("power_control")?;
        if !self.high_power_ue.p_max_dbm.is_finite() || self.high_power_ue.p_max_dbm < self.power_control.p_min_dbm {
            return Err(Error::config("high_power_ue.p_max_dbm", "must be finite and >= power_control.p_min_dbm"));
        }
        if let Some(bw) = self.oobe.bandwidth_hz {
            positive("oobe.bandwidth_hz", bw)?;
        }
        for (name, v) in [
            ("oobe.gnb_dbm", self.oobe.gnb_dbm),
            ("oobe.repeater_dbm", self.oobe.repeater_dbm),
            ("oobe.ue_offset_db", self.oobe.ue_offset_db),
            ("oobe.high_power_ue_offset_db", self.oobe.high_power_ue_offset_db),
        ] {
            if v.is_some_and(|v| !v.is_finite()) {
                return Err(Error::config(name, "must be finite"));
            }
        }
        // every class that can appear needs a level
        let ue_max = self.ue_max_powers();
        for kind in EmitterKind::ALL {
            crate::emitters::assign_oobe_trp(kind, false, &self.oobe, ue_max, self.ref_bandwidth_hz)?;
        }
        if self.high_power_ue_fraction > 0.0 {
            crate::emitters::assign_oobe_trp(EmitterKind::Ue, true, &self.oobe, ue_max, self.ref_bandwidth_hz)?;
        }
        self.antennas.gnb.element.validate("antennas.gnb.element")?;
        self.antennas.gnb.array.validate("antennas.gnb.array")?;
        if let Some(rep) = &self.antennas.repeater {
            rep.element.validate("antennas.repeater.element")?;
            rep.array.validate("antennas.repeater.array")?;
        }
        self.antennas.ue.element.validate("antennas.ue.element")?;
        self.antennas.ue.array.validate("antennas.ue.array")?;
        if !(0.0..=180.0).contains(&self.steering.sector_half_width_deg) {
            return Err(Error::config("steering.sector_half_width_deg", "must be in [0, 180]"));
        }
        if !(0.0..90.0).contains(&self.steering.max_depression_deg) {
            return Err(Error::config("steering.max_depression_deg", "must be in [0, 90)"));
        }
        non_negative("zenith_attenuation_db", self.zenith_attenuation_db)?;
        non_negative("l_other_db.gnb", self.l_other_db.gnb)?;
        non_negative("l_other_db.repeater", self.l_other_db.repeater)?;
        non_negative("l_other_db.ue", self.l_other_db.ue)?;
        positive("min_coupling_distance_m", self.min_coupling_distance_m)?;
        if self.trials < 1 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        if self.rng != RNG_ALGORITHM {
            return Err(Error::config(
                "rng",
                format!("unsupported RNG `{}`, expected `{RNG_ALGORITHM}`", self.rng),
            ));
        }
        if self.threshold_dbm.is_some_and(|t| !t.is_finite()) {
            return Err(Error::config("threshold_dbm", "must be finite"));
        }
        Ok(())
    }

    pub fn ue_max_powers(&self) -> crate::emitters::UeMaxPowers {
        crate::emitters::UeMaxPowers {
            standard_dbm: self.power_control.p_max_dbm,
            high_power_dbm: self.high_power_ue.p_max_dbm,
        }
    }

    /// Power-control settings for a UE of the given subclass.
    pub fn ue_power_control(&self, high_power: bool) -> PowerControlConfig {
        if high_power {
            PowerControlConfig {
                enabled: self.power_control.enabled && self.high_power_ue.power_control_enabled,
                p_max_dbm: self.high_power_ue.p_max_dbm,
                ..self.power_control
            }
        } else {
            self.power_control
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|err| {
            let path = err.path().to_string();
            let inner = err.into_inner();
            match inner.classify() {
                serde_json::error::Category::Data if path != "." => Error::Config {
                    field: path,
                    message: format!("{inner}"),
                },
                _ => Error::Parse {
                    line: inner.line(),
                    column: inner.column(),
                    message: inner.to_string(),
                },
            }
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Scenario::from_json_str(&text)
    }

    /// Canonical JSON of the fully resolved scenario.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    /// Copy with one field replaced, addressed by a dotted path such as
    /// `repeater_factor_f` or `power_control.enabled`.
    pub fn with_override(&self, dotted_path: &str, value: Value) -> Result<Self> {
        let mut tree = serde_json::to_value(self).expect("scenario serializes");
        let mut slot = &mut tree;
        for key in dotted_path.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|obj| obj.get_mut(key))
                .ok_or_else(|| Error::config(dotted_path, "no such scenario field"))?;
        }
        *slot = value;
        Scenario::from_json_str(&tree.to_string())
    }
}

/// Flatten a JSON tree into dotted leaf paths.
pub(crate) fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&path, child, out);
            }
        }
        leaf => out.push((prefix.to_owned(), leaf.clone())),
    }
}

/// Dotted paths whose values differ between two scenarios.
pub fn differing_fields(a: &Scenario, b: &Scenario) -> Vec<String> {
    let (mut fa, mut fb) = (Vec::new(), Vec::new());
    flatten("", &serde_json::to_value(a).expect("serializes"), &mut fa);
    flatten("", &serde_json::to_value(b).expect("serializes"), &mut fb);
    let mut out: Vec<String> = Vec::new();
    let lookup = |list: &[(String, Value)], key: &str| list.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
    for (k, va) in &fa {
        if lookup(&fb, k).as_ref() != Some(va) {
            out.push(k.clone());
        }
    }
    for (k, _) in &fb {
        if lookup(&fa, k).is_none() && !out.contains(k) {
            out.push(k.clone());
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let s = Scenario::from_json_str(r#"{"gnb_density_per_km2": 0.05}"#).unwrap();
        assert_eq!(s.gnb_density_per_km2, 0.05);
        assert_eq!(s.frequency_hz, 23.8e9);
        assert_eq!(s.ref_bandwidth_hz, 200e6);
        assert_eq!(s.trials, 1000);
        assert_eq!(s.rng, RNG_ALGORITHM);
        assert_eq!(s.geometry.footprint_radius_km, 25.0);
    }

    #[test]
    fn negative_repeater_factor_rejected() {
        let err = Scenario::from_json_str(r#"{"repeater_factor_f": -1}"#).unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "repeater_factor_f"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(Error::config("x", "y").exit_code(), 2);
    }

    #[test]
    fn tdd_fraction_out_of_range() {
        let err = Scenario::from_json_str(r#"{"tdd_downlink_fraction": 1.5}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "tdd_downlink_fraction"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = Scenario::from_json_str(r#"{"gnb_densty_per_km2": 0.1}"#).unwrap_err();
        assert!(err.to_string().contains("gnb_densty_per_km2"), "{err}");
        let nested = Scenario::from_json_str(r#"{"power_control": {"alfa": 0.5}}"#).unwrap_err();
        assert!(matches!(nested, Error::Config { ref field, .. } if field.starts_with("power_control")));
    }

    #[test]
    fn syntax_error_has_line() {
        let err = Scenario::from_json_str("{\n  \"trials\": 10,\n  oops\n}").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(Scenario::from_json_str(r#"{"trials": 0}"#).is_err());
    }

    #[test]
    fn unsupported_rng_rejected() {
        let err = Scenario::from_json_str(r#"{"rng": "mt19937"}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "rng"));
    }

    #[test]
    fn resolved_round_trip_and_hash() {
        let s = Scenario::default();
        let back = Scenario::from_json_str(&s.canonical_json()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.hash(), s.hash());
        let other = Scenario {
            repeater_factor_f: 2,
            ..s.clone()
        };
        assert_ne!(other.hash(), s.hash());
    }

    #[test]
    fn override_and_diff() {
        let s = Scenario::default();
        let f2 = s.with_override("repeater_factor_f", Value::from(2)).unwrap();
        assert_eq!(f2.repeater_factor_f, 2);
        assert_eq!(differing_fields(&s, &f2), vec!["repeater_factor_f".to_owned()]);
        let pc = s.with_override("power_control.enabled", Value::from(false)).unwrap();
        assert!(!pc.power_control.enabled);
        assert_eq!(differing_fields(&s, &pc), vec!["power_control.enabled".to_owned()]);
        assert!(s.with_override("no_such", Value::from(1)).is_err());
        assert!(s.with_override("network_loading", Value::from(3.0)).is_err());
        assert!(differing_fields(&s, &s).is_empty());
    }

    #[test]
    fn high_power_pc_settings() {
        let s = Scenario::default();
        let hp = s.ue_power_control(true);
        assert_eq!(hp.p_max_dbm, 40.0);
        assert!(!hp.enabled);
        assert_eq!(s.ue_power_control(false), s.power_control);
    }
}
