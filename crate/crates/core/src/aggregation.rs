//! Link budget, per-trial aggregation, run statistics and penalties.
//!
//! Received power from one emitter, in dB form:
//!
//! ```text
//! P_sat = P_tx + G_tx(theta, phi) + G_sat(offaxis) - L_path - L_gas - L_other - L_pwrctl
//! ```
//!
//! Per-trial totals are linear sums of active emitters. Statistics are taken
//! over linear milliwatts and reported in dBm.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::antenna::{
    array_gain_unchecked, element_gain_unchecked, sounder_gain, to_panel_frame, OobeCorrelation, SounderPattern,
};
use crate::deployment::TrialDeployment;
use crate::emitters::{EmitterKind, EmitterNode};
use crate::error::{Error, Result};
use crate::geometry::{look_angles, SounderGeometry};
use crate::propagation::{fspl_unchecked, gaseous_loss, total_loss, PropagationLosses};
use crate::scenario::{AntennaSet, ClassLosses, Scenario};
use crate::units::{mw_to_dbm, Decibel, DecibelPower};

/// Everything the link budget needs besides the emitter.
#[derive(Debug, Clone, Copy)]
pub struct LinkContext<'a> {
    pub geometry: &'a SounderGeometry,
    pub sounder: &'a SounderPattern,
    pub antennas: &'a AntennaSet,
    pub frequency_hz: f64,
    pub zenith_attenuation_db: f64,
    pub l_other_db: &'a ClassLosses,
}

impl<'a> LinkContext<'a> {
    pub fn from_scenario(s: &'a Scenario) -> Self {
        LinkContext {
            geometry: &s.geometry,
            sounder: &s.sounder,
            antennas: &s.antennas,
            frequency_hz: s.frequency_hz,
            zenith_attenuation_db: s.zenith_attenuation_db,
            l_other_db: &s.l_other_db,
        }
    }
}

/// dB arithmetic of a single link.
pub fn link_budget_db(
    p_tx: DecibelPower,
    tx_gain: Decibel,
    sat_gain: Decibel,
    losses: &PropagationLosses,
    l_pwrctl: Decibel,
) -> DecibelPower {
    p_tx.offset(tx_gain + sat_gain - total_loss(losses) - l_pwrctl)
}

/// Transmit gain toward the satellite for the emitter's panel and steering.
pub fn tx_gain_toward(e: &EmitterNode, sat_azimuth_deg: f64, sat_elevation_deg: f64, antennas: &AntennaSet) -> Decibel {
    let antenna = antennas.for_kind(e.kind);
    let (theta, phi) = to_panel_frame(&e.pointing, sat_azimuth_deg, sat_elevation_deg);
    let g = match antennas.oobe_correlation {
        OobeCorrelation::Uncorrelated => element_gain_unchecked(&antenna.element, theta, phi),
        OobeCorrelation::Correlated => {
            let (st, sp) = to_panel_frame(&e.pointing, e.steer_azimuth_deg, e.steer_elevation_deg);
            array_gain_unchecked(&antenna.element, &antenna.array.steered(st, sp), theta, phi)
        }
    };
    Decibel::new(g).unwrap_or(Decibel::ZERO)
}

/// Power received by the sounder from one emitter in the reference
/// bandwidth. `None` when the satellite is at or below the emitter's horizon.
pub fn link_budget(e: &EmitterNode, ctx: &LinkContext<'_>) -> Option<DecibelPower> {
    let look = look_angles(&e.position, ctx.geometry);
    let l_gas = gaseous_loss(ctx.zenith_attenuation_db, look.emitter_elevation_deg).ok()?;
    let losses = PropagationLosses {
        l_path_db: fspl_unchecked(ctx.frequency_hz, look.slant_range_km),
        l_gas_db: l_gas.db(),
        l_other_db: ctx.l_other_db.for_kind(e.kind),
    };
    let tx_gain = tx_gain_toward(e, look.emitter_azimuth_deg, look.emitter_elevation_deg, ctx.antennas);
    let sat_gain = sounder_gain(ctx.sounder, look.sounder_offaxis_deg).ok()?;
    Some(link_budget_db(e.oobe_trp, tx_gain, sat_gain, &losses, e.l_pwrctl))
}

/// Summary metrics carried per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Gnb,
    RepDown,
    Ue,
    RepUp,
    Down,
    Up,
    Combined,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Gnb,
        Metric::RepDown,
        Metric::Ue,
        Metric::RepUp,
        Metric::Down,
        Metric::Up,
        Metric::Combined,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Gnb => "gnb",
            Metric::RepDown => "rep_down",
            Metric::Ue => "ue",
            Metric::RepUp => "rep_up",
            Metric::Down => "down",
            Metric::Up => "up",
            Metric::Combined => "combined",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ActiveCounts {
    pub gnb: usize,
    pub repeater_down: usize,
    pub repeater_up: usize,
    pub ue: usize,
}

/// Aggregate received power of one trial, linear milliwatts per class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_index: u64,
    pub gnb_mw: f64,
    pub rep_down_mw: f64,
    pub ue_mw: f64,
    pub rep_up_mw: f64,
    pub active: ActiveCounts,
}

impl TrialResult {
    pub fn downstream_mw(&self) -> f64 {
        self.gnb_mw + self.rep_down_mw
    }

    pub fn upstream_mw(&self) -> f64 {
        self.ue_mw + self.rep_up_mw
    }

    pub fn combined_mw(&self) -> f64 {
        self.downstream_mw() + self.upstream_mw()
    }

    pub fn metric_mw(&self, m: Metric) -> f64 {
        match m {
            Metric::Gnb => self.gnb_mw,
            Metric::RepDown => self.rep_down_mw,
            Metric::Ue => self.ue_mw,
            Metric::RepUp => self.rep_up_mw,
            Metric::Down => self.downstream_mw(),
            Metric::Up => self.upstream_mw(),
            Metric::Combined => self.combined_mw(),
        }
    }

    /// dBm of a metric; negative infinity for an empty sum.
    pub fn metric_dbm(&self, m: Metric) -> f64 {
        mw_to_dbm(self.metric_mw(m))
    }
}

pub fn aggregate_trial(d: &TrialDeployment, ctx: &LinkContext<'_>) -> TrialResult {
    aggregate_emitters(d.trial_index, &d.emitters, ctx)
}

pub fn aggregate_emitters(trial_index: u64, emitters: &[EmitterNode], ctx: &LinkContext<'_>) -> TrialResult {
    let mut r = TrialResult {
        trial_index,
        ..Default::default()
    };
    for e in emitters.iter().filter(|e| e.active) {
        let mw = link_budget(e, ctx).map_or(0.0, |p| p.milliwatts());
        match e.kind {
            EmitterKind::Gnb => {
                r.gnb_mw += mw;
                r.active.gnb += 1;
            }
            EmitterKind::RepeaterDown => {
                r.rep_down_mw += mw;
                r.active.repeater_down += 1;
            }
            EmitterKind::Ue => {
                r.ue_mw += mw;
                r.active.ue += 1;
            }
            EmitterKind::RepeaterUp => {
                r.rep_up_mw += mw;
                r.active.repeater_up += 1;
            }
        }
    }
    r
}

/// Closed-form downstream penalty of `f` repeaters per cell, `10·log10(1 + f)`.
pub fn penalty_closed_form(f: u32) -> Decibel {
    Decibel::new(10.0 * (1.0 + f as f64).log10()).expect("finite")
}

/// Serialize dBm-like values, writing non-finite values as `"-inf"` / `"inf"`.
pub mod dbm_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("nan")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "-inf" => Ok(f64::NEG_INFINITY),
                "inf" => Ok(f64::INFINITY),
                other => Err(serde::de::Error::custom(format!("expected number or \"-inf\", got {other}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStatistics {
    pub metric: Metric,
    pub mean_mw: f64,
    #[serde(with = "dbm_serde")]
    pub mean_dbm: f64,
    #[serde(with = "dbm_serde")]
    pub median_dbm: f64,
    pub std_mw: f64,
    #[serde(with = "dbm_serde")]
    pub p90_dbm: f64,
    #[serde(with = "dbm_serde")]
    pub p99_dbm: f64,
    #[serde(with = "dbm_serde")]
    pub p999_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    #[serde(with = "dbm_serde")]
    pub dbm: f64,
    pub cdf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatistics {
    pub trials: usize,
    pub metrics: Vec<MetricStatistics>,
    pub threshold_dbm: Option<f64>,
    /// Fraction of trials whose combined power exceeds the threshold.
    pub exceedance: Option<f64>,
    /// Empirical CDF of the combined power, one point per distinct value.
    pub combined_cdf: Vec<CdfPoint>,
}

impl RunStatistics {
    pub fn metric(&self, m: Metric) -> &MetricStatistics {
        self.metrics
            .iter()
            .find(|s| s.metric == m)
            .expect("every metric is summarized")
    }
}

/// Linear-interpolated percentile of ascending data, `q` in [0, 1].
fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn summarize(metric: Metric, values: &mut [f64]) -> MetricStatistics {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    values.sort_by(|a, b| a.total_cmp(b));
    MetricStatistics {
        metric,
        mean_mw: mean,
        mean_dbm: mw_to_dbm(mean),
        median_dbm: mw_to_dbm(percentile_sorted(values, 0.5)),
        std_mw: var.sqrt(),
        p90_dbm: mw_to_dbm(percentile_sorted(values, 0.90)),
        p99_dbm: mw_to_dbm(percentile_sorted(values, 0.99)),
        p999_dbm: mw_to_dbm(percentile_sorted(values, 0.999)),
    }
}

pub fn run_statistics(results: &[TrialResult], threshold_dbm: Option<f64>) -> Result<RunStatistics> {
    if results.is_empty() {
        return Err(Error::invalid("statistics need at least one trial"));
    }
    let mut buf = Vec::with_capacity(results.len());
    let metrics = Metric::ALL
        .into_iter()
        .map(|m| {
            buf.clear();
            buf.extend(results.iter().map(|r| r.metric_mw(m)));
            summarize(m, &mut buf)
        })
        .collect();

    let mut combined: Vec<f64> = results.iter().map(TrialResult::combined_mw).collect();
    combined.sort_by(|a, b| a.total_cmp(b));
    let n = combined.len() as f64;
    let mut combined_cdf: Vec<CdfPoint> = Vec::new();
    for (i, v) in combined.iter().enumerate() {
        let point = CdfPoint {
            dbm: mw_to_dbm(*v),
            cdf: (i + 1) as f64 / n,
        };
        match combined_cdf.last_mut() {
            Some(last) if last.dbm == point.dbm => *last = point,
            _ => combined_cdf.push(point),
        }
    }

    let exceedance = threshold_dbm.map(|t| results.iter().filter(|r| mw_to_dbm(r.combined_mw()) > t).count() as f64 / n);

    Ok(RunStatistics {
        trials: results.len(),
        metrics,
        threshold_dbm,
        exceedance,
        combined_cdf,
    })
}

/// `10·log10(with / without)` with the degenerate cases resolved: two empty
/// sums compare equal, an empty baseline gives `+inf`.
pub fn ratio_db(with_mw: f64, without_mw: f64) -> f64 {
    match (with_mw > 0.0, without_mw > 0.0) {
        (false, false) => 0.0,
        (true, false) => f64::INFINITY,
        (false, true) => f64::NEG_INFINITY,
        (true, true) => 10.0 * (with_mw / without_mw).log10(),
    }
}

/// Mean-of-linear penalty of one run over its paired baseline.
pub fn penalty_empirical(run_with: &RunStatistics, run_without: &RunStatistics, metric: Metric) -> Result<f64> {
    if run_with.trials != run_without.trials {
        return Err(Error::Pairing(format!(
            "trial counts differ ({} vs {})",
            run_with.trials, run_without.trials
        )));
    }
    Ok(ratio_db(run_with.metric(metric).mean_mw, run_without.metric(metric).mean_mw))
}
