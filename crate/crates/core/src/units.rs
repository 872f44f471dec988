//! Decibel and linear power arithmetic.
//!
//! Powers are carried as [`DecibelPower`], a dBm level tied to the bandwidth
//! it is integrated over. Dimensionless gains and losses are [`Decibel`].
//! Loss quantities are stored as positive dB attenuations and subtracted in
//! link budgets.
//!
//! Aggregation always happens on linear milliwatts; dB is only the I/O form.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensionless ratio in dB.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Decibel(f64);

impl Decibel {
    pub const ZERO: Decibel = Decibel(0.0);

    pub fn new(value_db: f64) -> Result<Self> {
        if value_db.is_finite() {
            Ok(Decibel(value_db))
        } else {
            Err(Error::invalid(format!("decibel value must be finite, got {value_db}")))
        }
    }

    #[inline]
    pub fn db(self) -> f64 {
        self.0
    }

    /// Linear power ratio, `10^(dB/10)`.
    #[inline]
    pub fn linear(self) -> f64 {
        10f64.powf(self.0 / 10.0)
    }
}

impl TryFrom<f64> for Decibel {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Decibel::new(value)
    }
}

impl From<Decibel> for f64 {
    fn from(d: Decibel) -> f64 {
        d.0
    }
}

impl Add for Decibel {
    type Output = Decibel;
    fn add(self, rhs: Decibel) -> Decibel {
        Decibel(self.0 + rhs.0)
    }
}

impl Sub for Decibel {
    type Output = Decibel;
    fn sub(self, rhs: Decibel) -> Decibel {
        Decibel(self.0 - rhs.0)
    }
}

impl Neg for Decibel {
    type Output = Decibel;
    fn neg(self) -> Decibel {
        Decibel(-self.0)
    }
}

impl fmt::Display for Decibel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} dB", self.0)
    }
}

/// RF power in dBm integrated over `ref_bandwidth_hz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecibelPower {
    dbm: f64,
    ref_bandwidth_hz: f64,
}

impl DecibelPower {
    pub fn new(dbm: f64, ref_bandwidth_hz: f64) -> Result<Self> {
        if !dbm.is_finite() {
            return Err(Error::invalid(format!("power must be finite, got {dbm} dBm")));
        }
        if !(ref_bandwidth_hz.is_finite() && ref_bandwidth_hz > 0.0) {
            return Err(Error::invalid(format!(
                "reference bandwidth must be positive, got {ref_bandwidth_hz} Hz"
            )));
        }
        Ok(DecibelPower {
            dbm,
            ref_bandwidth_hz,
        })
    }

    /// Build from linear milliwatts. Zero power has no dBm representation.
    pub fn from_milliwatts(mw: f64, ref_bandwidth_hz: f64) -> Result<Self> {
        DecibelPower::new(linear_to_db(mw)?.db(), ref_bandwidth_hz)
    }

    #[inline]
    pub fn dbm(&self) -> f64 {
        self.dbm
    }

    #[inline]
    pub fn ref_bandwidth_hz(&self) -> f64 {
        self.ref_bandwidth_hz
    }

    #[inline]
    pub fn milliwatts(&self) -> f64 {
        10f64.powf(self.dbm / 10.0)
    }

    /// Apply a gain (positive) or attenuation (negative) in dB.
    pub fn offset(self, delta: Decibel) -> Self {
        DecibelPower {
            dbm: self.dbm + delta.db(),
            ref_bandwidth_hz: self.ref_bandwidth_hz,
        }
    }
}

impl fmt::Display for DecibelPower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} dBm / {} Hz", self.dbm, self.ref_bandwidth_hz)
    }
}

pub fn db_to_linear(value: Decibel) -> Result<f64> {
    Decibel::new(value.db()).map(Decibel::linear)
}

pub fn linear_to_db(ratio: f64) -> Result<Decibel> {
    if ratio.is_finite() && ratio > 0.0 {
        Ok(Decibel(10.0 * ratio.log10()))
    } else {
        Err(Error::invalid(format!("linear ratio must be positive and finite, got {ratio}")))
    }
}

/// Renormalize an integrated power to another bandwidth.
///
/// Assumes the emission is spectrally flat across both bandwidths, so the
/// level moves by `10·log10(target / source)`.
pub fn bandwidth_rescale(p: DecibelPower, target_bandwidth_hz: f64) -> Result<DecibelPower> {
    if !(target_bandwidth_hz.is_finite() && target_bandwidth_hz > 0.0) {
        return Err(Error::invalid(format!(
            "target bandwidth must be positive, got {target_bandwidth_hz} Hz"
        )));
    }
    let delta = 10.0 * (target_bandwidth_hz / p.ref_bandwidth_hz).log10();
    DecibelPower::new(p.dbm + delta, target_bandwidth_hz)
}

/// Linear-domain sum of powers sharing one reference bandwidth.
pub fn power_sum(powers: &[DecibelPower]) -> Result<DecibelPower> {
    let first = powers
        .first()
        .ok_or_else(|| Error::invalid("cannot sum an empty list of powers"))?;
    let bw = first.ref_bandwidth_hz;
    let mut total_mw = 0.0;
    for p in powers {
        if p.ref_bandwidth_hz != bw {
            return Err(Error::UnitMismatch(format!(
                "cannot sum powers over {} Hz and {} Hz",
                bw, p.ref_bandwidth_hz
            )));
        }
        total_mw += p.milliwatts();
    }
    DecibelPower::from_milliwatts(total_mw, bw)
}

/// dBm for a linear sum that may be empty. Zero maps to negative infinity.
#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    if mw > 0.0 {
        10.0 * mw.log10()
    } else {
        f64::NEG_INFINITY
    }
}
