//! Path and atmospheric losses. All losses are positive dB attenuations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::Decibel;

pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PropagationLosses {
    pub l_path_db: f64,
    pub l_gas_db: f64,
    pub l_other_db: f64,
}

impl PropagationLosses {
    pub fn new(l_path_db: f64, l_gas_db: f64, l_other_db: f64) -> Result<Self> {
        for (name, v) in [("path", l_path_db), ("gas", l_gas_db), ("other", l_other_db)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} loss must be >= 0 dB, got {v}")));
            }
        }
        Ok(PropagationLosses {
            l_path_db,
            l_gas_db,
            l_other_db,
        })
    }
}

/// Free-space path loss, `20·log10(4πd/λ)`.
pub fn fspl(frequency_hz: f64, distance_km: f64) -> Result<Decibel> {
    if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
        return Err(Error::invalid(format!("frequency must be > 0, got {frequency_hz} Hz")));
    }
    if !(distance_km.is_finite() && distance_km > 0.0) {
        return Err(Error::invalid(format!("distance must be > 0, got {distance_km} km")));
    }
    Decibel::new(fspl_unchecked(frequency_hz, distance_km))
}

#[inline]
pub(crate) fn fspl_unchecked(frequency_hz: f64, distance_km: f64) -> f64 {
    let wavelength_m = SPEED_OF_LIGHT_M_S / frequency_hz;
    20.0 * (4.0 * std::f64::consts::PI * distance_km * 1e3 / wavelength_m).log10()
}

/// Cosecant slant-path gaseous absorption from a zenith attenuation.
pub fn gaseous_loss(zenith_attenuation_db: f64, elevation_deg: f64) -> Result<Decibel> {
    if !(zenith_attenuation_db.is_finite() && zenith_attenuation_db >= 0.0) {
        return Err(Error::invalid(format!(
            "zenith attenuation must be >= 0, got {zenith_attenuation_db} dB"
        )));
    }
    if !(elevation_deg > 0.0 && elevation_deg <= 90.0) {
        return Err(Error::invalid(format!(
            "elevation must be in (0, 90] for a slant path, got {elevation_deg} deg"
        )));
    }
    if elevation_deg == 90.0 {
        return Decibel::new(zenith_attenuation_db);
    }
    Decibel::new(zenith_attenuation_db / elevation_deg.to_radians().sin())
}

pub fn total_loss(l: &PropagationLosses) -> Decibel {
    Decibel::new(l.l_path_db + l.l_gas_db + l.l_other_db).unwrap_or(Decibel::ZERO)
}
