//! Transmitter and sounder antenna gain patterns.
//!
//! Transmitters use the parabolic-in-dB element model with a uniform
//! rectangular phased array on top. Angles follow the panel-local convention:
//! `theta` is measured from the panel's zenith (90 = in the boresight plane)
//! and `phi` is the azimuth off boresight.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::Decibel;

/// Floor on the array factor so exact nulls stay finite.
const ARRAY_FACTOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementPattern {
    pub g_max_dbi: f64,
    /// Front-to-back ratio.
    pub am_db: f64,
    /// Vertical side-lobe floor.
    pub sla_v_db: f64,
    pub theta_3db_deg: f64,
    pub phi_3db_deg: f64,
}

impl Default for ElementPattern {
    fn default() -> Self {
        ElementPattern {
            g_max_dbi: 5.0,
            am_db: 30.0,
            sla_v_db: 30.0,
            theta_3db_deg: 65.0,
            phi_3db_deg: 65.0,
        }
    }
}

impl ElementPattern {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !self.g_max_dbi.is_finite() {
            return Err(Error::config(format!("{prefix}.g_max_dbi"), "must be finite"));
        }
        if !(self.am_db.is_finite() && self.am_db > 0.0) {
            return Err(Error::config(format!("{prefix}.am_db"), "must be > 0"));
        }
        if !(self.sla_v_db.is_finite() && self.sla_v_db > 0.0) {
            return Err(Error::config(format!("{prefix}.sla_v_db"), "must be > 0"));
        }
        for (name, v) in [("theta_3db_deg", self.theta_3db_deg), ("phi_3db_deg", self.phi_3db_deg)] {
            if !(v > 0.0 && v < 180.0) {
                return Err(Error::config(format!("{prefix}.{name}"), "must be in (0, 180)"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    /// Elements along the panel's vertical axis.
    pub rows: u32,
    /// Elements along the panel's horizontal axis.
    pub cols: u32,
    pub spacing_wavelengths: f64,
    #[serde(default = "broadside_theta")]
    pub steer_theta_deg: f64,
    #[serde(default)]
    pub steer_phi_deg: f64,
    #[serde(default)]
    pub mechanical_downtilt_deg: f64,
}

fn broadside_theta() -> f64 {
    90.0
}

impl ArrayConfig {
    pub fn square(n: u32, downtilt_deg: f64) -> Self {
        ArrayConfig {
            rows: n,
            cols: n,
            spacing_wavelengths: 0.5,
            steer_theta_deg: 90.0,
            steer_phi_deg: 0.0,
            mechanical_downtilt_deg: downtilt_deg,
        }
    }

    pub fn elements(&self) -> u32 {
        self.rows * self.cols
    }

    pub fn steered(mut self, theta_deg: f64, phi_deg: f64) -> Self {
        self.steer_theta_deg = theta_deg;
        self.steer_phi_deg = phi_deg;
        self
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        if self.rows < 1 || self.cols < 1 {
            return Err(Error::config(format!("{prefix}.rows"), "rows and cols must be >= 1"));
        }
        if !(self.spacing_wavelengths.is_finite() && self.spacing_wavelengths > 0.0) {
            return Err(Error::config(format!("{prefix}.spacing_wavelengths"), "must be > 0"));
        }
        if !self.mechanical_downtilt_deg.is_finite() || self.mechanical_downtilt_deg.abs() > 90.0 {
            return Err(Error::config(
                format!("{prefix}.mechanical_downtilt_deg"),
                "must be in [-90, 90]",
            ));
        }
        check_angles(self.steer_theta_deg, self.steer_phi_deg)
            .map_err(|e| Error::config(format!("{prefix}.steer_theta_deg"), e.to_string()))
    }
}

/// Quadratic-in-dB sounder beam with a far-sidelobe floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SounderPattern {
    pub g_max_dbi: f64,
    pub rolloff_coeff_db_per_deg2: f64,
    pub floor_dbi: f64,
}

impl Default for SounderPattern {
    fn default() -> Self {
        SounderPattern {
            g_max_dbi: 35.0,
            rolloff_coeff_db_per_deg2: 1.0,
            floor_dbi: -10.0,
        }
    }
}

impl SounderPattern {
    pub fn validate(&self) -> Result<()> {
        if !(self.g_max_dbi.is_finite() && self.floor_dbi.is_finite() && self.g_max_dbi > self.floor_dbi) {
            return Err(Error::config("sounder.g_max_dbi", "must exceed floor_dbi"));
        }
        if !(self.rolloff_coeff_db_per_deg2.is_finite() && self.rolloff_coeff_db_per_deg2 >= 0.0) {
            return Err(Error::config("sounder.rolloff_coeff_db_per_deg2", "must be >= 0"));
        }
        Ok(())
    }
}

/// How out-of-band emission couples into the transmit antenna.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OobeCorrelation {
    /// OOBE radiates through the steered composite array pattern.
    Correlated,
    /// OOBE radiates through a single element pattern, TRP conserved.
    #[default]
    Uncorrelated,
}

fn check_angles(theta_deg: f64, phi_deg: f64) -> Result<()> {
    if !(0.0..=180.0).contains(&theta_deg) {
        return Err(Error::invalid(format!("theta {theta_deg} deg outside [0, 180]")));
    }
    if !(-180.0..=180.0).contains(&phi_deg) {
        return Err(Error::invalid(format!("phi {phi_deg} deg outside [-180, 180]")));
    }
    Ok(())
}

pub fn element_gain(p: &ElementPattern, theta_deg: f64, phi_deg: f64) -> Result<Decibel> {
    check_angles(theta_deg, phi_deg)?;
    Decibel::new(element_gain_unchecked(p, theta_deg, phi_deg))
}

pub(crate) fn element_gain_unchecked(p: &ElementPattern, theta_deg: f64, phi_deg: f64) -> f64 {
    let a_h = -(12.0 * (phi_deg / p.phi_3db_deg).powi(2)).min(p.am_db);
    let a_v = -(12.0 * ((theta_deg - 90.0) / p.theta_3db_deg).powi(2)).min(p.sla_v_db);
    p.g_max_dbi - (-(a_h + a_v)).min(p.am_db)
}

fn element_phase(theta: f64, phi: f64, spacing: f64, row: u32, col: u32) -> f64 {
    let tau = std::f64::consts::TAU;
    tau * spacing * (row as f64 * theta.cos() + col as f64 * theta.sin() * phi.sin())
}

/// Normalized array factor power: `N` toward the steering direction.
fn array_factor(a: &ArrayConfig, theta_deg: f64, phi_deg: f64) -> f64 {
    let (t, p) = (theta_deg.to_radians(), phi_deg.to_radians());
    let (ts, ps) = (a.steer_theta_deg.to_radians(), a.steer_phi_deg.to_radians());
    let mut sum = Complex64::new(0.0, 0.0);
    for row in 0..a.rows {
        for col in 0..a.cols {
            let delta = element_phase(t, p, a.spacing_wavelengths, row, col)
                - element_phase(ts, ps, a.spacing_wavelengths, row, col);
            sum += Complex64::from_polar(1.0, delta);
        }
    }
    sum.norm_sqr() / a.elements() as f64
}

/// Composite gain of a uniformly weighted, phase-steered rectangular array.
pub fn array_gain(e: &ElementPattern, a: &ArrayConfig, theta_deg: f64, phi_deg: f64) -> Result<Decibel> {
    check_angles(theta_deg, phi_deg)?;
    Decibel::new(array_gain_unchecked(e, a, theta_deg, phi_deg))
}

pub(crate) fn array_gain_unchecked(e: &ElementPattern, a: &ArrayConfig, theta_deg: f64, phi_deg: f64) -> f64 {
    let element = element_gain_unchecked(e, theta_deg, phi_deg);
    if a.elements() == 1 {
        return element;
    }
    element + 10.0 * array_factor(a, theta_deg, phi_deg).max(ARRAY_FACTOR_FLOOR).log10()
}

pub fn sounder_gain(s: &SounderPattern, offaxis_deg: f64) -> Result<Decibel> {
    if !(offaxis_deg.is_finite() && offaxis_deg >= 0.0) {
        return Err(Error::invalid(format!("off-axis angle must be >= 0, got {offaxis_deg}")));
    }
    Decibel::new((s.g_max_dbi - s.rolloff_coeff_db_per_deg2 * offaxis_deg * offaxis_deg).max(s.floor_dbi))
}

/// Orientation of a transmit panel in the local ground frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PanelPointing {
    /// Boresight azimuth, degrees counter-clockwise from +x.
    pub azimuth_deg: f64,
    /// Positive tilts the boresight below the horizon.
    pub downtilt_deg: f64,
}

/// Map a direction given as global (azimuth, elevation) into the panel's
/// (theta, phi) frame.
pub fn to_panel_frame(pointing: &PanelPointing, azimuth_deg: f64, elevation_deg: f64) -> (f64, f64) {
    let (el, rel_az) = (elevation_deg.to_radians(), (azimuth_deg - pointing.azimuth_deg).to_radians());
    let x = el.cos() * rel_az.cos();
    let y = el.cos() * rel_az.sin();
    let z = el.sin();
    let (st, ct) = pointing.downtilt_deg.to_radians().sin_cos();
    let xl = x * ct - z * st;
    let zl = x * st + z * ct;
    let theta = zl.clamp(-1.0, 1.0).acos().to_degrees();
    let phi = y.atan2(xl).to_degrees();
    (theta.clamp(0.0, 180.0), phi.clamp(-180.0, 180.0))
}
