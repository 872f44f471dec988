//! Spherical-Earth satellite/ground geometry.
//!
//! Ground points live on a local tangent plane (km) centered on the sounder
//! footprint. The satellite sits at the configured elevation as seen from the
//! footprint center, with its ground azimuth along the +x axis. Curvature
//! inside the footprint is ignored; the satellite position itself uses a
//! spherical Earth of radius [`EARTH_RADIUS_KM`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Largest coordinate magnitude accepted for a ground point.
pub const MAX_GROUND_OFFSET_KM: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundPoint {
    pub x_km: f64,
    pub y_km: f64,
}

impl GroundPoint {
    pub const ORIGIN: GroundPoint = GroundPoint { x_km: 0.0, y_km: 0.0 };

    pub fn new(x_km: f64, y_km: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v.abs() <= MAX_GROUND_OFFSET_KM;
        if ok(x_km) && ok(y_km) {
            Ok(GroundPoint { x_km, y_km })
        } else {
            Err(Error::invalid(format!("ground point ({x_km}, {y_km}) km out of bounds")))
        }
    }

    #[inline]
    pub fn radius_km(&self) -> f64 {
        self.x_km.hypot(self.y_km)
    }

    #[inline]
    pub fn distance_km(&self, other: &GroundPoint) -> f64 {
        (self.x_km - other.x_km).hypot(self.y_km - other.y_km)
    }

    /// Azimuth toward `other`, degrees counter-clockwise from +x.
    #[inline]
    pub fn azimuth_to_deg(&self, other: &GroundPoint) -> f64 {
        (other.y_km - self.y_km).atan2(other.x_km - self.x_km).to_degrees()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SounderGeometry {
    pub altitude_km: f64,
    /// Elevation of the satellite seen from the footprint center; 90 is nadir.
    pub elevation_deg: f64,
    pub footprint_radius_km: f64,
}

impl Default for SounderGeometry {
    fn default() -> Self {
        SounderGeometry {
            altitude_km: 824.0,
            elevation_deg: 90.0,
            footprint_radius_km: 25.0,
        }
    }
}

impl SounderGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.altitude_km.is_finite() && self.altitude_km > 0.0) {
            return Err(Error::config("geometry.altitude_km", "must be > 0"));
        }
        if !(self.elevation_deg > 0.0 && self.elevation_deg <= 90.0) {
            return Err(Error::config("geometry.elevation_deg", "must be in (0, 90]"));
        }
        if !(self.footprint_radius_km.is_finite() && self.footprint_radius_km > 0.0) {
            return Err(Error::config("geometry.footprint_radius_km", "must be > 0"));
        }
        Ok(())
    }

    pub fn footprint_area_km2(&self) -> f64 {
        std::f64::consts::PI * self.footprint_radius_km * self.footprint_radius_km
    }

    /// Satellite position in the local frame (x, y, up), km.
    pub fn satellite_position(&self) -> [f64; 3] {
        let el = self.elevation_deg.to_radians();
        // elevation is validated in (0, 90]
        let d = slant_range_unchecked(el, self.altitude_km);
        [d * el.cos(), 0.0, d * el.sin()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LookAngles {
    /// Elevation of the satellite above the emitter's horizon.
    pub emitter_elevation_deg: f64,
    /// Azimuth of the satellite from the emitter, degrees counter-clockwise from +x.
    pub emitter_azimuth_deg: f64,
    /// Angle at the satellite between boresight (footprint center) and the emitter.
    pub sounder_offaxis_deg: f64,
    pub slant_range_km: f64,
}

fn slant_range_unchecked(el_rad: f64, altitude_km: f64) -> f64 {
    let re = EARTH_RADIUS_KM;
    let s = el_rad.sin();
    (re * re * s * s + 2.0 * re * altitude_km + altitude_km * altitude_km).sqrt() - re * s
}

/// Distance from a ground station to a satellite at `altitude_km` seen at
/// `elevation_deg` above the horizon (spherical Earth, law of cosines).
pub fn slant_range(elevation_deg: f64, altitude_km: f64) -> Result<f64> {
    if !(0.0..=90.0).contains(&elevation_deg) {
        return Err(Error::invalid(format!("elevation {elevation_deg} deg outside [0, 90]")));
    }
    if !(altitude_km.is_finite() && altitude_km > 0.0) {
        return Err(Error::invalid(format!("altitude must be > 0, got {altitude_km} km")));
    }
    if elevation_deg == 90.0 {
        return Ok(altitude_km);
    }
    Ok(slant_range_unchecked(elevation_deg.to_radians(), altitude_km))
}

pub fn look_angles(p: &GroundPoint, g: &SounderGeometry) -> LookAngles {
    let sat = g.satellite_position();
    let to_sat = [sat[0] - p.x_km, sat[1] - p.y_km, sat[2]];
    let range = norm(to_sat);
    let emitter_elevation_deg = (to_sat[2] / range).clamp(-1.0, 1.0).asin().to_degrees().clamp(0.0, 90.0);
    let emitter_azimuth_deg = to_sat[1].atan2(to_sat[0]).to_degrees();

    let boresight = [-sat[0], -sat[1], -sat[2]];
    let to_point = [-to_sat[0], -to_sat[1], -to_sat[2]];
    let cross = [
        boresight[1] * to_point[2] - boresight[2] * to_point[1],
        boresight[2] * to_point[0] - boresight[0] * to_point[2],
        boresight[0] * to_point[1] - boresight[1] * to_point[0],
    ];
    // atan2 of |a×b| and a·b stays accurate near zero angle
    let sounder_offaxis_deg = norm(cross).atan2(dot(boresight, to_point)).to_degrees();

    LookAngles {
        emitter_elevation_deg,
        emitter_azimuth_deg,
        sounder_offaxis_deg,
        slant_range_km: range,
    }
}

pub fn in_footprint(p: &GroundPoint, g: &SounderGeometry) -> bool {
    p.radius_km() <= g.footprint_radius_km
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}
