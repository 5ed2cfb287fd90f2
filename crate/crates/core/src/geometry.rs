//! Planar points, Manhattan distance and the Mercator ingestion transform.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A location on the projected plane.
///
/// Serialized as a two-element array `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// `|a.x - b.x| + |a.y - b.y|`
#[inline]
pub fn manhattan(a: Point, b: Point) -> f64 {
    (a.x - b.x).abs() + (a.y - b.y).abs()
}

/// Largest latitude (degrees) accepted by [`mercator_project`].
pub const MAX_LATITUDE_DEG: f64 = 85.06;

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("latitude {0} is outside the projectable range (|lat| < {MAX_LATITUDE_DEG})")]
    Latitude(f64),
    #[error("longitude {0} is outside [-180, 180]")]
    Longitude(f64),
}

/// Constants of the spherical Mercator transform.
///
/// `x = scale * (lon - lon0) + x_offset`, `y = scale * ln(tan(pi/4 + lat/2)) + y_offset`
/// with angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub lon0_deg: f64,
    pub scale: f64,
    pub x_offset: f64,
    pub y_offset: f64,
}

impl ProjectionConfig {
    /// Scale such that one projected unit is roughly one kilometre at `central_lat_deg`.
    pub fn km_at(central_lat_deg: f64, lon0_deg: f64) -> Self {
        Self {
            lon0_deg,
            scale: EARTH_RADIUS_KM * central_lat_deg.to_radians().cos(),
            x_offset: 0.0,
            y_offset: 0.0,
        }
    }

    /// Inverse of [`mercator_project`], returning `(lat_deg, lon_deg)`.
    pub fn unproject(&self, p: Point) -> (f64, f64) {
        let lon = (p.x - self.x_offset) / self.scale + self.lon0_deg.to_radians();
        let lat = 2.0 * ((p.y - self.y_offset) / self.scale).exp().atan() - std::f64::consts::FRAC_PI_2;
        (lat.to_degrees(), lon.to_degrees())
    }
}

impl Default for ProjectionConfig {
    /// Centred on Chengdu (30.66 N, 104.06 E), the city covered by the public
    /// ride-hailing trace this workbench mimics.
    fn default() -> Self {
        Self::km_at(30.66, 104.06)
    }
}

pub fn mercator_project(
    lat_deg: f64,
    lon_deg: f64,
    config: &ProjectionConfig,
) -> Result<Point, ProjectionError> {
    if !lat_deg.is_finite() || lat_deg.abs() >= MAX_LATITUDE_DEG {
        return Err(ProjectionError::Latitude(lat_deg));
    }
    if !lon_deg.is_finite() || lon_deg.abs() > 180.0 {
        return Err(ProjectionError::Longitude(lon_deg));
    }
    let lat = lat_deg.to_radians();
    let x = config.scale * (lon_deg.to_radians() - config.lon0_deg.to_radians()) + config.x_offset;
    let y = config.scale * (std::f64::consts::FRAC_PI_4 + lat / 2.0).tan().ln() + config.y_offset;
    Ok(Point::new(x, y))
}
