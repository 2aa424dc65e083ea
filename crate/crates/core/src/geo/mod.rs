//! Geographic primitives: WGS84 points, great-circle distance and speed.
//!
//! Distances use a spherical Earth of radius [`EARTH_RADIUS_M`]. At city
//! scale the error against an ellipsoid stays well under half a percent.

mod polyline;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use polyline::{decode_polyline, decode_str, encode_polyline, EncodedPolyline, PolylineError};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Meters spanned by one degree of latitude (or longitude at the equator).
pub const METERS_PER_DEGREE: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("longitude {0} outside [-180, 180]")]
    LongitudeOutOfRange(f64),
    #[error("duration must be positive")]
    ZeroDuration,
    #[error("path must contain at least one point")]
    EmptyPath,
}

/// A WGS84 coordinate in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = GeoError;

    fn try_from(raw: RawPoint) -> Result<Self, Self::Error> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::LatitudeOutOfRange(lat));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::LongitudeOutOfRange(lon));
        }
        Ok(Self { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Great-circle distance to `other` in meters.
    pub fn distance_to(&self, other: &GeoPoint) -> f64 {
        haversine_distance(*self, *other)
    }

    /// True when the two points are within `tolerance_m` meters.
    pub fn near(&self, other: &GeoPoint, tolerance_m: f64) -> bool {
        self.distance_to(other) <= tolerance_m
    }
}

impl std::fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.lat, self.lon)
    }
}

/// Haversine great-circle distance in meters.
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let half_dphi = (b.lat - a.lat).to_radians() / 2.0;
    let half_dlambda = (b.lon - a.lon).to_radians() / 2.0;
    // Squared sines make the expression symmetric in (a, b) bit for bit.
    let h = half_dphi.sin().powi(2) + phi1.cos() * phi2.cos() * half_dlambda.sin().powi(2);
    let h = h.clamp(0.0, 1.0);
    2.0 * EARTH_RADIUS_M * h.sqrt().asin()
}

/// Average speed in km/h for `distance_m` covered in `duration_ms`.
pub fn speed_kmh(distance_m: f64, duration_ms: i64) -> Result<f64, GeoError> {
    if duration_ms <= 0 {
        return Err(GeoError::ZeroDuration);
    }
    // (m / 1000) / (ms / 3_600_000) == m * 3600 / ms, which stays exact at
    // the filter boundaries.
    Ok(distance_m * 3600.0 / duration_ms as f64)
}

/// A non-empty ordered sequence of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<GeoPoint>", into = "Vec<GeoPoint>")]
pub struct Path(Vec<GeoPoint>);

impl Path {
    pub fn new(points: Vec<GeoPoint>) -> Result<Self, GeoError> {
        if points.is_empty() {
            return Err(GeoError::EmptyPath);
        }
        Ok(Self(points))
    }

    pub fn points(&self) -> &[GeoPoint] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> GeoPoint {
        self.0[0]
    }

    pub fn last(&self) -> GeoPoint {
        self.0[self.0.len() - 1]
    }

    pub fn into_points(self) -> Vec<GeoPoint> {
        self.0
    }
}

impl TryFrom<Vec<GeoPoint>> for Path {
    type Error = GeoError;

    fn try_from(points: Vec<GeoPoint>) -> Result<Self, Self::Error> {
        Path::new(points)
    }
}

impl From<Path> for Vec<GeoPoint> {
    fn from(path: Path) -> Self {
        path.0
    }
}
