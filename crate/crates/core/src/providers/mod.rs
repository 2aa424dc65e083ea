//! Route providers: driving routes with congestion data, transit
//! itineraries, walk routes and ride-hail estimates behind one trait.

mod cache;
pub mod http;
mod offline;
mod ratelimit;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{encode_polyline, EncodedPolyline, GeoPoint};
use crate::router::{RouteStep, TravelMode, SAME_PLACE_M};

pub use cache::{CacheKey, CachedProvider, ResponseCache};
pub use offline::{CityConfig, SyntheticCity, Tariff};
pub use ratelimit::TokenBucket;

pub const WALK_SPEED_KMH: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum ProviderError {
    #[error("no route: {0}")]
    NoRoute(String),
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("invalid provider response: {0}")]
    InvalidResponse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingStep {
    pub origin: GeoPoint,
    pub destination: GeoPoint,
    pub distance_m: f64,
    pub free_flow_duration_s: f64,
    pub live_duration_s: f64,
    pub polyline: EncodedPolyline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingRoute {
    pub steps: Vec<DrivingStep>,
}

impl DrivingRoute {
    pub fn is_contiguous(&self) -> bool {
        self.steps
            .windows(2)
            .all(|w| w[0].destination.near(&w[1].origin, SAME_PLACE_M))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitItinerary {
    pub steps: Vec<RouteStep>,
    pub boardings: u32,
    pub initial_wait_s: f64,
}

impl TransitItinerary {
    pub fn new(steps: Vec<RouteStep>) -> Self {
        let boardings = steps
            .iter()
            .filter(|s| s.mode == TravelMode::Transit)
            .count() as u32;
        let initial_wait_s = steps
            .iter()
            .find(|s| s.mode == TravelMode::Transit)
            .map_or(0.0, |s| s.wait_s);
        Self {
            steps,
            boardings,
            initial_wait_s,
        }
    }

    pub fn is_contiguous(&self) -> bool {
        self.steps
            .windows(2)
            .all(|w| w[0].destination.near(&w[1].origin, SAME_PLACE_M))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RideEstimate {
    pub price: f64,
    pub pickup_wait_s: f64,
    pub duration_s: f64,
    pub distance_m: f64,
    pub polyline: EncodedPolyline,
}

impl RideEstimate {
    pub fn into_step(self, origin: GeoPoint, destination: GeoPoint) -> RouteStep {
        RouteStep {
            mode: TravelMode::RideHail,
            origin,
            destination,
            duration_s: self.duration_s,
            distance_m: self.distance_m,
            wait_s: self.pickup_wait_s,
            price: self.price,
            polyline: self.polyline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Offline,
    Http,
}

impl ProviderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProviderKind::Offline => "offline",
            ProviderKind::Http => "http",
        }
    }
}

/// Base URLs of the three HTTP roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaseUrls {
    pub driving: String,
    pub transit: String,
    pub ride: String,
}

impl Default for BaseUrls {
    fn default() -> Self {
        Self {
            driving: "https://api.tomtom.com/routing/1/calculateRoute".into(),
            transit: "https://maps.googleapis.com/maps/api/directions/json".into(),
            ride: "https://api.uber.com/v1.2/estimates".into(),
        }
    }
}

/// Environment variables holding the HTTP credentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KeyEnvNames {
    pub driving: String,
    pub transit: String,
    pub ride: String,
}

impl Default for KeyEnvNames {
    fn default() -> Self {
        Self {
            driving: "URBANFLOW_TOMTOM_KEY".into(),
            transit: "URBANFLOW_GOOGLE_KEY".into(),
            ride: "URBANFLOW_UBER_TOKEN".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub base_urls: BaseUrls,
    pub api_key_env_names: KeyEnvNames,
    /// Requests per second across all HTTP roles.
    pub rate_limit: f64,
    pub cache_dir: Option<PathBuf>,
    pub seed: u64,
    pub city: CityConfig,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Offline,
            base_urls: BaseUrls::default(),
            api_key_env_names: KeyEnvNames::default(),
            rate_limit: 5.0,
            cache_dir: None,
            seed: 0,
            city: CityConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderConfigError {
    #[error("rate limit must be positive, got {0}")]
    RateLimit(f64),
    #[error("invalid city: {0}")]
    City(String),
    #[error("provider kind {0} is not available in this build")]
    Unsupported(&'static str),
    #[error("cannot create cache directory: {0}")]
    Cache(String),
    #[error("cannot build HTTP client: {0}")]
    Client(String),
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), ProviderConfigError> {
        if !(self.rate_limit > 0.0) {
            return Err(ProviderConfigError::RateLimit(self.rate_limit));
        }
        self.city.validate().map_err(ProviderConfigError::City)
    }
}

/// Uniform contract every provider meets. Implementations are callable from
/// several threads at once.
pub trait RouteProvider: Send + Sync {
    fn kind(&self) -> ProviderKind;

    fn driving_way(
        &self,
        origin: GeoPoint,
        destination: GeoPoint,
    ) -> Result<DrivingRoute, ProviderError>;

    fn transit_route(
        &self,
        origin: GeoPoint,
        destination: GeoPoint,
    ) -> Result<TransitItinerary, ProviderError>;

    fn ride_estimate(
        &self,
        origin: GeoPoint,
        destination: GeoPoint,
    ) -> Result<RideEstimate, ProviderError>;

    fn walk_route(&self, origin: GeoPoint, destination: GeoPoint) -> RouteStep {
        walk_step(origin, destination)
    }
}

impl<P: RouteProvider + ?Sized> RouteProvider for Box<P> {
    fn kind(&self) -> ProviderKind {
        (**self).kind()
    }
    fn driving_way(&self, o: GeoPoint, d: GeoPoint) -> Result<DrivingRoute, ProviderError> {
        (**self).driving_way(o, d)
    }
    fn transit_route(&self, o: GeoPoint, d: GeoPoint) -> Result<TransitItinerary, ProviderError> {
        (**self).transit_route(o, d)
    }
    fn ride_estimate(&self, o: GeoPoint, d: GeoPoint) -> Result<RideEstimate, ProviderError> {
        (**self).ride_estimate(o, d)
    }
    fn walk_route(&self, o: GeoPoint, d: GeoPoint) -> RouteStep {
        (**self).walk_route(o, d)
    }
}

/// Straight-line walk at [`WALK_SPEED_KMH`].
pub fn walk_step(origin: GeoPoint, destination: GeoPoint) -> RouteStep {
    let distance_m = origin.distance_to(&destination);
    RouteStep {
        mode: TravelMode::Walk,
        origin,
        destination,
        duration_s: distance_m * 3.6 / WALK_SPEED_KMH,
        distance_m,
        wait_s: 0.0,
        price: 0.0,
        polyline: encode_polyline(&[origin, destination]).expect("two points"),
    }
}

/// Build the provider described by `cfg`, wrapped in a response cache when
/// a cache directory is configured.
pub fn build_provider(cfg: &ProviderConfig) -> Result<Box<dyn RouteProvider>, ProviderConfigError> {
    cfg.validate()?;
    let inner: Box<dyn RouteProvider> = match cfg.kind {
        ProviderKind::Offline => Box::new(SyntheticCity::new(cfg.city.clone(), cfg.seed)),
        ProviderKind::Http => http::build(cfg)?,
    };
    match &cfg.cache_dir {
        Some(dir) => {
            let cache =
                ResponseCache::open(dir).map_err(|e| ProviderConfigError::Cache(e.to_string()))?;
            Ok(Box::new(CachedProvider::new(inner, cache)))
        }
        None => Ok(inner),
    }
}
