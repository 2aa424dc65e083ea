//! HTTP adapters: traffic-aware driving routes (TomTom routing), transit
//! directions (Google Directions) and ride estimates (Uber estimates).
//!
//! Response parsing is plain functions over JSON text, always compiled.
//! Network access is only built with the `http` feature.

use serde::Deserialize;

use super::{DrivingRoute, DrivingStep, ProviderError, RideEstimate, TransitItinerary};
use crate::geo::{encode_polyline, EncodedPolyline, GeoPoint};
use crate::router::{RouteStep, TravelMode};

/// Transit wait assumed when a step carries no headway.
pub const DEFAULT_TRANSIT_WAIT_S: f64 = 300.0;
const METERS_PER_MILE: f64 = 1609.344;

fn invalid(msg: impl std::fmt::Display) -> ProviderError {
    ProviderError::InvalidResponse(msg.to_string())
}

fn point(lat: f64, lon: f64) -> Result<GeoPoint, ProviderError> {
    GeoPoint::new(lat, lon).map_err(invalid)
}

fn non_negative(value: f64, what: &str) -> Result<f64, ProviderError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(invalid(format!(
            "{what} must be a non-negative number, got {value}"
        )))
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct TomTomResponse {
    #[serde(default)]
    routes: Vec<TomTomRoute>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct TomTomRoute {
    legs: Vec<TomTomLeg>,
    #[serde(default)]
    sections: Vec<TomTomSection>,
    guidance: TomTomGuidance,
}

#[derive(Deserialize)]
struct TomTomLeg {
    points: Vec<TomTomPoint>,
}

#[derive(Deserialize, Clone, Copy)]
struct TomTomPoint {
    latitude: f64,
    longitude: f64,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct TomTomSection {
    start_point_index: usize,
    end_point_index: usize,
    section_type: String,
    #[serde(default)]
    delay_in_seconds: f64,
}

#[derive(Deserialize)]
struct TomTomGuidance {
    instructions: Vec<TomTomInstruction>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct TomTomInstruction {
    route_offset_in_meters: f64,
    travel_time_in_seconds: f64,
    point_index: usize,
}

/// Parse a TomTom `calculateRoute` response with guidance and traffic
/// sections. Each stretch between consecutive guidance instructions becomes
/// one step; traffic delays are spread over the points they cover.
pub fn parse_tomtom_route(body: &str) -> Result<DrivingRoute, ProviderError> {
    let response: TomTomResponse = serde_json::from_str(body).map_err(invalid)?;
    let Some(route) = response.routes.into_iter().next() else {
        return Err(ProviderError::NoRoute("response holds no routes".into()));
    };
    let points: Vec<GeoPoint> = route
        .legs
        .iter()
        .flat_map(|l| l.points.iter())
        .map(|p| point(p.latitude, p.longitude))
        .collect::<Result<_, _>>()?;
    if points.len() < 2 {
        return Err(invalid("route has fewer than two points"));
    }
    let instructions = route.guidance.instructions;
    for w in instructions.windows(2) {
        if w[1].point_index < w[0].point_index
            || !(w[1].route_offset_in_meters >= w[0].route_offset_in_meters)
            || !(w[1].travel_time_in_seconds >= w[0].travel_time_in_seconds)
        {
            return Err(invalid("guidance instructions are out of order"));
        }
    }
    if instructions.iter().any(|i| i.point_index >= points.len()) {
        return Err(invalid("instruction point index out of range"));
    }
    let traffic: Vec<&TomTomSection> = route
        .sections
        .iter()
        .filter(|s| s.section_type == "TRAFFIC" && s.end_point_index > s.start_point_index)
        .collect();

    let mut steps = Vec::new();
    for w in instructions.windows(2) {
        let (a, b) = (w[0].point_index, w[1].point_index);
        let distance_m = w[1].route_offset_in_meters - w[0].route_offset_in_meters;
        if b == a || !(distance_m > 0.0) {
            continue;
        }
        let live = non_negative(
            w[1].travel_time_in_seconds - w[0].travel_time_in_seconds,
            "travel time",
        )?;
        let delay: f64 = traffic
            .iter()
            .map(|s| {
                let overlap = b
                    .min(s.end_point_index)
                    .saturating_sub(a.max(s.start_point_index));
                s.delay_in_seconds.max(0.0) * overlap as f64
                    / (s.end_point_index - s.start_point_index) as f64
            })
            .sum();
        let live = live.max(1.0);
        let free = (live - delay).clamp(1.0, live);
        steps.push(DrivingStep {
            origin: points[a],
            destination: points[b],
            distance_m,
            free_flow_duration_s: free,
            live_duration_s: live,
            polyline: encode_polyline(&points[a..=b]).map_err(invalid)?,
        });
    }
    Ok(DrivingRoute { steps })
}

#[derive(Deserialize)]
struct GoogleResponse {
    status: String,
    #[serde(default)]
    routes: Vec<GoogleRoute>,
    #[serde(default)]
    error_message: Option<String>,
}

#[derive(Deserialize)]
struct GoogleRoute {
    legs: Vec<GoogleLeg>,
}

#[derive(Deserialize)]
struct GoogleLeg {
    steps: Vec<GoogleStep>,
}

#[derive(Deserialize)]
struct GoogleStep {
    travel_mode: String,
    distance: GoogleValue,
    duration: GoogleValue,
    start_location: GoogleLatLng,
    end_location: GoogleLatLng,
    polyline: GooglePolyline,
    #[serde(default)]
    transit_details: Option<GoogleTransitDetails>,
}

#[derive(Deserialize)]
struct GoogleValue {
    value: f64,
}

#[derive(Deserialize)]
struct GoogleLatLng {
    lat: f64,
    lng: f64,
}

#[derive(Deserialize)]
struct GooglePolyline {
    points: String,
}

#[derive(Deserialize)]
struct GoogleTransitDetails {
    #[serde(default)]
    headway: Option<f64>,
}

/// Parse a Google Directions response requested with `mode=transit`.
pub fn parse_google_transit(body: &str) -> Result<TransitItinerary, ProviderError> {
    let response: GoogleResponse = serde_json::from_str(body).map_err(invalid)?;
    match response.status.as_str() {
        "OK" => {}
        "ZERO_RESULTS" | "NOT_FOUND" => return Err(ProviderError::NoRoute(response.status)),
        other => {
            let detail = response.error_message.unwrap_or_default();
            return Err(ProviderError::ProviderUnavailable(
                format!("{other} {detail}").trim().to_string(),
            ));
        }
    }
    let Some(route) = response.routes.into_iter().next() else {
        return Err(ProviderError::NoRoute("response holds no routes".into()));
    };
    let mut steps = Vec::new();
    for step in route.legs.into_iter().flat_map(|l| l.steps) {
        let mode = match step.travel_mode.as_str() {
            "WALKING" => TravelMode::Walk,
            "TRANSIT" => TravelMode::Transit,
            other => return Err(invalid(format!("unexpected travel mode {other}"))),
        };
        let wait_s = match (mode, step.transit_details.and_then(|t| t.headway)) {
            (TravelMode::Transit, Some(h)) => non_negative(h, "headway")? / 2.0,
            (TravelMode::Transit, None) => DEFAULT_TRANSIT_WAIT_S,
            _ => 0.0,
        };
        steps.push(RouteStep {
            mode,
            origin: point(step.start_location.lat, step.start_location.lng)?,
            destination: point(step.end_location.lat, step.end_location.lng)?,
            duration_s: non_negative(step.duration.value, "duration")?,
            distance_m: non_negative(step.distance.value, "distance")?,
            wait_s,
            price: 0.0,
            polyline: EncodedPolyline::new(step.polyline.points).map_err(invalid)?,
        });
    }
    Ok(TransitItinerary::new(steps))
}

#[derive(Deserialize)]
struct UberPrices {
    prices: Vec<UberPrice>,
}

#[derive(Deserialize)]
struct UberPrice {
    display_name: String,
    #[serde(default)]
    low_estimate: Option<f64>,
    #[serde(default)]
    high_estimate: Option<f64>,
    duration: f64,
    distance: f64,
}

#[derive(Deserialize)]
struct UberTimes {
    times: Vec<UberTime>,
}

#[derive(Deserialize)]
struct UberTime {
    display_name: String,
    estimate: f64,
}

/// Parse Uber price and time estimates for `product`, falling back to the
/// first product listed. Distances arrive in miles.
pub fn parse_uber_estimate(
    prices_body: &str,
    times_body: &str,
    product: &str,
    origin: GeoPoint,
    destination: GeoPoint,
) -> Result<RideEstimate, ProviderError> {
    let prices: UberPrices = serde_json::from_str(prices_body).map_err(invalid)?;
    let times: UberTimes = serde_json::from_str(times_body).map_err(invalid)?;
    let price = prices
        .prices
        .iter()
        .find(|p| p.display_name == product)
        .or_else(|| prices.prices.first())
        .ok_or_else(|| ProviderError::NoRoute("no ride products available".into()))?;
    let wait = times
        .times
        .iter()
        .find(|t| t.display_name == price.display_name)
        .or_else(|| times.times.first())
        .ok_or_else(|| ProviderError::NoRoute("no pickup estimate available".into()))?;
    let (low, high) = match (price.low_estimate, price.high_estimate) {
        (Some(l), Some(h)) => (
            non_negative(l, "low estimate")?,
            non_negative(h, "high estimate")?,
        ),
        _ => return Err(invalid("price estimate missing")),
    };
    Ok(RideEstimate {
        price: (low + high) / 2.0,
        pickup_wait_s: non_negative(wait.estimate, "pickup estimate")?,
        duration_s: non_negative(price.duration, "duration")?,
        distance_m: non_negative(price.distance, "distance")? * METERS_PER_MILE,
        polyline: encode_polyline(&[origin, destination]).map_err(invalid)?,
    })
}

#[cfg(feature = "http")]
mod client {
    use std::time::Duration;

    use super::*;
    use crate::providers::{ProviderConfig, ProviderKind, RouteProvider, TokenBucket};

    /// Provider backed by live web APIs.
    pub struct HttpProvider {
        client: reqwest::blocking::Client,
        cfg: ProviderConfig,
        limiter: TokenBucket,
        product: String,
    }

    impl HttpProvider {
        pub fn new(cfg: ProviderConfig) -> Result<Self, ProviderError> {
            let client = reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(30))
                .build()
                .map_err(|e| ProviderError::ProviderUnavailable(e.to_string()))?;
            let limiter = TokenBucket::new(cfg.rate_limit, cfg.rate_limit.max(1.0));
            Ok(Self {
                client,
                cfg,
                limiter,
                product: "UberX".into(),
            })
        }

        fn key(&self, var: &str) -> Result<String, ProviderError> {
            std::env::var(var)
                .map_err(|_| ProviderError::ProviderUnavailable(format!("{var} is not set")))
        }

        fn get(&self, request: reqwest::blocking::RequestBuilder) -> Result<String, ProviderError> {
            self.limiter.acquire();
            let response = request
                .send()
                .map_err(|e| ProviderError::ProviderUnavailable(e.to_string()))?;
            let status = response.status();
            let body = response
                .text()
                .map_err(|e| ProviderError::ProviderUnavailable(e.to_string()))?;
            if status.is_success() {
                Ok(body)
            } else if status.as_u16() == 404 || status.as_u16() == 400 {
                Err(ProviderError::NoRoute(format!("HTTP {status}")))
            } else {
                Err(ProviderError::ProviderUnavailable(format!("HTTP {status}")))
            }
        }
    }

    fn pair(p: GeoPoint) -> String {
        format!("{},{}", p.lat(), p.lon())
    }

    impl RouteProvider for HttpProvider {
        fn kind(&self) -> ProviderKind {
            ProviderKind::Http
        }

        fn driving_way(&self, o: GeoPoint, d: GeoPoint) -> Result<DrivingRoute, ProviderError> {
            let key = self.key(&self.cfg.api_key_env_names.driving)?;
            let url = format!(
                "{}/{}:{}/json",
                self.cfg.base_urls.driving,
                pair(o),
                pair(d)
            );
            let body = self.get(self.client.get(url).query(&[
                ("key", key.as_str()),
                ("traffic", "true"),
                ("instructionsType", "coded"),
                ("sectionType", "traffic"),
            ]))?;
            parse_tomtom_route(&body)
        }

        fn transit_route(
            &self,
            o: GeoPoint,
            d: GeoPoint,
        ) -> Result<TransitItinerary, ProviderError> {
            let key = self.key(&self.cfg.api_key_env_names.transit)?;
            let body = self.get(self.client.get(&self.cfg.base_urls.transit).query(&[
                ("origin", pair(o)),
                ("destination", pair(d)),
                ("mode", "transit".into()),
                ("key", key),
            ]))?;
            parse_google_transit(&body)
        }

        fn ride_estimate(&self, o: GeoPoint, d: GeoPoint) -> Result<RideEstimate, ProviderError> {
            let token = self.key(&self.cfg.api_key_env_names.ride)?;
            let base = &self.cfg.base_urls.ride;
            let coords = [
                ("start_latitude", o.lat().to_string()),
                ("start_longitude", o.lon().to_string()),
                ("end_latitude", d.lat().to_string()),
                ("end_longitude", d.lon().to_string()),
            ];
            let prices = self.get(
                self.client
                    .get(format!("{base}/price"))
                    .bearer_auth(&token)
                    .query(&coords),
            )?;
            let times = self.get(
                self.client
                    .get(format!("{base}/time"))
                    .bearer_auth(&token)
                    .query(&coords[..2]),
            )?;
            parse_uber_estimate(&prices, &times, &self.product, o, d)
        }
    }
}

#[cfg(feature = "http")]
pub use client::HttpProvider;

#[cfg(feature = "http")]
pub(crate) fn build(
    cfg: &super::ProviderConfig,
) -> Result<Box<dyn super::RouteProvider>, super::ProviderConfigError> {
    HttpProvider::new(cfg.clone())
        .map(|p| Box::new(p) as Box<dyn super::RouteProvider>)
        .map_err(|e| super::ProviderConfigError::Client(e.to_string()))
}

#[cfg(not(feature = "http"))]
pub(crate) fn build(
    _cfg: &super::ProviderConfig,
) -> Result<Box<dyn super::RouteProvider>, super::ProviderConfigError> {
    Err(super::ProviderConfigError::Unsupported("http"))
}
