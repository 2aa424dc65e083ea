//! Multimodal route options for one origin-destination pair.
//!
//! A traffic-aware driving route serves as the reference. Its congested
//! steps contribute transition candidates: places where a traveller could
//! leave a ride-hail car for public transit (step origins) or the reverse
//! (step destinations). The trip endpoints are always candidates, which
//! guarantees the plain transit and ride-hail options are produced too.
//!
//! For every (start, end) candidate pair the trip splits into three legs,
//! origin to start, start to end and end to destination, and each leg gets
//! a mode: the outer legs walk (when short enough) or ride, the middle leg
//! rides transit or ride-hail.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{EncodedPolyline, GeoPoint};
use crate::providers::{DrivingRoute, DrivingStep, ProviderError, RouteProvider};
use crate::report::{compute_metrics, OptionMetrics};

/// Two points closer than this are treated as the same place.
pub const SAME_PLACE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TravelMode {
    Walk,
    Transit,
    RideHail,
    /// Only used by the reference driving route.
    Drive,
}

impl TravelMode {
    pub const ALL: [TravelMode; 4] = [
        TravelMode::Walk,
        TravelMode::Transit,
        TravelMode::RideHail,
        TravelMode::Drive,
    ];

    pub fn is_motorized(self) -> bool {
        !matches!(self, TravelMode::Walk)
    }
}

/// One leg of a route on a single mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteStep {
    pub mode: TravelMode,
    #[serde(rename = "o")]
    pub origin: GeoPoint,
    #[serde(rename = "d")]
    pub destination: GeoPoint,
    pub duration_s: f64,
    pub distance_m: f64,
    /// Time spent waiting before the step starts (pickup, headway).
    #[serde(default)]
    pub wait_s: f64,
    /// Ride-hail fare for the step. Transit fares are applied per boarding
    /// when metrics are computed, so transit steps carry 0 here.
    #[serde(default)]
    pub price: f64,
    pub polyline: EncodedPolyline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RouteLabel {
    Transit,
    RideHail,
    Hybrid1,
    Hybrid2,
    Other,
}

impl RouteLabel {
    /// Labels that appear in comparisons, in presentation order.
    pub const COMPARED: [RouteLabel; 4] = [
        RouteLabel::Transit,
        RouteLabel::RideHail,
        RouteLabel::Hybrid1,
        RouteLabel::Hybrid2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RouteLabel::Transit => "Transit",
            RouteLabel::RideHail => "RideHail",
            RouteLabel::Hybrid1 => "Hybrid1",
            RouteLabel::Hybrid2 => "Hybrid2",
            RouteLabel::Other => "Other",
        }
    }
}

/// Mode chosen for one of the three legs of a candidate split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LegChoice {
    /// The leg has zero length.
    Skip,
    Walk,
    Transit,
    RideHail,
}

/// How an option was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum OptionKind {
    PureTransit,
    PureRideHail,
    Mixed {
        start_index: usize,
        end_index: usize,
        legs: [LegChoice; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteOption {
    pub label: RouteLabel,
    pub metrics: OptionMetrics,
    pub source: OptionKind,
    pub steps: Vec<RouteStep>,
}

impl RouteOption {
    pub fn new(source: OptionKind, steps: Vec<RouteStep>, fare: f64) -> Self {
        let metrics = compute_metrics(&steps, fare);
        Self {
            label: RouteLabel::Other,
            metrics,
            source,
            steps,
        }
    }

    /// Consecutive steps meet within [`SAME_PLACE_M`].
    pub fn is_contiguous(&self) -> bool {
        self.steps
            .windows(2)
            .all(|w| w[0].destination.near(&w[1].origin, SAME_PLACE_M))
    }

    pub fn spans(&self, origin: GeoPoint, destination: GeoPoint) -> bool {
        match (self.steps.first(), self.steps.last()) {
            (Some(first), Some(last)) => {
                first.origin.near(&origin, SAME_PLACE_M)
                    && last.destination.near(&destination, SAME_PLACE_M)
            }
            _ => false,
        }
    }

    pub fn uses(&self, mode: TravelMode) -> bool {
        self.steps.iter().any(|s| s.mode == mode)
    }

    /// Fraction of the travelled distance covered by `mode`.
    pub fn distance_share(&self, mode: TravelMode) -> f64 {
        let total: f64 = self.steps.iter().map(|s| s.distance_m).sum();
        if total <= 0.0 {
            return 0.0;
        }
        self.steps
            .iter()
            .filter(|s| s.mode == mode)
            .map(|s| s.distance_m)
            .sum::<f64>()
            / total
    }

    /// Mode and endpoints of every step, rounded to 1e-6 degrees.
    pub fn signature(&self) -> Vec<(TravelMode, [i64; 4])> {
        let r = |x: f64| (x * 1e6).round() as i64;
        self.steps
            .iter()
            .map(|s| {
                (
                    s.mode,
                    [
                        r(s.origin.lat()),
                        r(s.origin.lon()),
                        r(s.destination.lat()),
                        r(s.destination.lon()),
                    ],
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RouterConfig {
    /// A driving step is congested when live / free-flow time reaches this.
    pub congestion_ratio: f64,
    /// Longest walk allowed for the first or last leg of a mixed option.
    pub walk_max_m: f64,
    /// Transit fare charged per boarding.
    pub fare: f64,
}

impl Default for RouterConfig {
    fn default() -> Self {
        Self {
            congestion_ratio: 1.5,
            walk_max_m: 2000.0,
            fare: 4.30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouterError {
    #[error("congestion ratio must exceed 1, got {0}")]
    CongestionRatio(f64),
    #[error("walk_max must be positive, got {0}")]
    WalkMax(f64),
    #[error("fare must be non-negative, got {0}")]
    Fare(f64),
    #[error("origin and destination coincide")]
    SameEndpoints,
    #[error("no route: {0}")]
    NoRoute(String),
    #[error("every candidate assignment failed")]
    AllOptionsFailed,
    #[error(transparent)]
    Provider(ProviderError),
}

impl From<ProviderError> for RouterError {
    fn from(e: ProviderError) -> Self {
        match e {
            ProviderError::NoRoute(m) => RouterError::NoRoute(m),
            other => RouterError::Provider(other),
        }
    }
}

impl RouterConfig {
    pub fn validate(&self) -> Result<(), RouterError> {
        if !(self.congestion_ratio > 1.0) {
            return Err(RouterError::CongestionRatio(self.congestion_ratio));
        }
        if !(self.walk_max_m > 0.0) {
            return Err(RouterError::WalkMax(self.walk_max_m));
        }
        if !(self.fare >= 0.0) {
            return Err(RouterError::Fare(self.fare));
        }
        Ok(())
    }
}

pub fn is_congested(step: &DrivingStep, cfg: &RouterConfig) -> bool {
    step.live_duration_s / step.free_flow_duration_s >= cfg.congestion_ratio
}

/// Points where a route may switch modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionCandidates {
    pub starts: Vec<GeoPoint>,
    pub ends: Vec<GeoPoint>,
}

pub fn find_transition_candidates(
    route: &DrivingRoute,
    origin: GeoPoint,
    destination: GeoPoint,
    cfg: &RouterConfig,
) -> TransitionCandidates {
    let mut starts = vec![origin];
    let mut ends = vec![destination];
    for step in route.steps.iter().filter(|s| is_congested(s, cfg)) {
        starts.push(step.origin);
        ends.push(step.destination);
    }
    TransitionCandidates { starts, ends }
}

/// Leg results memoised across the assignments of one trip.
#[derive(Default)]
pub struct LegMemo {
    legs: HashMap<(LegChoice, [u64; 4]), Result<Vec<RouteStep>, ProviderError>>,
}

impl LegMemo {
    fn leg(
        &mut self,
        provider: &dyn RouteProvider,
        choice: LegChoice,
        from: GeoPoint,
        to: GeoPoint,
    ) -> Result<Vec<RouteStep>, ProviderError> {
        let key = (
            choice,
            [
                from.lat().to_bits(),
                from.lon().to_bits(),
                to.lat().to_bits(),
                to.lon().to_bits(),
            ],
        );
        self.legs
            .entry(key)
            .or_insert_with(|| leg_steps(provider, choice, from, to))
            .clone()
    }
}

/// Query the provider for one leg.
pub fn leg_steps(
    provider: &dyn RouteProvider,
    choice: LegChoice,
    from: GeoPoint,
    to: GeoPoint,
) -> Result<Vec<RouteStep>, ProviderError> {
    Ok(match choice {
        LegChoice::Skip => Vec::new(),
        LegChoice::Walk => vec![provider.walk_route(from, to)],
        LegChoice::Transit => provider.transit_route(from, to)?.steps,
        LegChoice::RideHail => vec![provider.ride_estimate(from, to)?.into_step(from, to)],
    })
}

/// Position of a leg assignment in the full 2x2x2 enumeration. Skipped legs
/// take the first slot.
pub fn assignment_index(legs: &[LegChoice; 3]) -> usize {
    let bit = |c: LegChoice| usize::from(c == LegChoice::RideHail);
    bit(legs[0]) * 4 + bit(legs[1]) * 2 + bit(legs[2])
}

/// The leg assignments enumerated for a split, in assignment-index order,
/// after gating walks and dropping redundant combinations.
pub fn leg_assignments(
    origin: GeoPoint,
    ts: GeoPoint,
    te: GeoPoint,
    destination: GeoPoint,
    cfg: &RouterConfig,
) -> Vec<[LegChoice; 3]> {
    let outer = |a: GeoPoint, b: GeoPoint| -> Vec<LegChoice> {
        let d = a.distance_to(&b);
        if d <= SAME_PLACE_M {
            vec![LegChoice::Skip]
        } else if d <= cfg.walk_max_m {
            vec![LegChoice::Walk, LegChoice::RideHail]
        } else {
            vec![LegChoice::RideHail]
        }
    };
    let first = outer(origin, ts);
    let middle = if ts.near(&te, SAME_PLACE_M) {
        vec![LegChoice::Skip]
    } else {
        vec![LegChoice::Transit, LegChoice::RideHail]
    };
    let last = outer(te, destination);

    let mut out = Vec::new();
    for &a in &first {
        for &b in &middle {
            for &c in &last {
                let legs = [a, b, c];
                let motorized: Vec<_> = legs
                    .iter()
                    .filter(|l| matches!(l, LegChoice::Transit | LegChoice::RideHail))
                    .collect();
                let walks = legs.contains(&LegChoice::Walk);
                if motorized.is_empty() {
                    continue;
                }
                // Ride-hail on every motorized leg with no walking is the
                // plain ride-hail option again.
                if !walks && motorized.iter().all(|l| **l == LegChoice::RideHail) {
                    continue;
                }
                out.push(legs);
            }
        }
    }
    out.sort_by_key(assignment_index);
    out
}

/// Options for one (start, end) candidate pair.
pub fn get_options(
    origin: GeoPoint,
    ts: GeoPoint,
    te: GeoPoint,
    destination: GeoPoint,
    provider: &dyn RouteProvider,
    cfg: &RouterConfig,
) -> Result<Vec<RouteOption>, RouterError> {
    get_options_indexed(
        origin,
        (0, ts),
        (0, te),
        destination,
        provider,
        cfg,
        &mut LegMemo::default(),
    )
}

fn get_options_indexed(
    origin: GeoPoint,
    (start_index, ts): (usize, GeoPoint),
    (end_index, te): (usize, GeoPoint),
    destination: GeoPoint,
    provider: &dyn RouteProvider,
    cfg: &RouterConfig,
    memo: &mut LegMemo,
) -> Result<Vec<RouteOption>, RouterError> {
    let mut options = Vec::new();
    if ts.near(&origin, SAME_PLACE_M) && te.near(&destination, SAME_PLACE_M) {
        let pure = [
            (OptionKind::PureTransit, LegChoice::Transit),
            (OptionKind::PureRideHail, LegChoice::RideHail),
        ];
        for (kind, choice) in pure {
            match memo.leg(provider, choice, origin, destination) {
                Ok(steps) => options.push(RouteOption::new(kind, steps, cfg.fare)),
                Err(ProviderError::NoRoute(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
    } else {
        'assignments: for legs in leg_assignments(origin, ts, te, destination, cfg) {
            let ends = [(origin, ts), (ts, te), (te, destination)];
            let mut steps = Vec::new();
            for (choice, (from, to)) in legs.iter().zip(ends) {
                match memo.leg(provider, *choice, from, to) {
                    Ok(s) => steps.extend(s),
                    Err(ProviderError::NoRoute(_)) => continue 'assignments,
                    Err(e) => return Err(e.into()),
                }
            }
            let kind = OptionKind::Mixed {
                start_index,
                end_index,
                legs,
            };
            options.push(RouteOption::new(kind, steps, cfg.fare));
        }
    }
    if options.is_empty() {
        return Err(RouterError::AllOptionsFailed);
    }
    Ok(options)
}

/// Reference route, its transition candidates and every option they yield.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteOptions {
    pub origin: GeoPoint,
    pub destination: GeoPoint,
    pub congested_steps: usize,
    pub candidates: TransitionCandidates,
    pub options: Vec<RouteOption>,
    /// Set when fewer than two mixed options existed to label as hybrids.
    #[serde(default)]
    pub hybrids_missing: bool,
}

/// Enumerate multimodal options between two points.
///
/// Options come out with the plain transit and ride-hail options first,
/// then ordered by (start candidate, end candidate, assignment index).
/// Options with identical step sequences are kept once.
pub fn compute_route_options(
    origin: GeoPoint,
    destination: GeoPoint,
    provider: &dyn RouteProvider,
    cfg: &RouterConfig,
) -> Result<RouteOptions, RouterError> {
    cfg.validate()?;
    if origin.near(&destination, SAME_PLACE_M) {
        return Err(RouterError::SameEndpoints);
    }
    let drive = provider.driving_way(origin, destination)?;
    let candidates = find_transition_candidates(&drive, origin, destination, cfg);
    let mut memo = LegMemo::default();
    let mut seen = HashSet::new();
    let mut options = Vec::new();
    for (i, &ts) in candidates.starts.iter().enumerate() {
        for (j, &te) in candidates.ends.iter().enumerate() {
            let found = match get_options_indexed(
                origin,
                (i, ts),
                (j, te),
                destination,
                provider,
                cfg,
                &mut memo,
            ) {
                Ok(found) => found,
                Err(RouterError::AllOptionsFailed | RouterError::NoRoute(_)) => continue,
                Err(e) => return Err(e),
            };
            for option in found {
                if seen.insert(option.signature()) {
                    options.push(option);
                }
            }
        }
    }
    if options.is_empty() {
        return Err(RouterError::AllOptionsFailed);
    }
    Ok(RouteOptions {
        origin,
        destination,
        congested_steps: candidates.starts.len() - 1,
        candidates,
        options,
        hybrids_missing: false,
    })
}

/// Options that combine public transit with ride-hail.
pub fn is_mixed(option: &RouteOption) -> bool {
    matches!(option.source, OptionKind::Mixed { .. })
        && option.uses(TravelMode::Transit)
        && option.uses(TravelMode::RideHail)
}

/// Distance share at 1e-9 resolution, so options whose shares agree in
/// exact arithmetic tie regardless of summation order.
fn share_key(option: &RouteOption, mode: TravelMode) -> i64 {
    (option.distance_share(mode) * 1e9).round() as i64
}

/// Assign comparison labels. Returns `false` when fewer than two mixed
/// options exist, in which case no hybrid labels are given.
///
/// Hybrid1 is the mixed option with the largest transit distance share
/// (ties: cheaper, then faster); Hybrid2 the one with the largest ride-hail
/// share (ties: faster, then cheaper), never the same option as Hybrid1.
pub fn label_options(options: &mut [RouteOption]) -> bool {
    for o in options.iter_mut() {
        o.label = RouteLabel::Other;
    }
    if let Some(o) = options
        .iter_mut()
        .find(|o| o.source == OptionKind::PureTransit)
    {
        o.label = RouteLabel::Transit;
    }
    if let Some(o) = options
        .iter_mut()
        .find(|o| o.source == OptionKind::PureRideHail)
    {
        o.label = RouteLabel::RideHail;
    }
    let mixed: Vec<usize> = (0..options.len())
        .filter(|&i| is_mixed(&options[i]))
        .collect();
    if mixed.len() < 2 {
        return false;
    }

    let rank =
        |mode: TravelMode, first: fn(&OptionMetrics) -> f64, second: fn(&OptionMetrics) -> f64| {
            let mut order = mixed.clone();
            order.sort_by(|&a, &b| {
                let (oa, ob) = (&options[a], &options[b]);
                share_key(ob, mode)
                    .cmp(&share_key(oa, mode))
                    .then(first(&oa.metrics).total_cmp(&first(&ob.metrics)))
                    .then(second(&oa.metrics).total_cmp(&second(&ob.metrics)))
                    .then(a.cmp(&b))
            });
            order
        };
    let by_transit = rank(TravelMode::Transit, |m| m.price, |m| m.duration_s);
    let by_ride = rank(TravelMode::RideHail, |m| m.duration_s, |m| m.price);
    let hybrid1 = by_transit[0];
    let hybrid2 = if by_ride[0] == hybrid1 {
        by_ride[1]
    } else {
        by_ride[0]
    };
    options[hybrid1].label = RouteLabel::Hybrid1;
    options[hybrid2].label = RouteLabel::Hybrid2;
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::encode_polyline;
    use crate::geo::METERS_PER_DEGREE;

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    fn east(m: f64) -> GeoPoint {
        pt(0.0, m / METERS_PER_DEGREE)
    }

    fn driving_step(free: f64, live: f64) -> DrivingStep {
        let (a, b) = (east(0.0), east(250.0));
        DrivingStep {
            origin: a,
            destination: b,
            distance_m: 250.0,
            free_flow_duration_s: free,
            live_duration_s: live,
            polyline: encode_polyline(&[a, b]).unwrap(),
        }
    }

    #[test]
    fn congestion_ratio_boundary() {
        let cfg = RouterConfig::default();
        assert!(!is_congested(&driving_step(20.0, 20.0), &cfg));
        assert!(is_congested(&driving_step(20.0, 40.0), &cfg));
        assert!(is_congested(&driving_step(22.5, 33.75), &cfg));
        assert!(!is_congested(&driving_step(22.5, 33.7), &cfg));
    }

    fn route_with(congested: &[bool]) -> DrivingRoute {
        let steps = congested
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let (a, b) = (east(250.0 * i as f64), east(250.0 * (i + 1) as f64));
                DrivingStep {
                    origin: a,
                    destination: b,
                    distance_m: 250.0,
                    free_flow_duration_s: 22.5,
                    live_duration_s: if c { 45.0 } else { 22.5 },
                    polyline: encode_polyline(&[a, b]).unwrap(),
                }
            })
            .collect();
        DrivingRoute { steps }
    }

    #[test]
    fn candidates_from_congested_steps() {
        let cfg = RouterConfig::default();
        let (o, d) = (east(0.0), east(1250.0));
        let none = find_transition_candidates(&route_with(&[false; 5]), o, d, &cfg);
        assert_eq!(none.starts, vec![o]);
        assert_eq!(none.ends, vec![d]);

        let two =
            find_transition_candidates(&route_with(&[false, true, false, true, false]), o, d, &cfg);
        assert_eq!(two.starts, vec![o, east(250.0), east(750.0)]);
        assert_eq!(two.ends, vec![d, east(500.0), east(1000.0)]);

        let all = find_transition_candidates(&route_with(&[true; 5]), o, d, &cfg);
        assert_eq!(all.starts.len(), 6);
        assert_eq!(all.ends.len(), 6);
    }

    #[test]
    fn interior_split_enumerates_seven() {
        let cfg = RouterConfig::default();
        let legs = leg_assignments(east(0.0), east(500.0), east(3000.0), east(3500.0), &cfg);
        assert_eq!(legs.len(), 7);
        assert!(!legs.contains(&[LegChoice::RideHail; 3]));
        let idx: Vec<_> = legs.iter().map(assignment_index).collect();
        assert_eq!(idx, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn long_first_leg_cannot_walk() {
        let cfg = RouterConfig::default();
        let legs = leg_assignments(east(0.0), east(2500.0), east(5000.0), east(5500.0), &cfg);
        // First leg fixed to ride-hail: 1 x 2 x 2 minus the all-ride case.
        assert_eq!(legs.len(), 3);
        assert!(legs.iter().all(|l| l[0] == LegChoice::RideHail));
    }

    #[test]
    fn skipped_legs_and_walk_only_dropped() {
        let cfg = RouterConfig::default();
        // ts == origin: first leg skipped.
        let legs = leg_assignments(east(0.0), east(0.0), east(3000.0), east(3500.0), &cfg);
        assert_eq!(
            legs,
            vec![
                [LegChoice::Skip, LegChoice::Transit, LegChoice::Walk],
                [LegChoice::Skip, LegChoice::Transit, LegChoice::RideHail],
                [LegChoice::Skip, LegChoice::RideHail, LegChoice::Walk],
            ]
        );
        // ts == te: middle skipped, walk+walk is not an option.
        let legs = leg_assignments(east(0.0), east(500.0), east(500.0), east(1000.0), &cfg);
        assert_eq!(
            legs,
            vec![
                [LegChoice::Walk, LegChoice::Skip, LegChoice::RideHail],
                [LegChoice::RideHail, LegChoice::Skip, LegChoice::Walk],
            ]
        );
    }

    #[test]
    fn config_validation() {
        assert!(RouterConfig::default().validate().is_ok());
        let bad = RouterConfig {
            congestion_ratio: 1.0,
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(RouterError::CongestionRatio(1.0)));
        let bad = RouterConfig {
            walk_max_m: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    fn step(mode: TravelMode, from: f64, to: f64, price: f64, duration: f64) -> RouteStep {
        let (a, b) = (east(from), east(to));
        RouteStep {
            mode,
            origin: a,
            destination: b,
            duration_s: duration,
            distance_m: to - from,
            wait_s: 0.0,
            price,
            polyline: encode_polyline(&[a, b]).unwrap(),
        }
    }

    fn mixed(steps: Vec<RouteStep>) -> RouteOption {
        let legs = [LegChoice::RideHail, LegChoice::Transit, LegChoice::Walk];
        RouteOption::new(
            OptionKind::Mixed {
                start_index: 1,
                end_index: 1,
                legs,
            },
            steps,
            4.30,
        )
    }

    fn pure_pair() -> Vec<RouteOption> {
        vec![
            RouteOption::new(
                OptionKind::PureTransit,
                vec![step(TravelMode::Transit, 0.0, 1000.0, 0.0, 100.0)],
                4.30,
            ),
            RouteOption::new(
                OptionKind::PureRideHail,
                vec![step(TravelMode::RideHail, 0.0, 1000.0, 20.0, 60.0)],
                4.30,
            ),
        ]
    }

    #[test]
    fn only_pure_options_have_no_hybrids() {
        let mut options = pure_pair();
        assert!(!label_options(&mut options));
        assert_eq!(options[0].label, RouteLabel::Transit);
        assert_eq!(options[1].label, RouteLabel::RideHail);
    }

    #[test]
    fn majority_modes_pick_hybrids() {
        let mut options = pure_pair();
        options.push(mixed(vec![
            step(TravelMode::RideHail, 0.0, 200.0, 6.0, 20.0),
            step(TravelMode::Transit, 200.0, 1000.0, 0.0, 80.0),
        ]));
        options.push(mixed(vec![
            step(TravelMode::Transit, 0.0, 200.0, 0.0, 20.0),
            step(TravelMode::RideHail, 200.0, 1000.0, 15.0, 50.0),
        ]));
        assert!(label_options(&mut options));
        assert_eq!(options[2].label, RouteLabel::Hybrid1);
        assert_eq!(options[3].label, RouteLabel::Hybrid2);
    }

    #[test]
    fn equal_transit_share_prefers_cheaper() {
        let mut options = pure_pair();
        options.push(mixed(vec![
            step(TravelMode::RideHail, 0.0, 200.0, 9.0, 20.0),
            step(TravelMode::Transit, 200.0, 1000.0, 0.0, 80.0),
        ]));
        options.push(mixed(vec![
            step(TravelMode::RideHail, 0.0, 200.0, 7.0, 20.0),
            step(TravelMode::Transit, 200.0, 1000.0, 0.0, 80.0),
        ]));
        label_options(&mut options);
        assert_eq!(options[3].label, RouteLabel::Hybrid1);
        // Same ride share, the pricier one is left for Hybrid2.
        assert_eq!(options[2].label, RouteLabel::Hybrid2);
    }

    #[test]
    fn single_winner_cedes_hybrid2_to_runner_up() {
        let mut options = pure_pair();
        // Option A dominates both shares is impossible, but identical shares
        // with A cheaper and faster makes A the winner of both rankings.
        options.push(mixed(vec![
            step(TravelMode::RideHail, 0.0, 500.0, 6.0, 20.0),
            step(TravelMode::Transit, 500.0, 1000.0, 0.0, 80.0),
        ]));
        options.push(mixed(vec![
            step(TravelMode::RideHail, 0.0, 500.0, 9.0, 30.0),
            step(TravelMode::Transit, 500.0, 1000.0, 0.0, 80.0),
        ]));
        label_options(&mut options);
        assert_eq!(options[2].label, RouteLabel::Hybrid1);
        assert_eq!(options[3].label, RouteLabel::Hybrid2);
    }

    #[test]
    fn walk_transit_options_are_not_mixed() {
        let mut options = pure_pair();
        options.push(mixed(vec![
            step(TravelMode::Walk, 0.0, 200.0, 0.0, 150.0),
            step(TravelMode::Transit, 200.0, 1000.0, 0.0, 80.0),
        ]));
        options.push(mixed(vec![
            step(TravelMode::RideHail, 0.0, 200.0, 7.0, 20.0),
            step(TravelMode::Transit, 200.0, 1000.0, 0.0, 80.0),
        ]));
        assert!(!label_options(&mut options));
        assert_eq!(options[2].label, RouteLabel::Other);
        assert_eq!(options[3].label, RouteLabel::Other);
    }

    #[test]
    fn option_json_shape() {
        let o = &pure_pair()[0];
        let v: serde_json::Value = serde_json::to_value(o).unwrap();
        assert_eq!(v["label"], "Other");
        assert!(v["metrics"]["walk_distance_m"].is_number());
        let s = &v["steps"][0];
        assert_eq!(s["mode"], "Transit");
        assert!(s["o"]["lat"].is_number() && s["d"]["lon"].is_number());
        assert!(s["duration_s"].is_number() && s["distance_m"].is_number());
        assert!(s["polyline"].is_string());
        let back: RouteOption = serde_json::from_value(v).unwrap();
        assert_eq!(&back, o);
    }
}
