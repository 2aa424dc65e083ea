//! Independent reference implementations shared by integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use urbanflow::geo::{haversine_distance, speed_kmh, GeoPoint, METERS_PER_DEGREE};
use urbanflow::ingest::ObservationRecord;
use urbanflow::linkage::{FilterConfig, TripLink};
use urbanflow::providers::{ProviderError, RouteProvider};
use urbanflow::router::{RouteStep, RouterConfig, TravelMode};

pub fn pt(lat: f64, lon: f64) -> GeoPoint {
    GeoPoint::new(lat, lon).unwrap()
}

/// Point displaced north and east of `origin` by the given meters.
pub fn offset(origin: GeoPoint, north_m: f64, east_m: f64) -> GeoPoint {
    let lat = origin.lat() + north_m / METERS_PER_DEGREE;
    let lon = origin.lon() + east_m / (METERS_PER_DEGREE * origin.lat().to_radians().cos());
    pt(lat, lon)
}

/// A point north-east of `origin` whose haversine distance is exactly
/// `meters`. Latitude bits are stepped one at a time and, for each, the
/// longitude bits that best cancel the residual are tried.
pub fn point_at_distance(origin: GeoPoint, meters: f64) -> GeoPoint {
    let guess = offset(origin, meters / 2f64.sqrt(), meters / 2f64.sqrt());
    let shift = |x: f64, ulps: i64| f64::from_bits((x.to_bits() as i64 + ulps) as u64);
    let dist = |lat: f64, lon: f64| haversine_distance(origin, pt(lat, lon));
    let base = dist(guess.lat(), guess.lon());
    let per_lon_ulp = (dist(guess.lat(), shift(guess.lon(), 4096)) - base) / 4096.0;
    for i in 0..400_000i64 {
        let di = if i % 2 == 0 { i / 2 } else { -(i / 2) - 1 };
        let lat = shift(guess.lat(), di);
        let d = dist(lat, guess.lon());
        let j = ((meters - d) / per_lon_ulp).round() as i64;
        for dj in -2..=2 {
            let lon = shift(guess.lon(), j + dj);
            if dist(lat, lon) == meters {
                return pt(lat, lon);
            }
        }
    }
    panic!("no point found exactly {meters} m from {origin}");
}

// ---------------------------------------------------------------- DBSCAN

/// Textbook DBSCAN with linear-scan region queries. Points are visited in
/// index order; a cluster claims every unclassified or noise point in the
/// neighbourhood of each of its core points.
pub fn naive_dbscan(points: &[GeoPoint], eps_m: f64, min_pts: usize) -> Vec<Option<u32>> {
    const UNCLASSIFIED: i64 = -2;
    const NOISE: i64 = -1;
    let region = |i: usize| -> Vec<usize> {
        (0..points.len())
            .filter(|&j| haversine_distance(points[i], points[j]) <= eps_m)
            .collect()
    };
    let mut class = vec![UNCLASSIFIED; points.len()];
    let mut cluster = 0i64;
    for p in 0..points.len() {
        if class[p] != UNCLASSIFIED {
            continue;
        }
        let seeds = region(p);
        if seeds.len() < min_pts {
            class[p] = NOISE;
            continue;
        }
        let mut frontier = Vec::new();
        for &q in &seeds {
            if class[q] == UNCLASSIFIED {
                frontier.push(q);
            }
            if class[q] < 0 {
                class[q] = cluster;
            }
        }
        while let Some(q) = frontier.pop() {
            let result = region(q);
            if result.len() < min_pts {
                continue;
            }
            for r in result {
                if class[r] == UNCLASSIFIED {
                    frontier.push(r);
                }
                if class[r] < 0 {
                    class[r] = cluster;
                }
            }
        }
        cluster += 1;
    }
    class
        .into_iter()
        .map(|c| (c >= 0).then_some(c as u32))
        .collect()
}

// ---------------------------------------------------------------- filters

/// Identity of a link independent of float formatting.
pub type LinkKey = (String, i64, i64, [u64; 4]);

pub fn link_key(l: &TripLink) -> LinkKey {
    (
        l.uid.clone(),
        l.origin_time,
        l.dest_time,
        [
            l.origin_point.lat().to_bits(),
            l.origin_point.lon().to_bits(),
            l.dest_point.lat().to_bits(),
            l.dest_point.lon().to_bits(),
        ],
    )
}

/// Links surviving each successive conjunction of predicates, computed from
/// scratch: `[linked, same day, + distance, + duration, + speed]`.
pub fn naive_filter(records: &[ObservationRecord], cfg: &FilterConfig) -> [Vec<LinkKey>; 5] {
    let mut by_user: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_user.entry(&r.uid).or_default().push(i);
    }
    let mut stages: [Vec<LinkKey>; 5] = Default::default();
    let day = |t: i64| (t + cfg.day_timezone_offset_min * 60_000).div_euclid(86_400_000);
    for idx in by_user.values_mut() {
        idx.sort_by_key(|&i| (records[i].timestamp_ms, i));
        for w in idx.windows(2) {
            let (a, b) = (&records[w[0]], &records[w[1]]);
            let key = (
                a.uid.clone(),
                a.timestamp_ms,
                b.timestamp_ms,
                [
                    a.point.lat().to_bits(),
                    a.point.lon().to_bits(),
                    b.point.lat().to_bits(),
                    b.point.lon().to_bits(),
                ],
            );
            let dist = haversine_distance(a.point, b.point);
            let dt = b.timestamp_ms - a.timestamp_ms;
            let checks = [
                true,
                day(a.timestamp_ms) == day(b.timestamp_ms),
                dist >= cfg.min_distance_m,
                dt >= cfg.min_duration_ms,
                speed_kmh(dist, dt).is_ok_and(|v| cfg.min_speed_kmh <= v && v <= cfg.max_speed_kmh),
            ];
            for (stage, _) in checks.iter().enumerate().take_while(|(_, ok)| **ok) {
                stages[stage].push(key.clone());
            }
        }
    }
    for s in &mut stages {
        s.sort();
    }
    stages
}

/// Seeded dataset mixing ordinary movement with the corner cases the
/// filters must handle, plus one user per exact threshold.
pub fn filter_dataset(seed: u64, n: usize) -> Vec<ObservationRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = pt(-23.55, -46.63);
    let start = 1_546_300_800_000i64;
    let mut records = Vec::with_capacity(n);

    let boundary = boundary_records(center, start);
    while records.len() + boundary.len() < n {
        let uid = format!("u{}", rng.random_range(0..300));
        let t = start + rng.random_range(0..4 * 86_400_000i64);
        let p = match rng.random_range(0..10) {
            // Fixed spots produce zero-length and duplicate links.
            0..=2 => offset(center, 100.0 * rng.random_range(0..3) as f64, 0.0),
            _ => offset(
                center,
                rng.random_range(-5000.0..5000.0),
                rng.random_range(-5000.0..5000.0),
            ),
        };
        records.push(ObservationRecord {
            uid: uid.clone(),
            point: p,
            timestamp_ms: t,
        });
        match rng.random_range(0..6) {
            // Same instant.
            0 => records.push(ObservationRecord {
                uid,
                point: offset(p, 300.0, 0.0),
                timestamp_ms: t,
            }),
            // Sub-second hop.
            1 => records.push(ObservationRecord {
                uid,
                point: offset(p, 150.0, 0.0),
                timestamp_ms: t + 400,
            }),
            // Plausible short trip.
            2 => records.push(ObservationRecord {
                uid,
                point: offset(
                    p,
                    rng.random_range(-2000.0..2000.0),
                    rng.random_range(-2000.0..2000.0),
                ),
                timestamp_ms: t + rng.random_range(60_000..3_600_000),
            }),
            _ => {}
        }
    }
    records.truncate(n - boundary.len());
    records.extend(boundary);
    records
}

/// Users `edge-*` each contribute a single link sitting exactly on one
/// filter threshold: 100 m, 1000 ms, 2 km/h and 100 km/h. Every link spans
/// exactly 100 m, a distance the haversine formula can return exactly.
pub fn boundary_records(center: GeoPoint, start: i64) -> Vec<ObservationRecord> {
    let hundred = point_at_distance(center, 100.0);
    let rec = |uid: &str, p: GeoPoint, t: i64| ObservationRecord {
        uid: uid.into(),
        point: p,
        timestamp_ms: t,
    };
    let t0 = start + 10 * 3_600_000;
    vec![
        rec("edge-distance", center, t0),
        rec("edge-distance", hundred, t0 + 60_000),
        rec("edge-duration", center, t0),
        rec("edge-duration", hundred, t0 + 1_000),
        rec("edge-slow", center, t0),
        rec("edge-slow", hundred, t0 + 180_000),
        rec("edge-fast", center, t0),
        rec("edge-fast", hundred, t0 + 3_600),
    ]
}

// ---------------------------------------------------------------- router

/// Step sequence identity: mode and endpoints rounded to 1e-6 degrees.
pub fn step_signature(steps: &[RouteStep]) -> Vec<(TravelMode, [i64; 4])> {
    let r = |x: f64| (x * 1e6).round() as i64;
    steps
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

#[derive(Clone, Copy, PartialEq)]
enum Leg {
    Walk,
    Transit,
    Ride,
}

/// Brute-force option enumeration over every (start, end, assignment)
/// triple, querying the provider afresh for every leg.
pub fn reference_options(
    origin: GeoPoint,
    destination: GeoPoint,
    provider: &dyn RouteProvider,
    cfg: &RouterConfig,
) -> Vec<Vec<RouteStep>> {
    let same = |a: GeoPoint, b: GeoPoint| haversine_distance(a, b) <= 1.0;
    let drive = provider
        .driving_way(origin, destination)
        .expect("driving route");
    let mut starts = vec![origin];
    let mut ends = vec![destination];
    for s in &drive.steps {
        if s.live_duration_s / s.free_flow_duration_s >= cfg.congestion_ratio {
            starts.push(s.origin);
            ends.push(s.destination);
        }
    }

    let query = |leg: Leg, a: GeoPoint, b: GeoPoint| -> Result<Vec<RouteStep>, ProviderError> {
        Ok(match leg {
            Leg::Walk => vec![provider.walk_route(a, b)],
            Leg::Transit => provider.transit_route(a, b)?.steps,
            Leg::Ride => vec![provider.ride_estimate(a, b)?.into_step(a, b)],
        })
    };

    let mut all = Vec::new();
    for &ts in &starts {
        for &te in &ends {
            if same(ts, origin) && same(te, destination) {
                for leg in [Leg::Transit, Leg::Ride] {
                    match query(leg, origin, destination) {
                        Ok(steps) => all.push(steps),
                        Err(ProviderError::NoRoute(_)) => {}
                        Err(e) => panic!("provider failed: {e}"),
                    }
                }
                continue;
            }
            for a in [Leg::Walk, Leg::Ride] {
                for b in [Leg::Transit, Leg::Ride] {
                    for c in [Leg::Walk, Leg::Ride] {
                        let legs: Vec<(Leg, GeoPoint, GeoPoint)> =
                            [(a, origin, ts), (b, ts, te), (c, te, destination)]
                                .into_iter()
                                .filter(|(_, x, y)| !same(*x, *y))
                                .collect();
                        if legs.iter().any(|(l, x, y)| {
                            *l == Leg::Walk && haversine_distance(*x, *y) > cfg.walk_max_m
                        }) {
                            continue;
                        }
                        let walks = legs.iter().any(|(l, _, _)| *l == Leg::Walk);
                        let motorized: Vec<Leg> = legs
                            .iter()
                            .map(|(l, _, _)| *l)
                            .filter(|l| *l != Leg::Walk)
                            .collect();
                        if motorized.is_empty()
                            || (!walks && motorized.iter().all(|l| *l == Leg::Ride))
                        {
                            continue;
                        }
                        let mut steps = Vec::new();
                        let mut ok = true;
                        for (l, x, y) in legs {
                            match query(l, x, y) {
                                Ok(s) => steps.extend(s),
                                Err(ProviderError::NoRoute(_)) => {
                                    ok = false;
                                    break;
                                }
                                Err(e) => panic!("provider failed: {e}"),
                            }
                        }
                        if ok {
                            all.push(steps);
                        }
                    }
                }
            }
        }
    }
    let mut seen = HashSet::new();
    all.into_iter()
        .filter(|s| seen.insert(step_signature(s)))
        .collect()
}
