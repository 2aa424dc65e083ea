//! Seeded generator of synthetic observation datasets.
//!
//! Users commute between a few hotspots inside the synthetic city: a post
//! at home in the morning, one at work after the trip, one back home in the
//! evening. Repeat posts, timestamp duplicates, position glitches and random
//! one-off posts are mixed in so every link filter has something to remove.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geo::{GeoPoint, METERS_PER_DEGREE};
use crate::ingest::ObservationRecord;

const HOUR_MS: i64 = 3_600_000;
const DAY_MS: i64 = 24 * HOUR_MS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub users: usize,
    pub days: usize,
    pub hotspots: usize,
    pub center: GeoPoint,
    /// Hotspots lie within this distance of the centre, east and north.
    pub extent_m: f64,
    /// Minimum distance between two hotspots.
    pub hotspot_gap_m: f64,
    /// Standard deviation of post positions around a hotspot.
    pub spread_m: f64,
    /// Midnight UTC of the first day, in epoch milliseconds.
    pub start_ms: i64,
    /// Chance per post of an immediate repeat post at the same place.
    pub repeat_share: f64,
    /// Chance per day of a post far away moments later.
    pub glitch_share: f64,
    /// Chance per day of an isolated post anywhere in the city.
    pub stray_share: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            users: 400,
            days: 5,
            hotspots: 8,
            center: GeoPoint::new(-23.551615, -46.633611).expect("valid"),
            extent_m: 3500.0,
            hotspot_gap_m: 1500.0,
            spread_m: 60.0,
            start_ms: 1_546_300_800_000,
            repeat_share: 0.15,
            glitch_share: 0.05,
            stray_share: 0.1,
        }
    }
}

fn offset(center: GeoPoint, north_m: f64, east_m: f64) -> GeoPoint {
    let lat = center.lat() + north_m / METERS_PER_DEGREE;
    let lon = center.lon() + east_m / (METERS_PER_DEGREE * center.lat().to_radians().cos());
    GeoPoint::new(
        lat.clamp(-90.0, 90.0),
        (lon + 180.0).rem_euclid(360.0) - 180.0,
    )
    .expect("clamped")
}

/// Hotspot centres, at least `hotspot_gap_m` apart where space allows.
pub fn hotspots(cfg: &SynthConfig) -> Vec<GeoPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x005e_ed0f_5b07);
    let mut out: Vec<GeoPoint> = Vec::with_capacity(cfg.hotspots);
    let mut attempts = 0;
    while out.len() < cfg.hotspots {
        let p = offset(
            cfg.center,
            rng.random_range(-cfg.extent_m..=cfg.extent_m),
            rng.random_range(-cfg.extent_m..=cfg.extent_m),
        );
        attempts += 1;
        if attempts > 10_000 || out.iter().all(|q| q.distance_to(&p) >= cfg.hotspot_gap_m) {
            out.push(p);
        }
    }
    out
}

/// Generate observations, ordered by timestamp then user.
pub fn generate(cfg: &SynthConfig) -> Vec<ObservationRecord> {
    let spots = hotspots(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let jitter = Normal::new(0.0, cfg.spread_m.max(0.0)).expect("finite spread");
    let weights: Vec<f64> = (0..spots.len()).map(|i| 1.0 / (i + 1) as f64).collect();
    let pick = WeightedIndex::new(&weights).expect("positive weights");
    let mut records = Vec::new();

    for u in 0..cfg.users {
        let uid = format!("u{u:05}");
        let home = pick.sample(&mut rng);
        let mut work = pick.sample(&mut rng);
        if spots.len() > 1 {
            while work == home {
                work = pick.sample(&mut rng);
            }
        }
        let post =
            |rng: &mut ChaCha8Rng, records: &mut Vec<ObservationRecord>, at: GeoPoint, t: i64| {
                records.push(ObservationRecord {
                    uid: uid.clone(),
                    point: at,
                    timestamp_ms: t,
                });
                if rng.random::<f64>() < cfg.repeat_share {
                    // Same place again a little later, or in the same millisecond.
                    let later = if rng.random::<bool>() {
                        rng.random_range(1_000..600_000)
                    } else {
                        0
                    };
                    records.push(ObservationRecord {
                        uid: uid.clone(),
                        point: at,
                        timestamp_ms: t + later,
                    });
                }
            };
        let near = |rng: &mut ChaCha8Rng, spot: usize| {
            offset(spots[spot], jitter.sample(rng), jitter.sample(rng))
        };

        for day in 0..cfg.days {
            let midnight = cfg.start_ms + day as i64 * DAY_MS;
            let leave = midnight + rng.random_range(6 * HOUR_MS..9 * HOUR_MS);
            let (a, b) = (near(&mut rng, home), near(&mut rng, work));
            let speed_kmh = rng.random_range(12.0..40.0);
            let trip_ms = (a.distance_to(&b) / speed_kmh * 3600.0) as i64;
            post(&mut rng, &mut records, a, leave);
            let arrive = leave + trip_ms + rng.random_range(0..20 * 60_000);
            post(&mut rng, &mut records, b, arrive);

            if rng.random::<f64>() < cfg.glitch_share {
                let far = offset(
                    cfg.center,
                    rng.random_range(-4000.0..4000.0),
                    rng.random_range(-4000.0..4000.0),
                );
                let t = arrive + rng.random_range(5_000..60_000);
                post(&mut rng, &mut records, far, t);
            }
            let back = midnight + rng.random_range(17 * HOUR_MS..20 * HOUR_MS);
            let c = near(&mut rng, home);
            let back_ms = (b.distance_to(&c) / speed_kmh * 3600.0) as i64;
            post(&mut rng, &mut records, c, back + back_ms);

            if rng.random::<f64>() < cfg.stray_share {
                let stray = offset(
                    cfg.center,
                    rng.random_range(-4500.0..4500.0),
                    rng.random_range(-4500.0..4500.0),
                );
                let t = midnight + rng.random_range(21 * HOUR_MS..23 * HOUR_MS);
                post(&mut rng, &mut records, stray, t);
            }
        }
    }
    records.sort_by(|x, y| {
        x.timestamp_ms
            .cmp(&y.timestamp_ms)
            .then_with(|| x.uid.cmp(&y.uid))
    });
    records
}
