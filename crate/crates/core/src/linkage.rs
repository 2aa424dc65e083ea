//! Per-user trip links and the validity filters applied to them.
//!
//! Each user's observations are ordered by time and every temporally
//! adjacent pair becomes one [`TripLink`]. Links are then filtered in a
//! fixed order (same day, minimum distance, minimum duration, speed band)
//! and the survivors of each stage are counted.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{haversine_distance, speed_kmh, GeoPoint};
use crate::ingest::{Dataset, ObservationRecord};

const MS_PER_DAY: i64 = 86_400_000;

/// A movement between two consecutive observations of one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripLink {
    pub uid: String,
    pub origin_point: GeoPoint,
    pub origin_time: i64,
    pub dest_point: GeoPoint,
    pub dest_time: i64,
    pub distance_m: f64,
    pub duration_ms: i64,
    /// Infinite when both observations share a timestamp.
    pub speed_kmh: f64,
}

impl TripLink {
    pub fn between(from: &ObservationRecord, to: &ObservationRecord) -> Self {
        let distance_m = haversine_distance(from.point, to.point);
        let duration_ms = to.timestamp_ms - from.timestamp_ms;
        Self {
            uid: from.uid.clone(),
            origin_point: from.point,
            origin_time: from.timestamp_ms,
            dest_point: to.point,
            dest_time: to.timestamp_ms,
            distance_m,
            duration_ms,
            speed_kmh: speed_kmh(distance_m, duration_ms).unwrap_or(f64::INFINITY),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub min_distance_m: f64,
    pub min_duration_ms: i64,
    pub min_speed_kmh: f64,
    pub max_speed_kmh: f64,
    /// Offset from UTC, in minutes, of the clock that defines a "day".
    pub day_timezone_offset_min: i64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_distance_m: 100.0,
            min_duration_ms: 1000,
            min_speed_kmh: 2.0,
            max_speed_kmh: 100.0,
            day_timezone_offset_min: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("min_distance_m must be positive, got {0}")]
    MinDistance(f64),
    #[error("min_duration_ms must be positive, got {0}")]
    MinDuration(i64),
    #[error("speed band [{0}, {1}] is empty")]
    SpeedBand(f64, f64),
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.min_distance_m > 0.0) {
            return Err(ConfigError::MinDistance(self.min_distance_m));
        }
        if self.min_duration_ms <= 0 {
            return Err(ConfigError::MinDuration(self.min_duration_ms));
        }
        if !(self.min_speed_kmh < self.max_speed_kmh) {
            return Err(ConfigError::SpeedBand(
                self.min_speed_kmh,
                self.max_speed_kmh,
            ));
        }
        Ok(())
    }

    fn local_day(&self, t_ms: i64) -> i64 {
        (t_ms + self.day_timezone_offset_min * 60_000).div_euclid(MS_PER_DAY)
    }

    pub fn same_day(&self, link: &TripLink) -> bool {
        self.local_day(link.origin_time) == self.local_day(link.dest_time)
    }

    // Removal rules are strict ("less than", "greater than"), so the
    // thresholds themselves survive.
    pub fn far_enough(&self, link: &TripLink) -> bool {
        link.distance_m >= self.min_distance_m
    }

    pub fn long_enough(&self, link: &TripLink) -> bool {
        link.duration_ms >= self.min_duration_ms
    }

    pub fn plausible_speed(&self, link: &TripLink) -> bool {
        self.min_speed_kmh <= link.speed_kmh && link.speed_kmh <= self.max_speed_kmh
    }
}

/// Survivors after each stage of the pipeline.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub initial_records: usize,
    pub linked: usize,
    pub after_same_day: usize,
    pub after_min_distance: usize,
    pub after_min_duration: usize,
    pub after_speed_band: usize,
}

impl StageCounts {
    pub fn is_monotone(&self) -> bool {
        self.linked >= self.after_same_day
            && self.after_same_day >= self.after_min_distance
            && self.after_min_distance >= self.after_min_duration
            && self.after_min_duration >= self.after_speed_band
    }
}

/// Link consecutive observations of each user.
///
/// Output is ordered by uid, then by origin time; equal timestamps keep
/// their input order.
pub fn link_by_user(dataset: &Dataset) -> Vec<TripLink> {
    let mut by_user: BTreeMap<&str, Vec<&ObservationRecord>> = BTreeMap::new();
    for rec in &dataset.records {
        by_user.entry(rec.uid.as_str()).or_default().push(rec);
    }
    let mut links = Vec::with_capacity(dataset.records.len().saturating_sub(by_user.len()));
    for records in by_user.values_mut() {
        records.sort_by_key(|r| r.timestamp_ms);
        links.extend(records.windows(2).map(|w| TripLink::between(w[0], w[1])));
    }
    links
}

pub fn filter_same_day(links: Vec<TripLink>, cfg: &FilterConfig) -> Vec<TripLink> {
    links.into_iter().filter(|l| cfg.same_day(l)).collect()
}

pub fn filter_min_distance(links: Vec<TripLink>, cfg: &FilterConfig) -> Vec<TripLink> {
    links.into_iter().filter(|l| cfg.far_enough(l)).collect()
}

pub fn filter_min_duration(links: Vec<TripLink>, cfg: &FilterConfig) -> Vec<TripLink> {
    links.into_iter().filter(|l| cfg.long_enough(l)).collect()
}

pub fn filter_speed_band(links: Vec<TripLink>, cfg: &FilterConfig) -> Vec<TripLink> {
    links
        .into_iter()
        .filter(|l| cfg.plausible_speed(l))
        .collect()
}

/// Link, then filter in order: same day, distance, duration, speed.
pub fn run_filter_pipeline(dataset: &Dataset, cfg: &FilterConfig) -> (Vec<TripLink>, StageCounts) {
    let mut counts = StageCounts {
        initial_records: dataset.records.len(),
        ..Default::default()
    };
    let links = link_by_user(dataset);
    counts.linked = links.len();
    let links = filter_same_day(links, cfg);
    counts.after_same_day = links.len();
    let links = filter_min_distance(links, cfg);
    counts.after_min_distance = links.len();
    let links = filter_min_duration(links, cfg);
    counts.after_min_duration = links.len();
    let links = filter_speed_band(links, cfg);
    counts.after_speed_band = links.len();
    (links, counts)
}

pub const LINK_COLUMNS: [&str; 10] = [
    "uid",
    "o_lat",
    "o_lon",
    "o_ts",
    "d_lat",
    "d_lon",
    "d_ts",
    "distance_m",
    "duration_ms",
    "speed_kmh",
];

pub fn write_links_csv<W: Write>(links: &[TripLink], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LINK_COLUMNS)?;
    for l in links {
        w.write_record([
            l.uid.clone(),
            l.origin_point.lat().to_string(),
            l.origin_point.lon().to_string(),
            l.origin_time.to_string(),
            l.dest_point.lat().to_string(),
            l.dest_point.lon().to_string(),
            l.dest_time.to_string(),
            l.distance_m.to_string(),
            l.duration_ms.to_string(),
            l.speed_kmh.to_string(),
        ])?;
    }
    w.flush()
}

#[derive(Debug, Error)]
pub enum LinksCsvError {
    #[error("links header must be {expected}, found {found}")]
    Header { expected: String, found: String },
    #[error("links line {line}: {reason}")]
    Row { line: u64, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Read a links CSV as written by [`write_links_csv`]. Derived columns are
/// recomputed from the endpoints, so tampered values cannot leak through.
pub fn read_links_csv<R: Read>(input: R) -> Result<Vec<TripLink>, LinksCsvError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != LINK_COLUMNS {
        return Err(LinksCsvError::Header {
            expected: LINK_COLUMNS.join(","),
            found: header.join(","),
        });
    }
    let mut links = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |reason: &str| LinksCsvError::Row {
            line,
            reason: reason.to_string(),
        };
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(LINK_COLUMNS[i]));
        let int = |i: usize| rec[i].parse::<i64>().map_err(|_| bad(LINK_COLUMNS[i]));
        let origin = GeoPoint::new(num(1)?, num(2)?).map_err(|e| bad(&e.to_string()))?;
        let dest = GeoPoint::new(num(4)?, num(5)?).map_err(|e| bad(&e.to_string()))?;
        let (o_ts, d_ts) = (int(3)?, int(6)?);
        if d_ts < o_ts {
            return Err(bad("destination precedes origin"));
        }
        let from = ObservationRecord {
            uid: rec[0].to_string(),
            point: origin,
            timestamp_ms: o_ts,
        };
        let to = ObservationRecord {
            uid: rec[0].to_string(),
            point: dest,
            timestamp_ms: d_ts,
        };
        links.push(TripLink::between(&from, &to));
    }
    Ok(links)
}
