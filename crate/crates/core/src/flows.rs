//! Functional zones and origin-destination flows.
//!
//! Trip endpoints (origins and destinations together) are clustered with
//! DBSCAN under the haversine metric. Links whose two endpoints fall in
//! different zones are aggregated into directed [`Flow`]s, which are then
//! split into trend and secondary flows by volume.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{haversine_distance, GeoPoint, EARTH_RADIUS_M};
use crate::linkage::TripLink;

pub type ZoneId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterParams {
    pub eps_m: f64,
    pub min_pts: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            eps_m: 500.0,
            min_pts: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("no links to cluster")]
    EmptyInput,
    #[error("eps must be positive, got {0}")]
    Eps(f64),
    #[error("min_pts must be at least 2, got {0}")]
    MinPts(usize),
    #[error("assignment covers {labels} links but {links} were given")]
    AssignmentMismatch { links: usize, labels: usize },
    #[error("label refers to unknown zone {0}")]
    UnknownZone(ZoneId),
}

impl ClusterParams {
    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.eps_m > 0.0) {
            return Err(FlowError::Eps(self.eps_m));
        }
        if self.min_pts < 2 {
            return Err(FlowError::MinPts(self.min_pts));
        }
        Ok(())
    }
}

/// Cluster membership of one point; `None` is noise.
pub type Label = Option<ZoneId>;

/// Strategy for grouping endpoints into zones. [`Dbscan`] is the only
/// implementation; a hierarchical density method can slot in here.
pub trait ZoneClusterer {
    fn label(&self, points: &[GeoPoint]) -> Vec<Label>;
}

#[derive(Debug, Clone, Copy)]
pub struct Dbscan {
    pub params: ClusterParams,
}

impl ZoneClusterer for Dbscan {
    fn label(&self, points: &[GeoPoint]) -> Vec<Label> {
        dbscan(points, &self.params)
    }
}

/// Spatial hash over Earth-centred Cartesian coordinates. The chord between
/// two points never exceeds their great-circle distance, so a cell edge of
/// `eps` guarantees every neighbour sits in one of the 27 surrounding cells.
struct GridIndex<'a> {
    points: &'a [GeoPoint],
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
    keys: Vec<(i64, i64, i64)>,
}

impl<'a> GridIndex<'a> {
    fn new(points: &'a [GeoPoint], eps_m: f64) -> Self {
        // Slack keeps neighbours at exactly eps within adjacent cells despite
        // rounding in the Cartesian conversion.
        let cell = eps_m * 1.001 + 1e-6;
        let keys: Vec<_> = points.iter().map(|p| cell_key(p, cell)).collect();
        let mut cells: HashMap<_, Vec<usize>> = HashMap::new();
        for (i, k) in keys.iter().enumerate() {
            cells.entry(*k).or_default().push(i);
        }
        Self {
            points,
            cells,
            keys,
        }
    }

    /// Indices within `eps_m` of point `i` (itself included), ascending.
    fn neighbours(&self, i: usize, eps_m: f64) -> Vec<usize> {
        let (x, y, z) = self.keys[i];
        let p = self.points[i];
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(members) = self.cells.get(&(x + dx, y + dy, z + dz)) {
                        out.extend(
                            members
                                .iter()
                                .copied()
                                .filter(|&j| haversine_distance(p, self.points[j]) <= eps_m),
                        );
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn cell_key(p: &GeoPoint, cell: f64) -> (i64, i64, i64) {
    let (lat, lon) = (p.lat().to_radians(), p.lon().to_radians());
    let x = EARTH_RADIUS_M * lat.cos() * lon.cos();
    let y = EARTH_RADIUS_M * lat.cos() * lon.sin();
    let z = EARTH_RADIUS_M * lat.sin();
    (
        (x / cell).floor() as i64,
        (y / cell).floor() as i64,
        (z / cell).floor() as i64,
    )
}

/// DBSCAN over `points`. A core point has at least `min_pts` points (itself
/// included) within `eps_m`. Clusters are numbered in discovery order and a
/// border point joins the first cluster that reaches it.
pub fn dbscan(points: &[GeoPoint], params: &ClusterParams) -> Vec<Label> {
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Unvisited,
        Noise,
        Member(ZoneId),
    }

    let index = GridIndex::new(points, params.eps_m);
    let mut state = vec![State::Unvisited; points.len()];
    let mut next_zone: ZoneId = 0;
    let mut queue = VecDeque::new();

    for p in 0..points.len() {
        if state[p] != State::Unvisited {
            continue;
        }
        let seeds = index.neighbours(p, params.eps_m);
        if seeds.len() < params.min_pts {
            state[p] = State::Noise;
            continue;
        }
        let zone = next_zone;
        next_zone += 1;
        state[p] = State::Member(zone);
        queue.extend(seeds.into_iter().filter(|&q| q != p));
        while let Some(q) = queue.pop_front() {
            match state[q] {
                State::Member(_) => continue,
                State::Noise => {
                    // Border point: reachable but already known not to be core.
                    state[q] = State::Member(zone);
                    continue;
                }
                State::Unvisited => state[q] = State::Member(zone),
            }
            let reach = index.neighbours(q, params.eps_m);
            if reach.len() >= params.min_pts {
                queue.extend(
                    reach
                        .into_iter()
                        .filter(|&r| !matches!(state[r], State::Member(_))),
                );
            }
        }
    }

    state
        .into_iter()
        .map(|s| match s {
            State::Member(z) => Some(z),
            _ => None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalZone {
    pub zone_id: ZoneId,
    pub centroid: GeoPoint,
    pub member_count: usize,
}

/// Zone labels for each link's origin and destination, indexed like the
/// links they were computed from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EndpointAssignment {
    pub origin: Vec<Label>,
    pub dest: Vec<Label>,
}

/// Zones formed by the labeled points, with arithmetic-mean centroids.
pub fn zones_from_labels(points: &[GeoPoint], labels: &[Label]) -> Vec<FunctionalZone> {
    // Offsets from each zone's first member keep the mean exact for
    // coincident points.
    let mut acc: BTreeMap<ZoneId, (GeoPoint, f64, f64, usize)> = BTreeMap::new();
    for (p, label) in points.iter().zip(labels) {
        if let Some(z) = label {
            let e = acc.entry(*z).or_insert((*p, 0.0, 0.0, 0));
            e.1 += p.lat() - e.0.lat();
            e.2 += p.lon() - e.0.lon();
            e.3 += 1;
        }
    }
    acc.into_iter()
        .map(|(zone_id, (first, dlat, dlon, n))| {
            let lat = (first.lat() + dlat / n as f64).clamp(-90.0, 90.0);
            let lon = (first.lon() + dlon / n as f64).clamp(-180.0, 180.0);
            FunctionalZone {
                zone_id,
                centroid: GeoPoint::new(lat, lon).expect("clamped mean is valid"),
                member_count: n,
            }
        })
        .collect()
}

/// Cluster the union of all link endpoints. Points are laid out as
/// origin 0, destination 0, origin 1, ... so labeling is deterministic in
/// link order.
pub fn cluster_endpoints(
    links: &[TripLink],
    params: &ClusterParams,
) -> Result<(Vec<FunctionalZone>, EndpointAssignment), FlowError> {
    params.validate()?;
    cluster_endpoints_with(links, &Dbscan { params: *params })
}

pub fn cluster_endpoints_with(
    links: &[TripLink],
    clusterer: &dyn ZoneClusterer,
) -> Result<(Vec<FunctionalZone>, EndpointAssignment), FlowError> {
    if links.is_empty() {
        return Err(FlowError::EmptyInput);
    }
    let points: Vec<GeoPoint> = links
        .iter()
        .flat_map(|l| [l.origin_point, l.dest_point])
        .collect();
    let labels = clusterer.label(&points);
    let zones = zones_from_labels(&points, &labels);
    let assignment = EndpointAssignment {
        origin: labels.iter().step_by(2).copied().collect(),
        dest: labels.iter().skip(1).step_by(2).copied().collect(),
    };
    Ok((zones, assignment))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowClass {
    Trend,
    Secondary,
}

/// Directed movement between two zones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub origin_zone: ZoneId,
    pub dest_zone: ZoneId,
    pub trip_count: u64,
    pub classification: FlowClass,
    pub representative_origin: GeoPoint,
    pub representative_dest: GeoPoint,
}

impl Flow {
    /// Stable identifier used in file names and reports.
    pub fn id(&self) -> String {
        format!("{}-{}", self.origin_zone, self.dest_zone)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowAggregation {
    /// Ordered by (origin_zone, dest_zone).
    pub flows: Vec<Flow>,
    pub noise_discarded: usize,
    pub intra_zone: usize,
}

/// Count links per ordered zone pair. Links touching noise and links that
/// start and end in the same zone are tallied but produce no flow.
pub fn aggregate_flows(
    links: &[TripLink],
    zones: &[FunctionalZone],
    assignment: &EndpointAssignment,
) -> Result<FlowAggregation, FlowError> {
    if assignment.origin.len() != links.len() || assignment.dest.len() != links.len() {
        return Err(FlowError::AssignmentMismatch {
            links: links.len(),
            labels: assignment.origin.len().min(assignment.dest.len()),
        });
    }
    let centroid: HashMap<ZoneId, GeoPoint> =
        zones.iter().map(|z| (z.zone_id, z.centroid)).collect();
    let mut counts: BTreeMap<(ZoneId, ZoneId), u64> = BTreeMap::new();
    let (mut noise_discarded, mut intra_zone) = (0, 0);
    for (o, d) in assignment.origin.iter().zip(&assignment.dest) {
        match (o, d) {
            (Some(o), Some(d)) if o == d => intra_zone += 1,
            (Some(o), Some(d)) => *counts.entry((*o, *d)).or_default() += 1,
            _ => noise_discarded += 1,
        }
    }
    let flows = counts
        .into_iter()
        .map(|((o, d), trip_count)| {
            let lookup = |z| centroid.get(&z).copied().ok_or(FlowError::UnknownZone(z));
            Ok(Flow {
                origin_zone: o,
                dest_zone: d,
                trip_count,
                classification: FlowClass::Secondary,
                representative_origin: lookup(o)?,
                representative_dest: lookup(d)?,
            })
        })
        .collect::<Result<_, FlowError>>()?;
    Ok(FlowAggregation {
        flows,
        noise_discarded,
        intra_zone,
    })
}

/// Mark flows with `trip_count >= mean + stddev` (population) as trends.
///
/// The comparison is done exactly in integers: with n flows and total S,
/// `c >= S/n + sigma` iff `n*c - S >= 0` and `n*(n*c - S)^2 >= sum((n*c_i - S)^2)`.
pub fn classify_flows(mut flows: Vec<Flow>) -> Vec<Flow> {
    let n = flows.len() as i128;
    if n == 0 {
        return flows;
    }
    let total: i128 = flows.iter().map(|f| f.trip_count as i128).sum();
    let spread: i128 = flows
        .iter()
        .map(|f| {
            let dev = n * f.trip_count as i128 - total;
            dev * dev
        })
        .sum();
    for f in &mut flows {
        let dev = n * f.trip_count as i128 - total;
        f.classification = if dev >= 0 && n * dev * dev >= spread {
            FlowClass::Trend
        } else {
            FlowClass::Secondary
        };
    }
    flows
}

/// The `k` busiest flows; ties go to the smaller (origin, destination) pair.
pub fn top_flows(mut flows: Vec<Flow>, k: usize) -> Vec<Flow> {
    flows.sort_by(|a, b| {
        b.trip_count
            .cmp(&a.trip_count)
            .then(a.origin_zone.cmp(&b.origin_zone))
            .then(a.dest_zone.cmp(&b.dest_zone))
    });
    flows.truncate(k);
    flows
}
