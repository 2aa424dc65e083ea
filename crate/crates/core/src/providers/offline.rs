//! Deterministic synthetic city.
//!
//! A square street grid centred on a configurable point. Every street edge
//! has a free-flow travel time and a congestion multiplier drawn once from a
//! generator seeded by the provider seed; edges near the centre are
//! congested more often. Transit lines run along every
//! `line_spacing`-th row and column with a stop at every node.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    DrivingRoute, DrivingStep, ProviderError, ProviderKind, RideEstimate, RouteProvider,
    TransitItinerary, WALK_SPEED_KMH,
};
use crate::geo::{encode_polyline, GeoPoint, METERS_PER_DEGREE};
use crate::router::{RouteStep, TravelMode, SAME_PLACE_M};

/// Ride-hail tariff in BRL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tariff {
    pub base: f64,
    pub per_km: f64,
    pub per_min: f64,
}

impl Default for Tariff {
    fn default() -> Self {
        Self {
            base: 5.00,
            per_km: 1.40,
            per_min: 0.26,
        }
    }
}

impl Tariff {
    pub fn price(&self, distance_m: f64, duration_s: f64) -> f64 {
        self.base + self.per_km * distance_m / 1000.0 + self.per_min * duration_s / 60.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CityConfig {
    pub center: GeoPoint,
    pub rows: usize,
    pub cols: usize,
    pub edge_m: f64,
    pub free_flow_kmh: f64,
    /// Probability that an edge is congested.
    pub congested_share: f64,
    /// Edges whose midpoint lies this close to the centre use
    /// `downtown_congested_share` instead.
    pub downtown_radius_m: f64,
    pub downtown_congested_share: f64,
    /// Multiplier range for congested edges.
    pub congested_multiplier: (f64, f64),
    /// Multiplier range for the remaining edges.
    pub calm_multiplier: (f64, f64),
    pub line_spacing: usize,
    pub line_offset: usize,
    pub transit_kmh: f64,
    pub headway_s: f64,
    pub tariff: Tariff,
    pub pickup_wait_s: (u32, u32),
}

impl Default for CityConfig {
    fn default() -> Self {
        Self {
            center: GeoPoint::new(-23.551615, -46.633611).expect("valid"),
            rows: 40,
            cols: 40,
            edge_m: 250.0,
            free_flow_kmh: 40.0,
            congested_share: 0.2,
            downtown_radius_m: 2500.0,
            downtown_congested_share: 0.6,
            congested_multiplier: (1.6, 3.0),
            calm_multiplier: (1.0, 1.3),
            line_spacing: 4,
            line_offset: 2,
            transit_kmh: 25.0,
            headway_s: 600.0,
            tariff: Tariff::default(),
            pickup_wait_s: (120, 480),
        }
    }
}

impl CityConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.rows < 2 || self.cols < 2 {
            return Err("grid needs at least 2 rows and 2 columns".into());
        }
        if !(self.edge_m > 0.0 && self.free_flow_kmh > 0.0 && self.transit_kmh > 0.0) {
            return Err("edge length and speeds must be positive".into());
        }
        for share in [self.congested_share, self.downtown_congested_share] {
            if !(0.0..=1.0).contains(&share) {
                return Err("congestion shares must lie in [0, 1]".into());
            }
        }
        if !(self.downtown_radius_m >= 0.0) {
            return Err("downtown radius must be non-negative".into());
        }
        for (lo, hi) in [self.congested_multiplier, self.calm_multiplier] {
            if !(lo >= 1.0 && hi > lo) {
                return Err("multiplier ranges need 1 <= low < high".into());
            }
        }
        if self.line_spacing == 0 || self.line_offset >= self.rows.min(self.cols) {
            return Err("transit lines do not fit the grid".into());
        }
        if !(self.headway_s >= 0.0) {
            return Err("headway must be non-negative".into());
        }
        if self.pickup_wait_s.0 > self.pickup_wait_s.1 {
            return Err("pickup wait range is inverted".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Line {
    Row(usize),
    Col(usize),
}

/// One vehicle ride between two stops on a line.
#[derive(Debug, Clone, Copy)]
struct Ride {
    line: Line,
    from: usize,
    to: usize,
}

/// The offline provider.
#[derive(Debug, Clone)]
pub struct SyntheticCity {
    cfg: CityConfig,
    seed: u64,
    nodes: Vec<GeoPoint>,
    /// Multipliers of horizontal edges, then vertical ones.
    multipliers: Vec<f64>,
}

impl SyntheticCity {
    pub fn new(cfg: CityConfig, seed: u64) -> Self {
        let mut nodes = Vec::with_capacity(cfg.rows * cfg.cols);
        for r in 0..cfg.rows {
            for c in 0..cfg.cols {
                let (lat, lon) = grid_to_degrees(&cfg, r as f64, c as f64);
                let round = |x: f64| (x * 1e5).round() / 1e5;
                nodes.push(GeoPoint::new(round(lat), round(lon)).expect("grid fits the globe"));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (rows, cols) = (cfg.rows, cfg.cols);
        let horizontal =
            (0..rows).flat_map(|r| (0..cols - 1).map(move |c| (r as f64, c as f64 + 0.5)));
        let vertical =
            (0..rows - 1).flat_map(|r| (0..cols).map(move |c| (r as f64 + 0.5, c as f64)));
        let multipliers = horizontal
            .chain(vertical)
            .map(|(r, c)| {
                let north = (r - (rows - 1) as f64 / 2.0) * cfg.edge_m;
                let east = (c - (cols - 1) as f64 / 2.0) * cfg.edge_m;
                let share = if north.hypot(east) <= cfg.downtown_radius_m {
                    cfg.downtown_congested_share
                } else {
                    cfg.congested_share
                };
                let (lo, hi) = if rng.random::<f64>() < share {
                    cfg.congested_multiplier
                } else {
                    cfg.calm_multiplier
                };
                rng.random_range(lo..hi)
            })
            .collect();
        Self {
            cfg,
            seed,
            nodes,
            multipliers,
        }
    }

    pub fn config(&self) -> &CityConfig {
        &self.cfg
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Location of grid node (row, col).
    pub fn node(&self, row: usize, col: usize) -> GeoPoint {
        self.nodes[row * self.cfg.cols + col]
    }

    /// Rows (and columns) that carry a transit line.
    pub fn line_indices(&self, count: usize) -> Vec<usize> {
        (self.cfg.line_offset..count)
            .step_by(self.cfg.line_spacing)
            .collect()
    }

    pub fn row_lines(&self) -> Vec<usize> {
        self.line_indices(self.cfg.rows)
    }

    pub fn col_lines(&self) -> Vec<usize> {
        self.line_indices(self.cfg.cols)
    }

    pub fn free_flow_edge_s(&self) -> f64 {
        self.cfg.edge_m * 3.6 / self.cfg.free_flow_kmh
    }

    /// Congestion multiplier of the edge between two adjacent nodes.
    pub fn multiplier(&self, a: (usize, usize), b: (usize, usize)) -> Option<f64> {
        let cols = self.cfg.cols;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if lo.0 == hi.0 && hi.1 == lo.1 + 1 {
            Some(self.multipliers[lo.0 * (cols - 1) + lo.1])
        } else if lo.1 == hi.1 && hi.0 == lo.0 + 1 {
            Some(self.multipliers[self.cfg.rows * (cols - 1) + lo.0 * cols + lo.1])
        } else {
            None
        }
    }

    /// Nearest grid node, or `None` when the point lies more than half a
    /// block outside the grid.
    pub fn snap(&self, p: GeoPoint) -> Option<(usize, usize)> {
        let (r, c) = degrees_to_grid(&self.cfg, p);
        let inside = |x: f64, n: usize| x >= -0.5 && x <= n as f64 - 0.5;
        if !inside(r, self.cfg.rows) || !inside(c, self.cfg.cols) {
            return None;
        }
        let clamp = |x: f64, n: usize| (x.round().max(0.0) as usize).min(n - 1);
        Some((clamp(r, self.cfg.rows), clamp(c, self.cfg.cols)))
    }

    fn snap_or_err(&self, p: GeoPoint) -> Result<(usize, usize), ProviderError> {
        self.snap(p).ok_or_else(|| {
            ProviderError::NoRoute(format!(
                "({}, {}) lies outside the synthetic grid",
                p.lat(),
                p.lon()
            ))
        })
    }

    fn live_cost_ms(&self, a: (usize, usize), b: (usize, usize)) -> u64 {
        let m = self.multiplier(a, b).expect("adjacent nodes");
        (self.free_flow_edge_s() * m * 1000.0).round() as u64
    }

    /// Fastest node sequence under live traffic. Ties resolve to the lower
    /// node index, so the result depends only on the seed.
    pub fn shortest_path(&self, from: (usize, usize), to: (usize, usize)) -> Vec<(usize, usize)> {
        let (rows, cols) = (self.cfg.rows, self.cfg.cols);
        let id = |n: (usize, usize)| n.0 * cols + n.1;
        let mut dist = vec![u64::MAX; rows * cols];
        let mut prev = vec![usize::MAX; rows * cols];
        let mut heap = BinaryHeap::new();
        dist[id(from)] = 0;
        heap.push(Reverse((0u64, id(from))));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            if u == id(to) {
                break;
            }
            let (r, c) = (u / cols, u % cols);
            let mut neighbours = Vec::with_capacity(4);
            if r > 0 {
                neighbours.push((r - 1, c));
            }
            if c > 0 {
                neighbours.push((r, c - 1));
            }
            if c + 1 < cols {
                neighbours.push((r, c + 1));
            }
            if r + 1 < rows {
                neighbours.push((r + 1, c));
            }
            for n in neighbours {
                let nd = d + self.live_cost_ms((r, c), n);
                let v = id(n);
                if nd < dist[v] || (nd == dist[v] && u < prev[v]) {
                    dist[v] = nd;
                    prev[v] = u;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        let mut path = vec![to];
        let mut cur = id(to);
        while cur != id(from) {
            cur = prev[cur];
            path.push((cur / cols, cur % cols));
        }
        path.reverse();
        path
    }

    fn driving_steps(&self, path: &[(usize, usize)]) -> Vec<DrivingStep> {
        let free = self.free_flow_edge_s();
        path.windows(2)
            .map(|w| {
                let (a, b) = (self.node(w[0].0, w[0].1), self.node(w[1].0, w[1].1));
                DrivingStep {
                    origin: a,
                    destination: b,
                    distance_m: self.cfg.edge_m,
                    free_flow_duration_s: free,
                    live_duration_s: free * self.multiplier(w[0], w[1]).expect("adjacent"),
                    polyline: encode_polyline(&[a, b]).expect("two points"),
                }
            })
            .collect()
    }

    /// Pickup wait at `origin`, fixed per seed and location.
    pub fn pickup_wait_s(&self, origin: GeoPoint) -> f64 {
        let (lo, hi) = self.cfg.pickup_wait_s;
        let lat = (origin.lat() * 1e5).round() as i64 as u64;
        let lon = (origin.lon() * 1e5).round() as i64 as u64;
        let h = splitmix64(splitmix64(splitmix64(self.seed) ^ lat) ^ lon);
        f64::from(lo) + (h % u64::from(hi - lo + 1)) as f64
    }

    fn walk_s(distance_m: f64) -> f64 {
        distance_m * 3.6 / WALK_SPEED_KMH
    }

    fn ride_s(&self, stops: usize) -> f64 {
        stops as f64 * self.cfg.edge_m * 3.6 / self.cfg.transit_kmh
    }

    fn ride_nodes(&self, ride: &Ride) -> Vec<(usize, usize)> {
        let span = |a: usize, b: usize| -> Vec<usize> {
            if a <= b {
                (a..=b).collect()
            } else {
                (b..=a).rev().collect()
            }
        };
        match ride.line {
            Line::Row(r) => span(ride.from, ride.to)
                .into_iter()
                .map(|c| (r, c))
                .collect(),
            Line::Col(c) => span(ride.from, ride.to)
                .into_iter()
                .map(|r| (r, c))
                .collect(),
        }
    }

    /// Every one- and two-line itinerary shape, in a fixed order.
    fn transit_candidates(&self, o: (usize, usize), d: (usize, usize)) -> Vec<Vec<Ride>> {
        let rows = self.row_lines();
        let cols = self.col_lines();
        let mut out = Vec::new();
        for &r in &rows {
            if o.1 != d.1 {
                out.push(vec![Ride {
                    line: Line::Row(r),
                    from: o.1,
                    to: d.1,
                }]);
            }
        }
        for &c in &cols {
            if o.0 != d.0 {
                out.push(vec![Ride {
                    line: Line::Col(c),
                    from: o.0,
                    to: d.0,
                }]);
            }
        }
        for &r in &rows {
            for &c in &cols {
                if o.1 != c && r != d.0 {
                    out.push(vec![
                        Ride {
                            line: Line::Row(r),
                            from: o.1,
                            to: c,
                        },
                        Ride {
                            line: Line::Col(c),
                            from: r,
                            to: d.0,
                        },
                    ]);
                }
            }
        }
        for &c in &cols {
            for &r in &rows {
                if o.0 != r && c != d.1 {
                    out.push(vec![
                        Ride {
                            line: Line::Col(c),
                            from: o.0,
                            to: r,
                        },
                        Ride {
                            line: Line::Row(r),
                            from: c,
                            to: d.1,
                        },
                    ]);
                }
            }
        }
        out
    }

    fn itinerary_time(&self, origin: GeoPoint, destination: GeoPoint, rides: &[Ride]) -> f64 {
        let first = self.ride_nodes(&rides[0])[0];
        let last = *self
            .ride_nodes(&rides[rides.len() - 1])
            .last()
            .expect("non-empty");
        let access = origin.distance_to(&self.node(first.0, first.1));
        let egress = self.node(last.0, last.1).distance_to(&destination);
        let riding: f64 = rides
            .iter()
            .map(|r| self.cfg.headway_s / 2.0 + self.ride_s(r.from.abs_diff(r.to)))
            .sum();
        Self::walk_s(access) + riding + Self::walk_s(egress)
    }
}

fn grid_to_degrees(cfg: &CityConfig, r: f64, c: f64) -> (f64, f64) {
    let north = (r - (cfg.rows - 1) as f64 / 2.0) * cfg.edge_m;
    let east = (c - (cfg.cols - 1) as f64 / 2.0) * cfg.edge_m;
    let lat = cfg.center.lat() + north / METERS_PER_DEGREE;
    let lon = cfg.center.lon() + east / (METERS_PER_DEGREE * cfg.center.lat().to_radians().cos());
    (lat, lon)
}

fn degrees_to_grid(cfg: &CityConfig, p: GeoPoint) -> (f64, f64) {
    let north = (p.lat() - cfg.center.lat()) * METERS_PER_DEGREE;
    let east =
        (p.lon() - cfg.center.lon()) * METERS_PER_DEGREE * cfg.center.lat().to_radians().cos();
    (
        north / cfg.edge_m + (cfg.rows - 1) as f64 / 2.0,
        east / cfg.edge_m + (cfg.cols - 1) as f64 / 2.0,
    )
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn same_place(origin: GeoPoint, destination: GeoPoint) -> Result<(), ProviderError> {
    if origin == destination {
        Err(ProviderError::NoRoute("origin equals destination".into()))
    } else {
        Ok(())
    }
}

impl RouteProvider for SyntheticCity {
    fn kind(&self) -> ProviderKind {
        ProviderKind::Offline
    }

    fn driving_way(
        &self,
        origin: GeoPoint,
        destination: GeoPoint,
    ) -> Result<DrivingRoute, ProviderError> {
        same_place(origin, destination)?;
        let (a, b) = (self.snap_or_err(origin)?, self.snap_or_err(destination)?);
        Ok(DrivingRoute {
            steps: self.driving_steps(&self.shortest_path(a, b)),
        })
    }

    fn transit_route(
        &self,
        origin: GeoPoint,
        destination: GeoPoint,
    ) -> Result<TransitItinerary, ProviderError> {
        same_place(origin, destination)?;
        let (a, b) = (self.snap_or_err(origin)?, self.snap_or_err(destination)?);
        let mut best: Option<(f64, Vec<Ride>)> = None;
        for rides in self.transit_candidates(a, b) {
            let t = self.itinerary_time(origin, destination, &rides);
            if best.as_ref().is_none_or(|(bt, _)| t < *bt) {
                best = Some((t, rides));
            }
        }
        let Some((_, rides)) = best else {
            return Err(ProviderError::NoRoute(
                "both points share the nearest stop".into(),
            ));
        };

        let mut steps = Vec::new();
        let mut here = origin;
        for ride in &rides {
            let nodes = self.ride_nodes(ride);
            let points: Vec<GeoPoint> = nodes.iter().map(|&(r, c)| self.node(r, c)).collect();
            let (board, alight) = (points[0], points[points.len() - 1]);
            if here.distance_to(&board) >= SAME_PLACE_M {
                steps.push(self.walk_route(here, board));
            }
            let stops = nodes.len() - 1;
            steps.push(RouteStep {
                mode: TravelMode::Transit,
                origin: board,
                destination: alight,
                duration_s: self.ride_s(stops),
                distance_m: stops as f64 * self.cfg.edge_m,
                wait_s: self.cfg.headway_s / 2.0,
                price: 0.0,
                polyline: encode_polyline(&points).expect("non-empty"),
            });
            here = alight;
        }
        if here.distance_to(&destination) >= SAME_PLACE_M {
            steps.push(self.walk_route(here, destination));
        }
        Ok(TransitItinerary::new(steps))
    }

    fn ride_estimate(
        &self,
        origin: GeoPoint,
        destination: GeoPoint,
    ) -> Result<RideEstimate, ProviderError> {
        same_place(origin, destination)?;
        let (a, b) = (self.snap_or_err(origin)?, self.snap_or_err(destination)?);
        let path = self.shortest_path(a, b);
        let (first, last) = (self.node(a.0, a.1), self.node(b.0, b.1));
        let access = origin.distance_to(&first) + last.distance_to(&destination);
        let free_speed = self.cfg.free_flow_kmh / 3.6;
        let driving = self.driving_steps(&path);
        let distance_m = access + driving.iter().map(|s| s.distance_m).sum::<f64>();
        let duration_s =
            access / free_speed + driving.iter().map(|s| s.live_duration_s).sum::<f64>();

        let mut points = vec![origin];
        points.extend(path.iter().map(|&(r, c)| self.node(r, c)));
        points.push(destination);
        Ok(RideEstimate {
            price: self.cfg.tariff.price(distance_m, duration_s),
            pickup_wait_s: self.pickup_wait_s(origin),
            duration_s,
            distance_m,
            polyline: encode_polyline(&points).expect("non-empty"),
        })
    }
}
