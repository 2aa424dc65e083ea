//! Urban mobility flows from geotagged observations, and multimodal route
//! options (walk, public transit, ride-hail) for the busiest flows.
//!
//! The pipeline runs in stages:
//!
//! 1. [`ingest`] reads `uid,lat,lon,timestamp_ms` observation files.
//! 2. [`linkage`] joins consecutive observations of each user into trip
//!    links and filters them (same day, minimum distance and duration,
//!    plausible speed).
//! 3. [`flows`] clusters link endpoints into functional zones and aggregates
//!    links into classified zone-to-zone flows.
//! 4. [`router`] derives mode-transition points from congested driving steps
//!    and enumerates multimodal options through a [`providers::RouteProvider`].
//! 5. [`report`] computes per-option metrics, per-flow comparisons and
//!    cross-flow means; [`mapgen`] renders each option as an HTML map.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod flows;
pub mod geo;
pub mod ingest;
pub mod linkage;
pub mod mapgen;
pub mod providers;
pub mod report;
pub mod router;
pub mod synth;

pub use geo::{haversine_distance, speed_kmh, EncodedPolyline, GeoPoint, Path};
