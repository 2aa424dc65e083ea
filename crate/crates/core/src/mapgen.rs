//! Standalone HTML route maps with one mode-coloured line per step.
//!
//! Output is a single HTML file that loads Leaflet and map tiles by URL.
//! Every step becomes exactly one `L.polyline(...)` call whose points are
//! the step's decoded polyline.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flows::{Flow, FunctionalZone};
use crate::geo::{decode_str, GeoPoint, PolylineError};
use crate::router::{RouteStep, TravelMode};

const LEAFLET_CSS: &str = "https://unpkg.com/leaflet@1.9.4/dist/leaflet.css";
const LEAFLET_JS: &str = "https://unpkg.com/leaflet@1.9.4/dist/leaflet.js";
const TILE_URL: &str = "https://tile.openstreetmap.org/{z}/{x}/{y}.png";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapConfig {
    pub center: GeoPoint,
    pub zoom: u8,
    pub edge_width: u32,
    pub mode_colors: BTreeMap<TravelMode, String>,
}

impl Default for MapConfig {
    fn default() -> Self {
        let mode_colors = [
            (TravelMode::Transit, "red"),
            (TravelMode::Walk, "green"),
            (TravelMode::RideHail, "blue"),
            (TravelMode::Drive, "gray"),
        ]
        .into_iter()
        .map(|(m, c)| (m, c.to_string()))
        .collect();
        Self {
            center: GeoPoint::new(-23.551615, -46.633611).expect("valid"),
            zoom: 12,
            edge_width: 3,
            mode_colors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("zoom must lie in 1..=20, got {0}")]
    Zoom(u8),
    #[error("edge width must be at least 1")]
    EdgeWidth,
    #[error("no color configured for {0:?}")]
    MissingColor(TravelMode),
    #[error("color {0:?} contains characters not allowed in a color")]
    BadColor(String),
    #[error("step {index} has an undecodable polyline: {source}")]
    PolylineDecode { index: usize, source: PolylineError },
}

impl MapConfig {
    pub fn validate(&self) -> Result<(), MapError> {
        if !(1..=20).contains(&self.zoom) {
            return Err(MapError::Zoom(self.zoom));
        }
        if self.edge_width < 1 {
            return Err(MapError::EdgeWidth);
        }
        for mode in TravelMode::ALL {
            let color = self
                .mode_colors
                .get(&mode)
                .ok_or(MapError::MissingColor(mode))?;
            if color.is_empty()
                || !color
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || "#(),.% ".contains(c))
            {
                return Err(MapError::BadColor(color.clone()));
            }
        }
        Ok(())
    }
}

pub fn color_for_mode(mode: TravelMode, cfg: &MapConfig) -> &str {
    cfg.mode_colors.get(&mode).map_or("black", String::as_str)
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn js_string(s: &str) -> String {
    serde_json::to_string(s)
        .expect("string serializes")
        .replace('<', "\\u003c")
}

fn coords(points: &[GeoPoint]) -> String {
    let mut out = String::from("[");
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "[{:.5},{:.5}]", p.lat(), p.lon());
    }
    out.push(']');
    out
}

fn document(title: &str, cfg: &MapConfig, body: &str) -> String {
    let mut html = String::new();
    html.push_str("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(html, "<title>{}</title>", html_escape(title));
    let _ = writeln!(html, "<link rel=\"stylesheet\" href=\"{LEAFLET_CSS}\">");
    let _ = writeln!(html, "<script src=\"{LEAFLET_JS}\"></script>");
    html.push_str("<style>html, body, #map { height: 100%; margin: 0; }</style>\n");
    html.push_str("</head>\n<body>\n<div id=\"map\"></div>\n<script>\n");
    let _ = writeln!(
        html,
        "var map = L.map(\"map\").setView([{:.6},{:.6}], {});",
        cfg.center.lat(),
        cfg.center.lon(),
        cfg.zoom
    );
    let _ = writeln!(
        html,
        "L.tileLayer(\"{TILE_URL}\", {{\"maxZoom\": 19, \"attribution\": \"&copy; OpenStreetMap contributors\"}}).addTo(map);"
    );
    html.push_str(body);
    html.push_str("</script>\n</body>\n</html>\n");
    html
}

/// Render the steps of one route.
pub fn render_map(steps: &[RouteStep], cfg: &MapConfig, title: &str) -> Result<String, MapError> {
    cfg.validate()?;
    let mut body = String::new();
    for (index, step) in steps.iter().enumerate() {
        let points = decode_str(step.polyline.as_str())
            .map_err(|source| MapError::PolylineDecode { index, source })?;
        let _ = writeln!(
            body,
            "L.polyline({}, {{\"color\": {}, \"weight\": {}}}).bindTooltip({}).addTo(map);",
            coords(&points),
            js_string(color_for_mode(step.mode, cfg)),
            cfg.edge_width,
            js_string(&format!("{:?}", step.mode)),
        );
    }
    Ok(document(title, cfg, &body))
}

/// Overview of flows as straight lines between zone centroids, thicker for
/// busier flows.
pub fn render_flow_map(
    flows: &[Flow],
    zones: &[FunctionalZone],
    cfg: &MapConfig,
    title: &str,
) -> Result<String, MapError> {
    cfg.validate()?;
    let centroid: BTreeMap<_, _> = zones.iter().map(|z| (z.zone_id, z.centroid)).collect();
    let busiest = flows.iter().map(|f| f.trip_count).max().unwrap_or(1).max(1);
    let mut body = String::new();
    for z in zones {
        let _ = writeln!(
            body,
            "L.circleMarker([{:.5},{:.5}], {{\"radius\": 5, \"color\": \"black\"}}).bindTooltip({}).addTo(map);",
            z.centroid.lat(),
            z.centroid.lon(),
            js_string(&format!("zone {} ({} endpoints)", z.zone_id, z.member_count)),
        );
    }
    for f in flows {
        let (Some(&a), Some(&b)) = (centroid.get(&f.origin_zone), centroid.get(&f.dest_zone))
        else {
            continue;
        };
        let weight = cfg.edge_width as f64 * (1.0 + 3.0 * f.trip_count as f64 / busiest as f64);
        let _ = writeln!(
            body,
            "L.polyline({}, {{\"color\": {}, \"weight\": {:.2}}}).bindTooltip({}).addTo(map);",
            coords(&[a, b]),
            js_string(color_for_mode(TravelMode::Drive, cfg)),
            weight,
            js_string(&format!("{} ({} trips)", f.id(), f.trip_count)),
        );
    }
    Ok(document(title, cfg, &body))
}
