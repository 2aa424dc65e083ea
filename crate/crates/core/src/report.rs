//! Comparison metrics, per-flow comparisons, cross-flow means, CSV/JSON
//! reports and SVG bar charts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::router::{RouteLabel, RouteOption, RouteStep, TravelMode};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OptionMetrics {
    /// BRL.
    pub price: f64,
    /// In-motion time, waits excluded.
    pub duration_s: f64,
    pub wait_s: f64,
    pub distance_m: f64,
    pub walk_distance_m: f64,
}

/// Metrics of a step sequence with `fare` charged per transit boarding.
pub fn compute_metrics(steps: &[RouteStep], fare: f64) -> OptionMetrics {
    let mut m = OptionMetrics::default();
    let mut boardings = 0u32;
    for s in steps {
        match s.mode {
            TravelMode::Transit => boardings += 1,
            TravelMode::RideHail => m.price += s.price,
            TravelMode::Walk => m.walk_distance_m += s.distance_m,
            TravelMode::Drive => {}
        }
        m.duration_s += s.duration_s;
        m.wait_s += s.wait_s;
        m.distance_m += s.distance_m;
    }
    m.price += f64::from(boardings) * fare;
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    Price,
    Duration,
    Wait,
    Distance,
    WalkDistance,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Price,
        Metric::Duration,
        Metric::Wait,
        Metric::Distance,
        Metric::WalkDistance,
    ];

    pub fn of(self, m: &OptionMetrics) -> f64 {
        match self {
            Metric::Price => m.price,
            Metric::Duration => m.duration_s,
            Metric::Wait => m.wait_s,
            Metric::Distance => m.distance_m,
            Metric::WalkDistance => m.walk_distance_m,
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            Metric::Price => "price",
            Metric::Duration => "duration",
            Metric::Wait => "wait",
            Metric::Distance => "distance",
            Metric::WalkDistance => "walk_distance",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Metric::Price => "Price (BRL)",
            Metric::Duration => "Travel time (s)",
            Metric::Wait => "Wait time (s)",
            Metric::Distance => "Distance (m)",
            Metric::WalkDistance => "Walking distance (m)",
        }
    }
}

/// The four compared options of one flow. Labels without an option are
/// stored as `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowComparison {
    pub flow_id: String,
    pub labels: BTreeMap<RouteLabel, Option<OptionMetrics>>,
}

impl FlowComparison {
    pub fn get(&self, label: RouteLabel) -> Option<&OptionMetrics> {
        self.labels.get(&label).and_then(Option::as_ref)
    }

    pub fn present(&self) -> impl Iterator<Item = (RouteLabel, &OptionMetrics)> {
        RouteLabel::COMPARED
            .into_iter()
            .filter_map(|l| self.get(l).map(|m| (l, m)))
    }
}

pub fn compare_flow(flow_id: impl Into<String>, options: &[RouteOption]) -> FlowComparison {
    let labels = RouteLabel::COMPARED
        .into_iter()
        .map(|l| (l, options.iter().find(|o| o.label == l).map(|o| o.metrics)))
        .collect();
    FlowComparison {
        flow_id: flow_id.into(),
        labels,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMean {
    /// Flows in which the label exists.
    pub flows: usize,
    pub mean: OptionMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub flow_count: usize,
    pub labels: BTreeMap<RouteLabel, Option<LabelMean>>,
}

impl AggregateReport {
    pub fn get(&self, label: RouteLabel) -> Option<&LabelMean> {
        self.labels.get(&label).and_then(Option::as_ref)
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("nothing to aggregate")]
    EmptyInput,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Mean of `values`, summed in ascending order so the result does not
/// depend on the order flows arrive in.
fn mean(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn aggregate(comparisons: &[FlowComparison]) -> Result<AggregateReport, ReportError> {
    if comparisons.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    let labels = RouteLabel::COMPARED
        .into_iter()
        .map(|label| {
            let present: Vec<&OptionMetrics> =
                comparisons.iter().filter_map(|c| c.get(label)).collect();
            if present.is_empty() {
                return (label, None);
            }
            let col = |metric: Metric| mean(present.iter().map(|m| metric.of(m)).collect());
            let mean = OptionMetrics {
                price: col(Metric::Price),
                duration_s: col(Metric::Duration),
                wait_s: col(Metric::Wait),
                distance_m: col(Metric::Distance),
                walk_distance_m: col(Metric::WalkDistance),
            };
            (
                label,
                Some(LabelMean {
                    flows: present.len(),
                    mean,
                }),
            )
        })
        .collect();
    Ok(AggregateReport {
        flow_count: comparisons.len(),
        labels,
    })
}

/// Decimal text of `x` rounded half-up to `decimals` places. Rounding acts
/// on the shortest representation that reads back as `x`, so 1.005 shows
/// as 1.01.
pub fn round_half_up(x: f64, decimals: usize) -> String {
    let text = format!("{}", x.abs());
    let (int, frac) = text.split_once('.').unwrap_or((&text, ""));
    let mut digits: Vec<u8> = int
        .bytes()
        .chain(frac.bytes().chain(std::iter::repeat(b'0')).take(decimals))
        .collect();
    if frac.as_bytes().get(decimals).is_some_and(|&d| d >= b'5') {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, b'1');
                break;
            }
            i -= 1;
            if digits[i] == b'9' {
                digits[i] = b'0';
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - decimals;
    let mut out = String::new();
    let is_zero = digits.iter().all(|&d| d == b'0');
    if x.is_sign_negative() && !is_zero {
        out.push('-');
    }
    out.push_str(std::str::from_utf8(&digits[..split]).expect("ascii"));
    if decimals > 0 {
        out.push('.');
        out.push_str(std::str::from_utf8(&digits[split..]).expect("ascii"));
    }
    out
}

pub const REPORT_COLUMNS: [&str; 7] = [
    "flow_id",
    "label",
    "price_brl",
    "duration_s",
    "wait_s",
    "distance_m",
    "walk_distance_m",
];

/// One row per flow and present label.
pub fn report_csv(comparisons: &[FlowComparison]) -> String {
    let mut out = REPORT_COLUMNS.join(",");
    out.push('\n');
    for c in comparisons {
        for (label, m) in c.present() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                csv_field(&c.flow_id),
                label.as_str(),
                round_half_up(m.price, 2),
                round_half_up(m.duration_s, 1),
                round_half_up(m.wait_s, 1),
                round_half_up(m.distance_m, 1),
                round_half_up(m.walk_distance_m, 1),
            );
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub aggregate: AggregateReport,
    pub flows: Vec<FlowComparison>,
}

pub fn report_json(report: &AggregateReport, comparisons: &[FlowComparison]) -> String {
    let doc = ReportDocument {
        aggregate: report.clone(),
        flows: comparisons.to_vec(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    text
}

/// Write `report.csv` and `report.json` into `dir`.
pub fn emit_report(
    report: &AggregateReport,
    comparisons: &[FlowComparison],
    dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir)?;
    let csv = dir.join("report.csv");
    let json = dir.join("report.json");
    fs::write(&csv, report_csv(comparisons))?;
    fs::write(&json, report_json(report, comparisons))?;
    Ok(vec![csv, json])
}

pub const CHART_WIDTH: f64 = 480.0;
pub const CHART_HEIGHT: f64 = 320.0;
/// Height available to the tallest bar.
pub const PLOT_HEIGHT: f64 = 220.0;
/// y coordinate of the chart baseline.
pub const BASELINE_Y: f64 = 270.0;
const BAR_WIDTH: f64 = 64.0;
const BAR_GAP: f64 = 40.0;
const LEFT: f64 = 52.0;

pub fn label_color(label: RouteLabel) -> &'static str {
    match label {
        RouteLabel::Transit => "#d62728",
        RouteLabel::RideHail => "#1f77b4",
        RouteLabel::Hybrid1 => "#ff7f0e",
        RouteLabel::Hybrid2 => "#9467bd",
        RouteLabel::Other => "#7f7f7f",
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Bar chart of one metric's means. Bars follow the comparison label order
/// and their heights are proportional to the values.
pub fn render_chart(report: &AggregateReport, metric: Metric) -> String {
    let bars: Vec<(RouteLabel, f64)> = RouteLabel::COMPARED
        .into_iter()
        .filter_map(|l| report.get(l).map(|m| (l, metric.of(&m.mean))))
        .collect();
    let max = bars.iter().map(|b| b.1).fold(0.0, f64::max);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CHART_WIDTH}" height="{CHART_HEIGHT}" viewBox="0 0 {CHART_WIDTH} {CHART_HEIGHT}" data-metric="{}">"#,
        metric.slug()
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        CHART_WIDTH / 2.0,
        xml_escape(metric.title())
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{BASELINE_Y}" x2="{}" y2="{BASELINE_Y}" stroke="black"/>"#,
        CHART_WIDTH - 20.0
    );
    for (i, (label, value)) in bars.iter().enumerate() {
        let height = if max > 0.0 {
            value / max * PLOT_HEIGHT
        } else {
            0.0
        };
        let x = LEFT + BAR_GAP / 2.0 + i as f64 * (BAR_WIDTH + BAR_GAP);
        let y = BASELINE_Y - height;
        let _ = writeln!(
            svg,
            r#"<rect class="bar" data-label="{}" data-value="{}" x="{x:.3}" y="{y:.3}" width="{BAR_WIDTH}" height="{height:.3}" fill="{}"/>"#,
            label.as_str(),
            value,
            label_color(*label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            x + BAR_WIDTH / 2.0,
            y - 4.0,
            round_half_up(*value, if metric == Metric::Price { 2 } else { 1 })
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.3}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            x + BAR_WIDTH / 2.0,
            BASELINE_Y + 18.0,
            label.as_str()
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Write one chart per metric as `<metric>.svg` into `dir`.
pub fn emit_charts(report: &AggregateReport, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir)?;
    Metric::ALL
        .into_iter()
        .map(|metric| {
            let path = dir.join(format!("{}.svg", metric.slug()));
            fs::write(&path, render_chart(report, metric))?;
            Ok(path)
        })
        .collect()
}
