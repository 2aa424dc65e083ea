mod support;

use std::collections::BTreeMap;

use proptest::prelude::*;
use regex::Regex;
use support::pt;
use urbanflow::geo::encode_polyline;
use urbanflow::providers::{CityConfig, RouteProvider, SyntheticCity, TransitItinerary};
use urbanflow::report::{
    aggregate, compare_flow, compute_metrics, emit_charts, emit_report, render_chart,
    AggregateReport, FlowComparison, LabelMean, Metric, OptionMetrics, PLOT_HEIGHT,
};
use urbanflow::router::{
    compute_route_options, label_options, OptionKind, RouteLabel, RouteOption, RouteStep,
    RouterConfig, TravelMode,
};

const FARE: f64 = 4.30;

fn transit_leg(from: (f64, f64), to: (f64, f64), mode: TravelMode) -> RouteStep {
    let (o, d) = (pt(from.0, from.1), pt(to.0, to.1));
    RouteStep {
        mode,
        origin: o,
        destination: d,
        duration_s: 300.0,
        distance_m: o.distance_to(&d),
        wait_s: if mode == TravelMode::Transit {
            300.0
        } else {
            0.0
        },
        price: 0.0,
        polyline: encode_polyline(&[o, d]).unwrap(),
    }
}

#[test]
fn pure_transit_costs_one_fare_per_boarding() {
    let city = SyntheticCity::new(CityConfig::default(), 7);
    let mut seen = BTreeMap::new();
    'search: for r in (0..40).step_by(5) {
        for c in (0..40).step_by(5) {
            let (o, d) = (city.node(r, c), city.node(39 - r, (c + 17) % 40));
            if let Ok(it) = city.transit_route(o, d) {
                let option = RouteOption::new(OptionKind::PureTransit, it.steps.clone(), FARE);
                seen.entry(it.boardings).or_insert(option);
                if seen.len() == 2 {
                    break 'search;
                }
            }
        }
    }
    let built = TransitItinerary::new(vec![
        transit_leg((0.0, 0.0), (0.0, 0.01), TravelMode::Walk),
        transit_leg((0.0, 0.01), (0.0, 0.03), TravelMode::Transit),
        transit_leg((0.0, 0.03), (0.02, 0.03), TravelMode::Transit),
        transit_leg((0.02, 0.03), (0.02, 0.05), TravelMode::Transit),
    ]);
    assert_eq!(built.boardings, 3);
    seen.insert(
        3,
        RouteOption::new(OptionKind::PureTransit, built.steps, FARE),
    );

    for b in 1..=3u32 {
        let option = seen
            .get(&b)
            .unwrap_or_else(|| panic!("no itinerary with {b} boardings"));
        assert_eq!(option.metrics.price, f64::from(b) * FARE);
    }
}

#[test]
fn waiting_and_moving_are_kept_apart() {
    let city = SyntheticCity::new(CityConfig::default(), 7);
    let (o, d) = (city.node(6, 10), city.node(33, 27));
    let got = compute_route_options(o, d, &city, &RouterConfig::default()).unwrap();
    for option in &got.options {
        let m = option.metrics;
        let moving: f64 = option.steps.iter().map(|s| s.duration_s).sum();
        let waiting: f64 = option.steps.iter().map(|s| s.wait_s).sum();
        assert_eq!(m.duration_s, moving);
        assert_eq!(m.wait_s, waiting);
        if option.source == OptionKind::PureRideHail {
            assert_eq!(m.walk_distance_m, 0.0);
        }
        let walked: f64 = option
            .steps
            .iter()
            .filter(|s| s.mode == TravelMode::Walk)
            .map(|s| s.distance_m)
            .sum();
        assert_eq!(m.walk_distance_m, walked);
    }
}

fn metrics_strategy() -> impl Strategy<Value = OptionMetrics> {
    (
        0.0f64..80.0,
        0.0f64..4000.0,
        0.0f64..1500.0,
        0.0f64..20_000.0,
        0.0f64..2000.0,
    )
        .prop_map(
            |(price, duration_s, wait_s, distance_m, walk_distance_m)| OptionMetrics {
                price,
                duration_s,
                wait_s,
                distance_m,
                walk_distance_m,
            },
        )
}

fn comparisons_strategy() -> impl Strategy<Value = Vec<FlowComparison>> {
    prop::collection::vec(
        prop::collection::vec(prop::option::of(metrics_strategy()), 4),
        1..12,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, cells)| FlowComparison {
                flow_id: format!("{i}-{}", i + 1),
                labels: RouteLabel::COMPARED.into_iter().zip(cells).collect(),
            })
            .collect()
    })
}

/// Straightforward per-label means, summed in input order.
fn naive_means(comparisons: &[FlowComparison]) -> BTreeMap<RouteLabel, (usize, [f64; 5])> {
    let mut out = BTreeMap::new();
    for label in RouteLabel::COMPARED {
        let rows: Vec<OptionMetrics> = comparisons
            .iter()
            .filter_map(|c| c.labels[&label])
            .collect();
        if rows.is_empty() {
            continue;
        }
        let n = rows.len() as f64;
        let mut sums = [0.0; 5];
        for m in &rows {
            for (s, v) in sums.iter_mut().zip([
                m.price,
                m.duration_s,
                m.wait_s,
                m.distance_m,
                m.walk_distance_m,
            ]) {
                *s += v;
            }
        }
        out.insert(label, (rows.len(), sums.map(|s| s / n)));
    }
    out
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn aggregate_matches_naive_means(rows in comparisons_strategy()) {
        let report = aggregate(&rows).unwrap();
        let naive = naive_means(&rows);
        for label in RouteLabel::COMPARED {
            match (report.get(label), naive.get(&label)) {
                (None, None) => {}
                (Some(LabelMean { flows, mean }), Some((n, expected))) => {
                    prop_assert_eq!(flows, n);
                    let got = [mean.price, mean.duration_s, mean.wait_s, mean.distance_m, mean.walk_distance_m];
                    for (g, e) in got.iter().zip(expected) {
                        prop_assert!(close(*g, *e), "{} vs {}", g, e);
                    }
                }
                other => prop_assert!(false, "presence differs: {:?}", other),
            }
        }
    }

    #[test]
    fn aggregate_ignores_flow_order(rows in comparisons_strategy(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(aggregate(&rows).unwrap().labels, aggregate(&shuffled).unwrap().labels);
    }

    #[test]
    fn bar_heights_follow_values(rows in comparisons_strategy()) {
        let report = aggregate(&rows).unwrap();
        check_chart_geometry(&report)?;
    }
}

fn check_chart_geometry(report: &AggregateReport) -> Result<(), TestCaseError> {
    let bar =
        Regex::new(r#"<rect class="bar" data-label="(\w+)" [^>]*height="([0-9.]+)""#).unwrap();
    for metric in Metric::ALL {
        let svg = render_chart(report, metric);
        let expected: Vec<(RouteLabel, f64)> = RouteLabel::COMPARED
            .into_iter()
            .filter_map(|l| report.get(l).map(|m| (l, metric.of(&m.mean))))
            .collect();
        let bars: Vec<(String, f64)> = bar
            .captures_iter(&svg)
            .map(|c| (c[1].to_string(), c[2].parse().unwrap()))
            .collect();
        prop_assert_eq!(bars.len(), expected.len());
        let max = expected.iter().map(|e| e.1).fold(0.0, f64::max);
        for ((label, height), (want_label, value)) in bars.iter().zip(&expected) {
            prop_assert_eq!(label.as_str(), want_label.as_str());
            let want = if max > 0.0 {
                value / max * PLOT_HEIGHT
            } else {
                0.0
            };
            prop_assert!(
                (height - want).abs() <= 0.5,
                "{} bar {} px, expected {}",
                label,
                height,
                want
            );
        }
        prop_assert!(!svg.contains("href") && !svg.contains("<script"));
    }
    Ok(())
}

#[test]
fn zero_metric_renders_flat_bars() {
    let zero = OptionMetrics {
        price: 10.0,
        ..Default::default()
    };
    let rows = vec![FlowComparison {
        flow_id: "0-1".into(),
        labels: RouteLabel::COMPARED
            .into_iter()
            .map(|l| (l, Some(zero)))
            .collect(),
    }];
    let report = aggregate(&rows).unwrap();
    let svg = render_chart(&report, Metric::WalkDistance);
    assert_eq!(svg.matches(r#"class="bar""#).count(), 4);
    assert_eq!(svg.matches(r#"height="0.000""#).count(), 4);
    check_chart_geometry(&report).unwrap();
}

#[test]
fn report_files_for_synthetic_flows() {
    let city = SyntheticCity::new(CityConfig::default(), 7);
    let cfg = RouterConfig::default();
    let pairs = [((6, 10), (33, 27)), ((12, 5), (25, 33)), ((8, 8), (31, 29))];
    let mut rows = Vec::new();
    for (i, (a, b)) in pairs.iter().enumerate() {
        let mut got =
            compute_route_options(city.node(a.0, a.1), city.node(b.0, b.1), &city, &cfg).unwrap();
        label_options(&mut got.options);
        rows.push(compare_flow(format!("{i}-{}", i + 10), &got.options));
    }
    let report = aggregate(&rows).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&report, &rows, dir.path()).unwrap();
    let charts = emit_charts(&report, &dir.path().join("charts")).unwrap();
    assert_eq!(charts.len(), 5);

    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("flow_id,label,price_brl,duration_s,wait_s,distance_m,walk_distance_m")
    );
    let present: usize = rows.iter().map(|r| r.present().count()).sum();
    assert_eq!(lines.count(), present);

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(json["aggregate"]["flow_count"], 3);
    let price = json["aggregate"]["labels"]["Transit"]["mean"]["price"]
        .as_f64()
        .unwrap();
    assert_eq!(price, report.get(RouteLabel::Transit).unwrap().mean.price);
    check_chart_geometry(&report).unwrap();
}

#[test]
fn metrics_of_steps_match_by_hand() {
    let walk = transit_leg((0.0, 0.0), (0.0, 0.001), TravelMode::Walk);
    let mut ride = transit_leg((0.0, 0.001), (0.0, 0.02), TravelMode::RideHail);
    ride.price = 17.25;
    ride.wait_s = 240.0;
    let bus = transit_leg((0.0, 0.02), (0.0, 0.03), TravelMode::Transit);
    let m = compute_metrics(&[walk.clone(), ride.clone(), bus.clone()], FARE);
    assert_eq!(m.price, 17.25 + FARE);
    assert_eq!(m.wait_s, 540.0);
    assert_eq!(m.duration_s, 900.0);
    assert_eq!(m.walk_distance_m, walk.distance_m);
    assert_eq!(
        m.distance_m,
        walk.distance_m + ride.distance_m + bus.distance_m
    );
}
