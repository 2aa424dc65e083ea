use proptest::prelude::*;
use urbanflow::flows::{
    aggregate_flows, classify_flows, cluster_endpoints, top_flows, ClusterParams, Flow, FlowClass,
};
use urbanflow::geo::GeoPoint;
use urbanflow::ingest::Dataset;
use urbanflow::linkage::{run_filter_pipeline, FilterConfig};
use urbanflow::synth::{generate, hotspots, SynthConfig};

#[test]
fn synthetic_commutes_form_hotspot_zones() {
    let cfg = SynthConfig::default();
    let records = generate(&cfg);
    let (links, counts) =
        run_filter_pipeline(&Dataset::from_records(records), &FilterConfig::default());
    assert!(counts.is_monotone());
    let (zones, assignment) = cluster_endpoints(&links, &ClusterParams::default()).unwrap();
    assert_eq!(zones.len(), cfg.hotspots);
    for spot in hotspots(&cfg) {
        assert!(
            zones.iter().any(|z| z.centroid.distance_to(&spot) < 150.0),
            "no zone near {spot}"
        );
    }

    let agg = aggregate_flows(&links, &zones, &assignment).unwrap();
    let routed: u64 = agg.flows.iter().map(|f| f.trip_count).sum();
    assert_eq!(
        routed as usize + agg.noise_discarded + agg.intra_zone,
        links.len()
    );
    assert!(agg.flows.iter().all(|f| f.origin_zone != f.dest_zone));
    let pairs: Vec<_> = agg
        .flows
        .iter()
        .map(|f| (f.origin_zone, f.dest_zone))
        .collect();
    assert!(pairs.windows(2).all(|w| w[0] < w[1]));

    let classified = classify_flows(agg.flows);
    assert!(classified
        .iter()
        .any(|f| f.classification == FlowClass::Trend));
    let top = top_flows(classified.clone(), 7);
    assert_eq!(top.len(), 7);
    assert!(top.windows(2).all(|w| w[0].trip_count >= w[1].trip_count));
    let smallest_top = top.last().unwrap().trip_count;
    assert!(
        classified
            .iter()
            .filter(|f| f.trip_count > smallest_top)
            .count()
            < 7
    );
}

fn flow(i: usize, trip_count: u64) -> Flow {
    let p = GeoPoint::new(0.0, 0.0).unwrap();
    Flow {
        origin_zone: i as u32,
        dest_zone: i as u32 + 1,
        trip_count,
        classification: FlowClass::Secondary,
        representative_origin: p,
        representative_dest: p,
    }
}

proptest! {
    #[test]
    fn trend_rule_matches_float_statistics(counts in prop::collection::vec(1u64..5000, 1..40)) {
        let flows: Vec<Flow> = counts.iter().enumerate().map(|(i, &c)| flow(i, c)).collect();
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<u64>() as f64 / n;
        let sigma = (counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n).sqrt();
        for f in classify_flows(flows) {
            let gap = f.trip_count as f64 - (mean + sigma);
            if gap.abs() > 1e-6 {
                prop_assert_eq!(f.classification == FlowClass::Trend, gap > 0.0);
            }
        }
    }

    #[test]
    fn classification_ignores_order(mut counts in prop::collection::vec(1u64..100, 1..30)) {
        let a = classify_flows(counts.iter().enumerate().map(|(i, &c)| flow(i, c)).collect());
        counts.reverse();
        let n = counts.len();
        let b = classify_flows(counts.iter().enumerate().map(|(i, &c)| flow(n - 1 - i, c)).collect());
        for f in &a {
            let g = b.iter().find(|g| g.origin_zone == f.origin_zone).unwrap();
            prop_assert_eq!(f.classification, g.classification);
        }
    }
}
