mod support;

use proptest::prelude::*;
use sha2::{Digest, Sha256};
use support::offset;
use urbanflow::geo::{decode_str, GeoPoint};
use urbanflow::providers::{
    build_provider, CityConfig, ProviderConfig, ProviderError, ProviderKind, RouteProvider,
    SyntheticCity,
};
use urbanflow::router::{TravelMode, SAME_PLACE_M};

fn city(seed: u64) -> SyntheticCity {
    SyntheticCity::new(CityConfig::default(), seed)
}

/// A point near grid node (r, c), displaced by up to 100 m.
fn near_node(c: &SyntheticCity, node: (usize, usize), shift: (f64, f64)) -> GeoPoint {
    offset(c.node(node.0, node.1), shift.0, shift.1)
}

fn polyline_ends(text: &str) -> (GeoPoint, GeoPoint) {
    let pts = decode_str(text).unwrap();
    (pts[0], pts[pts.len() - 1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn offline_responses_honour_the_contract(
        seed in 0u64..6,
        a in (0usize..40, 0usize..40),
        b in (0usize..40, 0usize..40),
        da in (-100.0f64..100.0, -100.0f64..100.0),
        db in (-100.0f64..100.0, -100.0f64..100.0),
    ) {
        let c = city(seed);
        let (o, d) = (near_node(&c, a, da), near_node(&c, b, db));
        prop_assume!(o.distance_to(&d) > 1.0);

        match c.driving_way(o, d) {
            Ok(route) => {
                prop_assert!(route.is_contiguous());
                for s in &route.steps {
                    prop_assert!(s.free_flow_duration_s > 0.0 && s.live_duration_s >= s.free_flow_duration_s);
                    let (first, last) = polyline_ends(s.polyline.as_str());
                    prop_assert!(first.near(&s.origin, 1.0) && last.near(&s.destination, 1.0));
                }
            }
            Err(e) => prop_assert!(a == b, "unexpected {:?}", e),
        }

        match c.transit_route(o, d) {
            Ok(it) => {
                prop_assert!(it.is_contiguous());
                prop_assert!(it.steps[0].origin.near(&o, SAME_PLACE_M));
                prop_assert!(it.steps.last().unwrap().destination.near(&d, SAME_PLACE_M));
                let boardings = it.steps.iter().filter(|s| s.mode == TravelMode::Transit).count();
                prop_assert_eq!(it.boardings as usize, boardings);
                prop_assert!((1..=2).contains(&boardings));
                prop_assert!(it.steps.iter().all(|s| s.mode != TravelMode::Walk || s.wait_s == 0.0));
            }
            Err(ProviderError::NoRoute(_)) => {}
            Err(e) => prop_assert!(false, "unexpected {:?}", e),
        }

        let ride = c.ride_estimate(o, d).unwrap();
        let tariff = c.config().tariff;
        prop_assert_eq!(ride.price, tariff.price(ride.distance_m, ride.duration_s));
        prop_assert!((120.0..=480.0).contains(&ride.pickup_wait_s));
        prop_assert!(ride.distance_m + 1e-6 >= o.distance_to(&d));
        let (first, last) = polyline_ends(ride.polyline.as_str());
        prop_assert!(first.near(&o, 1.0) && last.near(&d, 1.0));
    }

    #[test]
    fn same_seed_same_answers(seed in any::<u64>(), a in (0usize..40, 0usize..40), b in (0usize..40, 0usize..40)) {
        prop_assume!(a != b);
        let (x, y) = (city(seed), city(seed));
        let (o, d) = (x.node(a.0, a.1), x.node(b.0, b.1));
        prop_assert_eq!(x.driving_way(o, d), y.driving_way(o, d));
        prop_assert_eq!(x.ride_estimate(o, d), y.ride_estimate(o, d));
        prop_assert_eq!(x.transit_route(o, d), y.transit_route(o, d));
    }
}

#[test]
fn points_off_the_grid_have_no_route() {
    let c = city(1);
    let inside = c.node(20, 20);
    let far = offset(c.node(0, 0), -5000.0, -5000.0);
    assert!(matches!(
        c.driving_way(inside, far),
        Err(ProviderError::NoRoute(_))
    ));
    assert!(matches!(
        c.transit_route(far, inside),
        Err(ProviderError::NoRoute(_))
    ));
    assert!(matches!(
        c.ride_estimate(inside, far),
        Err(ProviderError::NoRoute(_))
    ));
}

#[test]
fn cache_files_are_named_by_key_digest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ProviderConfig {
        seed: 3,
        cache_dir: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let provider = build_provider(&cfg).unwrap();
    let c = city(3);
    let (o, d) = (c.node(4, 4), c.node(30, 12));
    let fresh = provider.ride_estimate(o, d).unwrap();

    let key = format!(
        "ride|offline|{:.5},{:.5}|{:.5},{:.5}",
        o.lat(),
        o.lon(),
        d.lat(),
        d.lon()
    );
    let name = format!("{}.json", hex::encode(Sha256::digest(key.as_bytes())));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(&name)).unwrap()).unwrap();
    assert_eq!(doc["key"], key);
    assert_eq!(doc["response"]["price"].as_f64(), Some(fresh.price));

    // A provider with another seed over the same directory answers from the cache.
    let other = build_provider(&ProviderConfig {
        seed: 99,
        ..cfg.clone()
    })
    .unwrap();
    assert_eq!(other.ride_estimate(o, d).unwrap(), fresh);
    assert_ne!(city(99).ride_estimate(o, d).unwrap(), fresh);
    assert_eq!(other.kind(), ProviderKind::Offline);

    let files = std::fs::read_dir(dir.path()).unwrap().count();
    other.driving_way(o, d).unwrap();
    other.transit_route(o, d).unwrap();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), files + 2);
}

#[test]
fn http_provider_needs_its_feature_or_keys() {
    let cfg = ProviderConfig {
        kind: ProviderKind::Http,
        ..Default::default()
    };
    // Without the feature the build is refused; with it, missing keys surface on first use.
    match build_provider(&cfg) {
        Err(e) => assert!(e.to_string().contains("http"), "{e}"),
        Ok(p) => {
            let (o, d) = (city(0).node(1, 1), city(0).node(2, 2));
            if std::env::var_os("URBANFLOW_TOMTOM_KEY").is_none() {
                assert!(matches!(
                    p.driving_way(o, d),
                    Err(ProviderError::ProviderUnavailable(_))
                ));
            }
        }
    }
}
