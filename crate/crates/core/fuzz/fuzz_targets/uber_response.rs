#![no_main]

use libfuzzer_sys::fuzz_target;
use urbanflow::geo::GeoPoint;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let (prices, times) = text.split_once('\0').unwrap_or((text, ""));
    let origin = GeoPoint::new(-23.55, -46.63).unwrap();
    let destination = GeoPoint::new(-23.60, -46.70).unwrap();
    let _ = urbanflow::providers::http::parse_uber_estimate(
        prices,
        times,
        "UberX",
        origin,
        destination,
    );
});
