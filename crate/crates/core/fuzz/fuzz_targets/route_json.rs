#![no_main]

use libfuzzer_sys::fuzz_target;
use urbanflow::router::RouteOptions;

fuzz_target!(|data: &[u8]| {
    let _ = serde_json::from_slice::<RouteOptions>(data);
});
