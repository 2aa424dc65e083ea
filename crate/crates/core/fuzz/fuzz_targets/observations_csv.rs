#![no_main]

use libfuzzer_sys::fuzz_target;
use urbanflow::ingest::parse_observations;

fuzz_target!(|data: &[u8]| {
    if let Ok(dataset) = parse_observations(data, "fuzz", false) {
        assert_eq!(dataset.rejected_count, dataset.rejections.len());
    }
    let _ = parse_observations(data, "fuzz", true);
});
