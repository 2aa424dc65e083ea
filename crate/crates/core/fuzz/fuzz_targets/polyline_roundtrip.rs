#![no_main]

use libfuzzer_sys::fuzz_target;
use urbanflow::geo::{decode_str, encode_polyline};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(points) = decode_str(text) {
        let encoded = encode_polyline(&points).expect("decoded points re-encode");
        assert_eq!(
            decode_str(encoded.as_str()).expect("re-encoded text decodes"),
            points
        );
    }
});
