#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = urbanflow::linkage::read_links_csv(data);
});
