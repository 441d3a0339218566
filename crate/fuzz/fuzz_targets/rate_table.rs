#![no_main]

use libfuzzer_sys::fuzz_target;
use qcoupler::noise::parse_rate_table;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_rate_table(text);
    }
});
