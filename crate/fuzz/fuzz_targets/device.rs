#![no_main]

use libfuzzer_sys::fuzz_target;
use qcoupler::config::parse_device;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(params) = parse_device(text) {
            let _ = params.validate();
        }
    }
});
