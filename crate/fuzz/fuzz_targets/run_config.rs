#![no_main]

use libfuzzer_sys::fuzz_target;
use qcoupler::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = RunConfig::from_json_str(text) {
            let _ = cfg.validate();
            let _ = cfg.digest();
        }
    }
});
