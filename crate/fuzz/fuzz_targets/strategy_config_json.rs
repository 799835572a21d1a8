#![no_main]

use hawkes_lob::strategy::StrategyConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = StrategyConfig::from_json_str(text);
    }
});
