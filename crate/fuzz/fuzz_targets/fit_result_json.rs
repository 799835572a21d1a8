#![no_main]

use hawkes_lob::estimate::FitResult;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = FitResult::from_json_str(text);
    }
});
