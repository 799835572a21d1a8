#![no_main]

use hawkes_lob::event_data::parse_csv_str;
use hawkes_lob::IngestConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_csv_str(text, &IngestConfig::default());
        let _ = parse_csv_str(text, &IngestConfig::lenient());
    }
});
