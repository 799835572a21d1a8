#![no_main]

use hawkes_lob::event_data::parse_csv_str;
use hawkes_lob::IngestConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(stream) = parse_csv_str(text, &IngestConfig::default()) else {
        return;
    };
    let again = parse_csv_str(&stream.to_csv_string(&[]), &IngestConfig::default()).unwrap();
    assert_eq!(again, stream);
});
