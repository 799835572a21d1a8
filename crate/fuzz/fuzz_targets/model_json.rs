#![no_main]

use hawkes_lob::HawkesModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = HawkesModel::from_json_str(text) {
        let back = HawkesModel::from_json_str(&m.to_json_string()).unwrap();
        assert_eq!(back.to_params(), m.to_params());
    }
});
