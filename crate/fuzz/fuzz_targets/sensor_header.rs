#![no_main]

use bcs_core::SensorHeader;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(h) = SensorHeader::from_json_str(s) {
        assert_eq!(h.block_rows() * h.beta, h.m);
        assert_eq!(h.block_cols() * h.beta, h.n);
        assert!(h.m <= h.n);
        assert_eq!(SensorHeader::from_json_str(&h.to_json()).unwrap(), h);
    }
});
