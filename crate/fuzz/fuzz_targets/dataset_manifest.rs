#![no_main]

use bcs_core::experiment::DatasetManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(m) = DatasetManifest::from_json_str(s) {
        assert_eq!(DatasetManifest::from_json_str(&m.to_json_pretty()).unwrap(), m);
    }
});
