#![no_main]

use bcs_core::CorrelationKernel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(k) = CorrelationKernel::from_json_str(s) {
        let v = k.values().data();
        assert_eq!(v.len(), 3usize.pow(k.order() as u32));
        assert!(v.iter().all(|&x| x >= 0.0));
        assert_eq!(v[v.len() / 2], 0.0);
        assert_eq!(CorrelationKernel::from_json_str(&k.to_json()).unwrap(), k);
    }
});
