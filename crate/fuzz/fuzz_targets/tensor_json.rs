#![no_main]

use bcs_core::AnyTensor;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(t) = AnyTensor::from_json_str(s) else { return };
    // Anything accepted must survive a round trip unchanged.
    match t {
        AnyTensor::Real(x) => {
            assert_eq!(x.len(), x.shape().size());
            assert_eq!(AnyTensor::from_json_str(&x.to_json()).unwrap(), AnyTensor::Real(x));
        }
        AnyTensor::Complex(x) => {
            assert_eq!(x.len(), x.shape().size());
            assert_eq!(AnyTensor::from_json_str(&x.to_json()).unwrap(), AnyTensor::Complex(x));
        }
    }
});
