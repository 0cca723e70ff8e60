#![no_main]

use bcs_core::{PartitionMap, PartitionSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(spec) = PartitionSpec::from_json_str(s) else {
        return;
    };
    assert_eq!(PartitionSpec::from_json_str(&spec.to_json()).unwrap(), spec);
    let n = spec.shape().size();
    assert_eq!(spec.block_shape().size() * spec.num_blocks(), n);
    if n > 1 << 14 {
        return;
    }
    let map = PartitionMap::new(spec);
    let mut seen = vec![false; n];
    for b in 0..map.num_blocks() {
        for (w, &i) in map.block_indices(b).iter().enumerate() {
            assert!(!seen[i]);
            seen[i] = true;
            assert_eq!(map.locate(i), (b, w));
        }
    }
    assert!(seen.into_iter().all(|v| v));
});
