#![no_main]

use bcs_core::experiment::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_json_str(s) {
        assert_eq!(ExperimentConfig::from_json_str(&cfg.to_json_pretty()).unwrap(), cfg);
        for &r in cfg.subsampling_grid.iter().chain([&cfg.subsampling]) {
            if let Ok(m) = cfg.measurement_count(r) {
                assert!(m <= cfg.shape().size());
                assert!(cfg.betas.iter().all(|b| m % b == 0));
            }
        }
    }
});
