#![no_main]

use bcs_core::analysis::bound_curve;
use bcs_core::experiment::BoundsConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = BoundsConfig::from_json_str(s) {
        let betas: Vec<usize> = cfg.betas().into_iter().take(64).collect();
        let _ = bound_curve(&cfg.params(), &betas);
    }
});
