//! Replays the checked-in fuzz corpus through every decoder.

use std::fs;
use std::path::PathBuf;

use bcs_core::analysis::bound_curve;
use bcs_core::experiment::{BoundsConfig, DatasetManifest, ExperimentConfig};
use bcs_core::{AnyTensor, CorrelationKernel, PartitionMap, PartitionSpec, SensorHeader};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read_to_string(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

/// Files named `bad_*` must be rejected; all others must parse.
fn expect(name: &str, ok: bool) {
    assert_eq!(ok, !name.starts_with("bad_"), "{name}");
}

#[test]
fn tensor_json() {
    for (name, text) in seeds("tensor_json") {
        let parsed = AnyTensor::from_json_str(&text);
        expect(&name, parsed.is_ok());
        if let Ok(AnyTensor::Real(x)) = parsed {
            assert_eq!(AnyTensor::from_json_str(&x.to_json()).unwrap(), AnyTensor::Real(x));
        } else if let Ok(AnyTensor::Complex(x)) = parsed {
            assert_eq!(AnyTensor::from_json_str(&x.to_json()).unwrap(), AnyTensor::Complex(x));
        }
    }
}

#[test]
fn kernel_json() {
    for (name, text) in seeds("kernel_json") {
        let parsed = CorrelationKernel::from_json_str(&text);
        expect(&name, parsed.is_ok());
        if let Ok(k) = parsed {
            assert_eq!(CorrelationKernel::from_json_str(&k.to_json()).unwrap(), k);
        }
    }
}

#[test]
fn sensor_header() {
    for (name, text) in seeds("sensor_header") {
        let parsed = SensorHeader::from_json_str(&text);
        expect(&name, parsed.is_ok());
        if let Ok(h) = parsed {
            assert_eq!(h.block_rows() * h.beta, h.m);
            assert_eq!(SensorHeader::from_json_str(&h.to_json()).unwrap(), h);
        }
    }
}

#[test]
fn partition_spec() {
    for (name, text) in seeds("partition_spec") {
        let parsed = PartitionSpec::from_json_str(&text);
        expect(&name, parsed.is_ok());
        if let Ok(spec) = parsed {
            assert_eq!(PartitionSpec::from_json_str(&spec.to_json()).unwrap(), spec);
            let n = spec.shape().size();
            let map = PartitionMap::new(spec);
            let mut seen = vec![false; n];
            for b in 0..map.num_blocks() {
                for &i in map.block_indices(b) {
                    assert!(!std::mem::replace(&mut seen[i], true));
                }
            }
            assert!(seen.into_iter().all(|v| v));
        }
    }
}

#[test]
fn experiment_config() {
    for (name, text) in seeds("experiment_config") {
        let parsed = ExperimentConfig::from_json_str(&text);
        expect(&name, parsed.is_ok());
        if let Ok(cfg) = parsed {
            assert_eq!(ExperimentConfig::from_json_str(&cfg.to_json_pretty()).unwrap(), cfg);
        }
    }
    let desk = seeds("experiment_config")
        .into_iter()
        .find(|(n, _)| n == "desk.json")
        .unwrap()
        .1;
    assert_eq!(
        ExperimentConfig::from_json_str(&desk).unwrap(),
        ExperimentConfig::desk()
    );
}

#[test]
fn bounds_config() {
    for (name, text) in seeds("bounds_config") {
        let parsed = BoundsConfig::from_json_str(&text);
        expect(&name, parsed.is_ok());
        if let Ok(cfg) = parsed {
            bound_curve(&cfg.params(), &cfg.betas()).unwrap();
        }
    }
}

#[test]
fn dataset_manifest() {
    for (name, text) in seeds("dataset_manifest") {
        let parsed = DatasetManifest::from_json_str(&text);
        expect(&name, parsed.is_ok());
        if let Ok(m) = parsed {
            assert_eq!(DatasetManifest::from_json_str(&m.to_json_pretty()).unwrap(), m);
        }
    }
}
