use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{learn_kernel, CorrelationKernel, DatasetStats};
use crate::scalar::{Field, Scalar};
use crate::seed;
use crate::signals::{generate_clustered, ClusterSpec};
use crate::tensor::{AnyTensor, Tensor};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub spec: ClusterSpec,
    pub count: usize,
}

impl DatasetManifest {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let m: DatasetManifest = serde_json::from_str(s)?;
        m.spec.validate()?;
        Ok(m)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Seed of training signal `j` for a spec whose seed is the dataset seed.
pub fn signal_seed(spec: &ClusterSpec, j: usize) -> u64 {
    seed::derive(spec.seed, &[j as u64])
}

pub fn training_set<T: Scalar>(spec: &ClusterSpec, count: usize) -> Result<Vec<Tensor<T>>> {
    (0..count)
        .map(|j| generate_clustered(&spec.with_seed(signal_seed(spec, j))))
        .collect()
}

pub fn signal_file_name(j: usize) -> String {
    format!("signal_{j}.json")
}

/// Writes `signal_<j>.json` for every training signal plus `manifest.json`.
pub fn write_dataset(spec: &ClusterSpec, count: usize, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(count + 1);
    for j in 0..count {
        let seeded = spec.with_seed(signal_seed(spec, j));
        let text = match spec.field {
            Field::Real => generate_clustered::<f64>(&seeded)?.to_json(),
            Field::Complex => generate_clustered::<Complex64>(&seeded)?.to_json(),
        };
        let path = dir.join(signal_file_name(j));
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    let manifest = DatasetManifest {
        spec: spec.clone(),
        count,
    };
    let path = dir.join(MANIFEST);
    fs::write(&path, manifest.to_json_pretty()).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}

/// Signals of a dataset directory, ordered by their index `j`.
pub enum Dataset {
    Real(Vec<Tensor<f64>>),
    Complex(Vec<Tensor<Complex64>>),
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Real(v) => v.len(),
            Dataset::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn learn_kernel(&self, threshold: f64) -> Result<(CorrelationKernel, DatasetStats)> {
        match self {
            Dataset::Real(v) => learn_kernel(v, threshold),
            Dataset::Complex(v) => learn_kernel(v, threshold),
        }
    }
}

/// Reads every `signal_<j>.json` in `dir`; other files are ignored.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut indexed = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(j) = name
            .to_str()
            .and_then(|s| s.strip_prefix("signal_"))
            .and_then(|s| s.strip_suffix(".json"))
            .and_then(|s| s.parse::<usize>().ok())
        else {
            continue;
        };
        indexed.push((j, entry.path()));
    }
    if indexed.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no signal_<j>.json files in {}",
            dir.display()
        )));
    }
    indexed.sort();

    let mut real = Vec::new();
    let mut complex = Vec::new();
    for (_, path) in &indexed {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match AnyTensor::from_json_str(&text)? {
            AnyTensor::Real(t) => real.push(t),
            AnyTensor::Complex(t) => complex.push(t),
        }
    }
    match (real.is_empty(), complex.is_empty()) {
        (false, true) => Ok(Dataset::Real(real)),
        (true, false) => Ok(Dataset::Complex(complex)),
        _ => Err(Error::Config(format!(
            "{} mixes real and complex signals",
            dir.display()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::Amplitude;
    use crate::tensor::Shape;

    fn spec() -> ClusterSpec {
        ClusterSpec {
            dims: Shape::new(vec![8]).unwrap(),
            field: Field::Real,
            num_clusters: 1,
            cluster_radius: 1,
            sparsity: 2,
            amplitude: Amplitude::ComplexGaussian,
            seed: 9,
        }
    }

    #[test]
    fn two_signals_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let files = write_dataset(&spec(), 2, dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        let first: Vec<Vec<u8>> = files.iter().map(|p| fs::read(p).unwrap()).collect();
        write_dataset(&spec(), 2, dir.path()).unwrap();
        let again: Vec<Vec<u8>> = files.iter().map(|p| fs::read(p).unwrap()).collect();
        assert_eq!(first, again);

        let manifest = DatasetManifest::from_json_str(&fs::read_to_string(dir.path().join(MANIFEST)).unwrap()).unwrap();
        assert_eq!(manifest.spec, spec());
        assert_eq!(manifest.count, 2);

        let Dataset::Real(loaded) = load_dataset(dir.path()).unwrap() else {
            panic!("expected a real dataset")
        };
        assert_eq!(loaded, training_set::<f64>(&spec(), 2).unwrap());
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn numeric_ordering() {
        let dir = tempfile::tempdir().unwrap();
        let shape = Shape::new(vec![3]).unwrap();
        for j in [10usize, 2] {
            let t = Tensor::from_vec(shape.clone(), vec![j as f64, 0.0, 0.0]).unwrap();
            fs::write(dir.path().join(signal_file_name(j)), t.to_json()).unwrap();
        }
        let Dataset::Real(v) = load_dataset(dir.path()).unwrap() else {
            panic!()
        };
        assert_eq!(v[0].data()[0], 2.0);
        assert_eq!(v[1].data()[0], 10.0);
    }
}
