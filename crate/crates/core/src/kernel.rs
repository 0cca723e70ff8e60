//! Offline learning of the support correlation kernel.
//!
//! For every nonzero entry of every training signal the kernel counts which of
//! the `3^d - 1` immediate neighbours are also nonzero. Counts are normalized
//! per signal by its support size, then averaged over signals, so entry
//! `theta[o]` estimates how often the neighbour at offset `o` is active given
//! an active entry.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{extract_support, Shape, Tensor};

/// Order-d tensor of extent 3 per axis; index `o + 1` holds offset `o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernel", into = "RawKernel")]
pub struct CorrelationKernel {
    values: Tensor<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    order: usize,
    values: Vec<f64>,
}

impl TryFrom<RawKernel> for CorrelationKernel {
    type Error = Error;

    fn try_from(raw: RawKernel) -> Result<Self> {
        let shape = Shape::new(vec![3; raw.order])?;
        CorrelationKernel::new(Tensor::from_vec(shape, raw.values)?)
    }
}

impl From<CorrelationKernel> for RawKernel {
    fn from(k: CorrelationKernel) -> Self {
        RawKernel {
            order: k.order(),
            values: k.values.into_data(),
        }
    }
}

impl CorrelationKernel {
    /// Validates extent 3 on every axis, nonnegative entries and a zero centre.
    pub fn new(values: Tensor<f64>) -> Result<Self> {
        if values.shape().dims().iter().any(|&d| d != 3) {
            return Err(Error::Shape(format!(
                "kernel must be 3 per axis, got {}",
                values.shape()
            )));
        }
        if values.data().iter().any(|&v| v < 0.0) {
            return Err(Error::Domain("kernel entries must be nonnegative".into()));
        }
        let center = values.len() / 2;
        if values.data()[center] != 0.0 {
            return Err(Error::Domain("kernel centre must be zero".into()));
        }
        Ok(CorrelationKernel { values })
    }

    pub fn zeros(order: usize) -> Result<Self> {
        Ok(CorrelationKernel {
            values: Tensor::zeros(Shape::new(vec![3; order])?),
        })
    }

    pub fn order(&self) -> usize {
        self.values.shape().order()
    }

    pub fn values(&self) -> &Tensor<f64> {
        &self.values
    }

    /// Kernel value at a neighbour offset in `{-1, 0, 1}^d`.
    pub fn at(&self, offset: &[isize]) -> Result<f64> {
        let multi: Vec<usize> = offset
            .iter()
            .map(|&o| {
                if (-1..=1).contains(&o) {
                    Ok((o + 1) as usize)
                } else {
                    Err(Error::Index(format!("offset {o} outside the 3-neighbourhood")))
                }
            })
            .collect::<Result<_>>()?;
        self.values.get(&multi)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("kernel serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    /// Signals that contributed (all-zero signals are skipped).
    pub signals: usize,
    /// Mean support size over the contributing signals.
    pub avg_sparsity: f64,
    pub shape: Shape,
}

/// The `3^d - 1` nonzero neighbour offsets in row-major order.
pub(crate) fn neighbour_offsets(order: usize) -> Vec<Vec<isize>> {
    Shape::new(vec![3; order])
        .expect("order already validated")
        .indices()
        .map(|m| m.iter().map(|&i| i as isize - 1).collect::<Vec<_>>())
        .filter(|o| o.iter().any(|&v| v != 0))
        .collect()
}

/// Per-signal normalized neighbour counts, or `None` for an empty support.
fn signal_kernel<T: Scalar>(x: &Tensor<T>, threshold: f64, offsets: &[Vec<isize>]) -> Option<Vec<f64>> {
    let support = extract_support(x, threshold);
    if support.is_empty() {
        return None;
    }
    let shape = x.shape();
    let dims = shape.dims();
    let strides = shape.strides();
    let active: Vec<bool> = x.data().iter().map(|v| v.abs() > threshold.max(0.0)).collect();
    let kernel_strides = Shape::new(vec![3; dims.len()]).unwrap().strides();

    let mut counts = vec![0.0; 3usize.pow(dims.len() as u32)];
    for omega in support.iter() {
        'offset: for off in offsets {
            let mut flat = 0;
            for axis in 0..dims.len() {
                let p = omega[axis] as isize + off[axis];
                if p < 0 || p >= dims[axis] as isize {
                    continue 'offset;
                }
                flat += p as usize * strides[axis];
            }
            if active[flat] {
                let k: usize = off
                    .iter()
                    .zip(&kernel_strides)
                    .map(|(&o, &s)| (o + 1) as usize * s)
                    .sum();
                counts[k] += 1.0;
            }
        }
    }
    let size = support.len() as f64;
    Some(counts.into_iter().map(|c| c / size).collect())
}

/// Learns the support correlation kernel from a dataset of equally-shaped signals.
pub fn learn_kernel<T: Scalar>(dataset: &[Tensor<T>], threshold: f64) -> Result<(CorrelationKernel, DatasetStats)> {
    let first = dataset
        .first()
        .ok_or_else(|| Error::EmptyDataset("no signals to learn a kernel from".into()))?;
    let shape = first.shape().clone();
    if let Some(bad) = dataset.iter().find(|x| x.shape() != &shape) {
        return Err(Error::Shape(format!(
            "dataset mixes shapes {shape} and {}",
            bad.shape()
        )));
    }
    let offsets = neighbour_offsets(shape.order());

    // Collected in dataset order so the sum below is order-independent of scheduling.
    let per_signal: Vec<Option<(Vec<f64>, usize)>> = dataset
        .par_iter()
        .map(|x| signal_kernel(x, threshold, &offsets).map(|k| (k, x.count_nonzero(threshold.max(0.0)))))
        .collect();

    let mut sum = vec![0.0; 3usize.pow(shape.order() as u32)];
    let mut used = 0usize;
    let mut support_total = 0usize;
    for (j, entry) in per_signal.into_iter().enumerate() {
        match entry {
            Some((k, s)) => {
                for (acc, v) in sum.iter_mut().zip(k) {
                    *acc += v;
                }
                used += 1;
                support_total += s;
            }
            None => log::warn!("signal {j} has empty support and is excluded from the kernel"),
        }
    }
    if used == 0 {
        return Err(Error::EmptyDataset("every signal has empty support".into()));
    }
    let values: Vec<f64> = sum.into_iter().map(|v| v / used as f64).collect();
    let kernel = CorrelationKernel::new(Tensor::from_vec(Shape::new(vec![3; shape.order()])?, values)?)?;
    Ok((
        kernel,
        DatasetStats {
            signals: used,
            avg_sparsity: support_total as f64 / used as f64,
            shape,
        },
    ))
}

/// Mean support cardinality over all signals, empty ones included.
pub fn average_sparsity<T: Scalar>(dataset: &[Tensor<T>], threshold: f64) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset("average sparsity of an empty dataset".into()));
    }
    let total: usize = dataset.iter().map(|x| x.count_nonzero(threshold.max(0.0))).sum();
    Ok(total as f64 / dataset.len() as f64)
}
