//! Sparse solvers: OMP, LW-OMP, standard (parallel) BCS and data-driven serial BCS.

mod bcs;
mod omp;

pub use bcs::{parallel_bcs, parallel_bcs_with, serial_bcs, RecoveryReport, RecoveryResult, Schedule, SerialBcs};
pub use omp::{clipped_logit, lw_omp, omp, OmpSolution, RecoveryConfig};

use crate::error::{Error, Result};
use crate::partition::PartitionMap;
use crate::tensor::{Shape, Tensor};

/// Nonnegative per-entry support scores, proportional to the probability that
/// an entry is active. Scores may exceed one; they are clipped only inside the logit.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPrior(Tensor<f64>);

impl SupportPrior {
    pub fn new(values: Tensor<f64>) -> Result<Self> {
        if let Some(v) = values.data().iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Domain(format!("prior entry {v} is negative")));
        }
        Ok(SupportPrior(values))
    }

    /// `s / n` everywhere.
    pub fn uniform(shape: Shape, avg_sparsity: f64) -> Result<Self> {
        let n = shape.size() as f64;
        SupportPrior::new(Tensor::filled(shape, avg_sparsity / n))
    }

    pub fn values(&self) -> &Tensor<f64> {
        &self.0
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        self.0.data_mut()
    }

    /// Scores of block `b`, in intra-block order.
    pub fn restrict(&self, partition: &PartitionMap, b: usize) -> Vec<f64> {
        partition.gather_slice(self.0.data(), b)
    }
}
