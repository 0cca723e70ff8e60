use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::omp::{lw_omp, omp, OmpSolution, RecoveryConfig};
use super::SupportPrior;
use crate::error::{Error, Result};
use crate::kernel::{neighbour_offsets, CorrelationKernel};
use crate::scalar::Scalar;
use crate::sensing::{BlockSensor, MeasurementSet};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult<T> {
    pub estimate: Tensor<T>,
    /// Intra-block atoms per block id, in selection order.
    pub supports: Vec<Vec<usize>>,
    /// Final residual norm per block id.
    pub residual_norms: Vec<f64>,
    /// Block ids in the order they were solved.
    pub order: Vec<usize>,
    pub iterations: Vec<usize>,
    /// Wall-clock per block id, milliseconds.
    pub block_ms: Vec<f64>,
    pub failed_blocks: Vec<usize>,
}

/// JSON summary of a [`RecoveryResult`].
#[derive(Debug, Clone, Serialize)]
pub struct RecoveryReport<'a> {
    pub reconstruction: &'a str,
    pub block_order: &'a [usize],
    pub iterations: &'a [usize],
    pub residual_norms: &'a [f64],
    pub block_ms: &'a [f64],
    pub failed_blocks: &'a [usize],
}

impl<T: Scalar> RecoveryResult<T> {
    /// `reconstruction` names where the estimate tensor itself is stored.
    pub fn report<'a>(&'a self, reconstruction: &'a str) -> RecoveryReport<'a> {
        RecoveryReport {
            reconstruction,
            block_order: &self.order,
            iterations: &self.iterations,
            residual_norms: &self.residual_norms,
            block_ms: &self.block_ms,
            failed_blocks: &self.failed_blocks,
        }
    }

    pub fn total_ms(&self) -> f64 {
        self.block_ms.iter().sum()
    }
}

struct BlockOutcome<T> {
    solution: Option<OmpSolution<T>>,
    ms: f64,
}

fn check_inputs<T: Scalar>(meas: &MeasurementSet<T>, sensor: &BlockSensor<T>) -> Result<()> {
    if meas.blocks.len() != sensor.num_blocks() {
        return Err(Error::Shape(format!(
            "{} measurement blocks for a {}-block sensor",
            meas.blocks.len(),
            sensor.num_blocks()
        )));
    }
    let rows = sensor.header().block_rows();
    if let Some(b) = meas.blocks.iter().position(|y| y.len() != rows) {
        return Err(Error::Shape(format!(
            "measurement block {b} does not have {rows} entries"
        )));
    }
    Ok(())
}

/// Accepts a solve only if it produced finite values.
fn admit<T: Scalar>(block: usize, solved: Result<OmpSolution<T>>) -> Option<OmpSolution<T>> {
    match solved {
        Ok(s) if s.x.iter().all(|v| v.is_finite()) => Some(s),
        Ok(_) => {
            log::warn!("block {block}: non-finite estimate, block left at zero");
            None
        }
        Err(e) => {
            log::warn!("block {block}: solver failed ({e}), block left at zero");
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schedule {
    /// Blocks solved concurrently on the rayon pool.
    Concurrent,
    /// Blocks solved one after another in id order.
    Sequential,
    /// Blocks solved one after another in the given order.
    Order(Vec<usize>),
}

/// Standard BCS: every block solved independently with OMP, concurrently.
pub fn parallel_bcs<T: Scalar>(
    meas: &MeasurementSet<T>,
    sensor: &BlockSensor<T>,
    config: &RecoveryConfig,
) -> Result<RecoveryResult<T>> {
    parallel_bcs_with(meas, sensor, config, Schedule::Concurrent)
}

pub fn parallel_bcs_with<T: Scalar>(
    meas: &MeasurementSet<T>,
    sensor: &BlockSensor<T>,
    config: &RecoveryConfig,
    schedule: Schedule,
) -> Result<RecoveryResult<T>> {
    check_inputs(meas, sensor)?;
    config.validate(sensor.header().block_rows())?;
    let beta = sensor.num_blocks();
    let solve = |b: usize| {
        let start = Instant::now();
        let solution = admit(b, omp(&meas.blocks[b], sensor.operator(b), config));
        BlockOutcome {
            solution,
            ms: start.elapsed().as_secs_f64() * 1e3,
        }
    };
    let (order, outcomes): (Vec<usize>, Vec<BlockOutcome<T>>) = match schedule {
        Schedule::Concurrent => ((0..beta).collect(), (0..beta).into_par_iter().map(solve).collect()),
        Schedule::Sequential => ((0..beta).collect(), (0..beta).map(solve).collect()),
        Schedule::Order(order) => {
            let mut seen = vec![false; beta];
            for &b in &order {
                if b >= beta || std::mem::replace(&mut seen[b], true) {
                    return Err(Error::Config(format!(
                        "block order {order:?} is not a permutation of 0..{beta}"
                    )));
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::Config(format!("block order {order:?} misses blocks")));
            }
            let mut slots: Vec<Option<BlockOutcome<T>>> = (0..beta).map(|_| None).collect();
            for &b in &order {
                slots[b] = Some(solve(b));
            }
            (
                order,
                slots.into_iter().map(|o| o.expect("every block solved")).collect(),
            )
        }
    };
    Ok(assemble(sensor, order, outcomes))
}

fn assemble<T: Scalar>(
    sensor: &BlockSensor<T>,
    order: Vec<usize>,
    outcomes: Vec<BlockOutcome<T>>,
) -> RecoveryResult<T> {
    let partition = sensor.partition();
    let mut estimate = Tensor::zeros(partition.shape().clone());
    let mut result = RecoveryResult {
        estimate: Tensor::zeros(partition.shape().clone()),
        supports: Vec::with_capacity(outcomes.len()),
        residual_norms: Vec::with_capacity(outcomes.len()),
        order,
        iterations: Vec::with_capacity(outcomes.len()),
        block_ms: Vec::with_capacity(outcomes.len()),
        failed_blocks: Vec::new(),
    };
    for (b, outcome) in outcomes.into_iter().enumerate() {
        result.block_ms.push(outcome.ms);
        match outcome.solution {
            Some(sol) => {
                partition.scatter_into(estimate.data_mut(), &sol.x, b);
                result.residual_norms.push(sol.residual_norm());
                result.iterations.push(sol.iterations());
                result.supports.push(sol.support);
            }
            None => {
                result.failed_blocks.push(b);
                result.residual_norms.push(f64::NAN);
                result.iterations.push(0);
                result.supports.push(Vec::new());
            }
        }
    }
    result.estimate = estimate;
    result
}

/// Data-driven serial BCS, one block per [`SerialBcs::step`].
///
/// Starts from the uniform prior `s / n` and block 0. After each LW-OMP block
/// solve the prior gains the magnitude of the block estimate convolved with the
/// correlation kernel, and the unsolved block with the largest prior mass
/// (lowest id on ties) is solved next.
pub struct SerialBcs<'a, T> {
    meas: &'a MeasurementSet<T>,
    sensor: &'a BlockSensor<T>,
    kernel_taps: Vec<(Vec<isize>, f64)>,
    config: RecoveryConfig,
    prior: SupportPrior,
    next: Option<usize>,
    solved: Vec<bool>,
    outcomes: Vec<Option<BlockOutcome<T>>>,
    order: Vec<usize>,
    scratch: Vec<f64>,
}

impl<'a, T: Scalar> SerialBcs<'a, T> {
    pub fn new(
        meas: &'a MeasurementSet<T>,
        sensor: &'a BlockSensor<T>,
        kernel: &CorrelationKernel,
        avg_sparsity: f64,
        config: &RecoveryConfig,
    ) -> Result<Self> {
        check_inputs(meas, sensor)?;
        config.validate(sensor.header().block_rows())?;
        let shape = sensor.partition().shape();
        if kernel.order() != shape.order() {
            return Err(Error::Shape(format!(
                "order-{} kernel for an order-{} signal",
                kernel.order(),
                shape.order()
            )));
        }
        if !(avg_sparsity >= 0.0 && avg_sparsity.is_finite()) {
            return Err(Error::Domain(format!("average sparsity {avg_sparsity} is invalid")));
        }
        let kernel_taps = neighbour_offsets(kernel.order())
            .into_iter()
            .map(|o| {
                let v = kernel.at(&o).expect("offsets lie in the neighbourhood");
                (o, v)
            })
            .filter(|(_, v)| *v != 0.0)
            .collect();
        let n = shape.size();
        let beta = sensor.num_blocks();
        Ok(SerialBcs {
            meas,
            sensor,
            kernel_taps,
            config: *config,
            prior: SupportPrior::uniform(shape.clone(), avg_sparsity)?,
            next: Some(0),
            solved: vec![false; beta],
            outcomes: (0..beta).map(|_| None).collect(),
            order: Vec::with_capacity(beta),
            scratch: vec![0.0; n],
        })
    }

    pub fn prior(&self) -> &SupportPrior {
        &self.prior
    }

    /// The block the next [`step`](Self::step) will solve.
    pub fn next_block(&self) -> Option<usize> {
        self.next
    }

    /// Prior mass `sum(vec(P_k))` of block `k`.
    pub fn block_mass(&self, k: usize) -> f64 {
        self.sensor
            .partition()
            .block_indices(k)
            .iter()
            .map(|&i| self.prior.values().data()[i])
            .sum()
    }

    /// Solves the next block; returns its id, or `None` once all are done.
    pub fn step(&mut self) -> Option<usize> {
        let b = self.next?;
        let partition = self.sensor.partition();
        let prior_b = self.prior.restrict(partition, b);
        let start = Instant::now();
        let solution = admit(
            b,
            lw_omp(&self.meas.blocks[b], self.sensor.operator(b), &prior_b, &self.config),
        );
        if let Some(sol) = &solution {
            self.update_prior(b, &sol.x);
        }
        self.outcomes[b] = Some(BlockOutcome {
            solution,
            ms: start.elapsed().as_secs_f64() * 1e3,
        });
        self.solved[b] = true;
        self.order.push(b);

        let mut best: Option<(usize, f64)> = None;
        for k in (0..self.solved.len()).filter(|&k| !self.solved[k]) {
            let mass = self.block_mass(k);
            if best.is_none_or(|(_, m)| mass > m) {
                best = Some((k, mass));
            }
        }
        self.next = best.map(|(k, _)| k);
        Some(b)
    }

    /// `P += |X_b,ext (*) Theta|` with a centred 3^d kernel. Only the block's
    /// nonzeros contribute, visited in signal order.
    fn update_prior(&mut self, block: usize, xb: &[T]) {
        let partition = self.sensor.partition();
        let shape = partition.shape();
        let dims = shape.dims();
        let strides = shape.strides();
        let mut entries: Vec<(usize, f64)> = partition
            .block_indices(block)
            .iter()
            .zip(xb)
            .filter(|(_, v)| **v != T::zero())
            .map(|(&i, v)| (i, v.abs()))
            .collect();
        entries.sort_unstable_by_key(|e| e.0);

        let mut touched = Vec::new();
        for (flat, mag) in entries {
            let mut rest = flat;
            let mut multi = vec![0isize; dims.len()];
            for (axis, s) in strides.iter().enumerate() {
                multi[axis] = (rest / s) as isize;
                rest %= s;
            }
            'tap: for (offset, weight) in &self.kernel_taps {
                let mut target = 0usize;
                for axis in 0..dims.len() {
                    let p = multi[axis] + offset[axis];
                    if p < 0 || p >= dims[axis] as isize {
                        continue 'tap;
                    }
                    target += p as usize * strides[axis];
                }
                if self.scratch[target] == 0.0 {
                    touched.push(target);
                }
                self.scratch[target] += mag * weight;
            }
        }
        let prior = self.prior.values_mut();
        for i in touched {
            prior[i] += self.scratch[i].abs();
            self.scratch[i] = 0.0;
        }
    }

    /// Runs any remaining blocks and assembles the estimate.
    pub fn finish(mut self) -> RecoveryResult<T> {
        while self.step().is_some() {}
        let outcomes = self
            .outcomes
            .into_iter()
            .map(|o| o.expect("every block solved"))
            .collect();
        assemble(self.sensor, self.order, outcomes)
    }
}

/// Data-driven serial BCS over all blocks.
pub fn serial_bcs<T: Scalar>(
    meas: &MeasurementSet<T>,
    sensor: &BlockSensor<T>,
    kernel: &CorrelationKernel,
    avg_sparsity: f64,
    config: &RecoveryConfig,
) -> Result<RecoveryResult<T>> {
    Ok(SerialBcs::new(meas, sensor, kernel, avg_sparsity, config)?.finish())
}
