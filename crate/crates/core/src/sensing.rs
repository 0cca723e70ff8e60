//! Block-diagonal sensing operators and the per-block measurement model
//! `y_b = A_b z_b + v_b`.
//!
//! Only the `beta` diagonal blocks are stored, `m n / beta` scalars in total.
//! Matrices are never persisted: a [`SensorHeader`] plus the partition
//! regenerates them bit-for-bit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{LinearOperator, Matrix};
use crate::partition::PartitionMap;
use crate::scalar::{self, Field, Scalar};
use crate::seed;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    /// i.i.d. real N(0, 1) entries.
    Gaussian,
    /// i.i.d. circularly-symmetric CN(0, 1) entries.
    ComplexGaussian,
}

impl Ensemble {
    pub fn field(self) -> Field {
        match self {
            Ensemble::Gaussian => Field::Real,
            Ensemble::ComplexGaussian => Field::Complex,
        }
    }
}

/// Everything needed to regenerate a [`BlockSensor`] besides its partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawHeader", into = "RawHeader")]
pub struct SensorHeader {
    pub m: usize,
    pub n: usize,
    pub beta: usize,
    pub ensemble: Ensemble,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHeader {
    m: usize,
    n: usize,
    beta: usize,
    ensemble: Ensemble,
    seed: u64,
}

impl TryFrom<RawHeader> for SensorHeader {
    type Error = Error;

    fn try_from(r: RawHeader) -> Result<Self> {
        let header = SensorHeader {
            m: r.m,
            n: r.n,
            beta: r.beta,
            ensemble: r.ensemble,
            seed: r.seed,
        };
        header.validate()?;
        Ok(header)
    }
}

impl From<SensorHeader> for RawHeader {
    fn from(h: SensorHeader) -> Self {
        RawHeader {
            m: h.m,
            n: h.n,
            beta: h.beta,
            ensemble: h.ensemble,
            seed: h.seed,
        }
    }
}

impl SensorHeader {
    pub fn validate(&self) -> Result<()> {
        let SensorHeader { m, n, beta, .. } = *self;
        if m == 0 || n == 0 || beta == 0 {
            return Err(Error::Config(format!(
                "m = {m}, n = {n}, beta = {beta} must be positive"
            )));
        }
        if m > n {
            return Err(Error::Config(format!("m = {m} exceeds n = {n}")));
        }
        if m % beta != 0 || n % beta != 0 {
            return Err(Error::Config(format!("beta = {beta} must divide m = {m} and n = {n}")));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("header serializes")
    }

    pub fn block_rows(&self) -> usize {
        self.m / self.beta
    }

    pub fn block_cols(&self) -> usize {
        self.n / self.beta
    }
}

#[derive(Debug, Clone)]
pub struct BlockSensor<T> {
    header: SensorHeader,
    partition: PartitionMap,
    blocks: Vec<Matrix<T>>,
}

/// Draws a block sensor with i.i.d. entries and unit-norm columns.
pub fn draw_sensor<T: Scalar>(
    m: usize,
    n: usize,
    beta: usize,
    partition: PartitionMap,
    seed: u64,
    ensemble: Ensemble,
) -> Result<BlockSensor<T>> {
    BlockSensor::from_header(
        SensorHeader {
            m,
            n,
            beta,
            ensemble,
            seed,
        },
        partition,
    )
}

impl<T: Scalar> BlockSensor<T> {
    pub fn from_header(header: SensorHeader, partition: PartitionMap) -> Result<Self> {
        header.validate()?;
        if header.ensemble.field() != T::FIELD {
            return Err(Error::Config(format!(
                "ensemble {:?} does not produce {:?} scalars",
                header.ensemble,
                T::FIELD
            )));
        }
        if partition.shape().size() != header.n || partition.num_blocks() != header.beta {
            return Err(Error::Config(format!(
                "partition with {} entries in {} blocks does not fit n = {}, beta = {}",
                partition.shape().size(),
                partition.num_blocks(),
                header.n,
                header.beta
            )));
        }
        let (rows, cols) = (header.block_rows(), header.block_cols());
        let blocks = (0..header.beta)
            .into_par_iter()
            .map(|b| {
                let mut rng = seed::rng(seed::derive(header.seed, &[b as u64]));
                let mut a = Matrix::zeros(rows, cols);
                for j in 0..cols {
                    for v in a.col_mut(j) {
                        *v = T::standard_normal(&mut rng);
                    }
                }
                a.normalize_columns()?;
                Ok(a)
            })
            .collect::<Result<Vec<_>>>()?;
        let sensor = BlockSensor {
            header,
            partition,
            blocks,
        };
        assert_eq!(
            sensor.stored_scalars(),
            header.m * header.n / header.beta,
            "block storage must be m n / beta"
        );
        Ok(sensor)
    }

    /// Replaces the drawn blocks with caller-supplied ones (e.g. identity blocks).
    pub fn with_blocks(header: SensorHeader, partition: PartitionMap, blocks: Vec<Matrix<T>>) -> Result<Self> {
        header.validate()?;
        if blocks.len() != header.beta
            || blocks
                .iter()
                .any(|a| a.nrows() != header.block_rows() || a.ncols() != header.block_cols())
        {
            return Err(Error::Shape(format!(
                "expected {} blocks of {}x{}",
                header.beta,
                header.block_rows(),
                header.block_cols()
            )));
        }
        if partition.shape().size() != header.n || partition.num_blocks() != header.beta {
            return Err(Error::Config("partition does not fit the header".into()));
        }
        Ok(BlockSensor {
            header,
            partition,
            blocks,
        })
    }

    pub fn header(&self) -> &SensorHeader {
        &self.header
    }

    pub fn partition(&self) -> &PartitionMap {
        &self.partition
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, b: usize) -> &Matrix<T> {
        &self.blocks[b]
    }

    pub fn blocks(&self) -> &[Matrix<T>] {
        &self.blocks
    }

    /// Scalars actually held in memory.
    pub fn stored_scalars(&self) -> usize {
        self.blocks.iter().map(Matrix::stored_len).sum()
    }

    fn check_block(&self, b: usize) -> Result<&Matrix<T>> {
        self.blocks
            .get(b)
            .ok_or_else(|| Error::Index(format!("block {b} of {}", self.blocks.len())))
    }

    /// `A_b z`
    pub fn apply_block(&self, b: usize, z: &[T]) -> Result<Vec<T>> {
        let a = self.check_block(b)?;
        if z.len() != a.ncols() {
            return Err(Error::Shape(format!(
                "block input of length {} (expected {})",
                z.len(),
                a.ncols()
            )));
        }
        Ok(a.matvec(z))
    }

    /// `A_b^H r`
    pub fn adjoint_block(&self, b: usize, r: &[T]) -> Result<Vec<T>> {
        let a = self.check_block(b)?;
        if r.len() != a.nrows() {
            return Err(Error::Shape(format!(
                "block residual of length {} (expected {})",
                r.len(),
                a.nrows()
            )));
        }
        Ok(a.adjoint_matvec(r))
    }

    /// Noiseless per-block measurements `A_b z_b`.
    pub fn apply_all(&self, x: &Tensor<T>) -> Result<Vec<Vec<T>>> {
        if x.shape() != self.partition.shape() {
            return Err(Error::Shape(format!(
                "signal shape {} does not match sensor shape {}",
                x.shape(),
                self.partition.shape()
            )));
        }
        Ok((0..self.num_blocks())
            .map(|b| self.blocks[b].matvec(&self.partition.gather_slice(x.data(), b)))
            .collect())
    }

    /// The full `m x n` matrix `blockdiag(A_1..A_beta) Pi`. Only sensible for small sizes.
    pub fn to_dense(&self) -> Matrix<T> {
        let (rows, cols) = (self.header.block_rows(), self.header.block_cols());
        let mut dense = Matrix::zeros(self.header.m, self.header.n);
        for (b, a) in self.blocks.iter().enumerate() {
            for w in 0..cols {
                let j = self.partition.signal_index(b, w);
                for i in 0..rows {
                    dense.set(b * rows + i, j, a.get(i, w));
                }
            }
        }
        dense
    }

    /// Block `b` as a solver operator.
    pub fn operator(&self, b: usize) -> &dyn LinearOperator<T> {
        &self.blocks[b]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet<T> {
    /// `y_b`, in block-id order.
    pub blocks: Vec<Vec<T>>,
    /// Realized `v_b`.
    pub noise: Vec<Vec<T>>,
}

impl<T: Scalar> MeasurementSet<T> {
    /// `y = (y_1; ...; y_beta)`
    pub fn stacked(&self) -> Vec<T> {
        self.blocks.concat()
    }

    pub fn noise_energy(&self) -> f64 {
        self.noise.iter().map(|v| scalar::norm_sqr(v)).sum()
    }
}

/// `y_b = A_b gather(x, b) + v_b` with per-entry noise variance `sigma^2`.
pub fn measure<T: Scalar>(
    sensor: &BlockSensor<T>,
    x: &Tensor<T>,
    sigma: f64,
    noise_seed: u64,
) -> Result<MeasurementSet<T>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!(
            "noise std {sigma} must be finite and nonnegative"
        )));
    }
    let clean = sensor.apply_all(x)?;
    let mut rng = seed::rng(noise_seed);
    let mut blocks = Vec::with_capacity(clean.len());
    let mut noise = Vec::with_capacity(clean.len());
    for yb in clean {
        let vb: Vec<T> = (0..yb.len())
            .map(|_| T::standard_normal(&mut rng).scale(sigma))
            .collect();
        blocks.push(yb.iter().zip(&vb).map(|(&a, &v)| a + v).collect());
        noise.push(vb);
    }
    Ok(MeasurementSet { blocks, noise })
}

/// `||A Pi x||^2 / (m sigma^2)` for the clean measurements of `x`.
pub fn snr<T: Scalar>(sensor: &BlockSensor<T>, x: &Tensor<T>, sigma: f64) -> Result<f64> {
    let energy: f64 = sensor.apply_all(x)?.iter().map(|v| scalar::norm_sqr(v)).sum();
    Ok(energy / (sensor.header.m as f64 * sigma * sigma))
}
