//! Equal-size block partitions of a tensor index space.
//!
//! A [`PartitionMap`] is the permutation that takes the flat signal `x` to the
//! stacked block vector `z`: block `b` occupies `z[b * n/beta .. (b + 1) * n/beta]`.
//! It is kept as a pair of index tables and never materialized as a matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Each block is a contiguous sub-box (block coordinate = quotient per axis).
    Contiguous,
    /// Each block is a regular sub-lattice (block coordinate = residue per axis).
    Comb,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPartitionSpec", into = "RawPartitionSpec")]
pub struct PartitionSpec {
    shape: Shape,
    factors: Vec<usize>,
    strategy: Strategy,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPartitionSpec {
    dims: Vec<usize>,
    factors: Vec<usize>,
    strategy: Strategy,
}

impl TryFrom<RawPartitionSpec> for PartitionSpec {
    type Error = Error;

    fn try_from(raw: RawPartitionSpec) -> Result<Self> {
        PartitionSpec::new(Shape::new(raw.dims)?, raw.factors, raw.strategy)
    }
}

impl From<PartitionSpec> for RawPartitionSpec {
    fn from(spec: PartitionSpec) -> Self {
        RawPartitionSpec {
            dims: spec.shape.into(),
            factors: spec.factors,
            strategy: spec.strategy,
        }
    }
}

impl PartitionSpec {
    pub fn new(shape: Shape, factors: Vec<usize>, strategy: Strategy) -> Result<Self> {
        if factors.len() != shape.order() {
            return Err(Error::Config(format!(
                "{} partition factors for an order-{} shape",
                factors.len(),
                shape.order()
            )));
        }
        for (axis, (&f, &n)) in factors.iter().zip(shape.dims()).enumerate() {
            if f == 0 || n % f != 0 {
                return Err(Error::Config(format!(
                    "factor {f} does not divide extent {n} on axis {axis}"
                )));
            }
        }
        Ok(PartitionSpec {
            shape,
            factors,
            strategy,
        })
    }

    /// Splits `beta` across axes: each prime factor (largest first) goes to the
    /// axis with the largest remaining block extent it divides, lowest axis on ties.
    pub fn auto(shape: Shape, beta: usize, strategy: Strategy) -> Result<Self> {
        if beta == 0 {
            return Err(Error::Config("beta must be positive".into()));
        }
        let mut primes = Vec::new();
        let mut rest = beta;
        let mut p = 2;
        while p * p <= rest {
            while rest.is_multiple_of(p) {
                primes.push(p);
                rest /= p;
            }
            p += 1;
        }
        if rest > 1 {
            primes.push(rest);
        }
        primes.sort_unstable_by(|a, b| b.cmp(a));

        let mut factors = vec![1; shape.order()];
        let mut extents = shape.dims().to_vec();
        for p in primes {
            let axis = (0..extents.len())
                .filter(|&a| extents[a].is_multiple_of(p))
                .max_by(|&a, &b| extents[a].cmp(&extents[b]).then(b.cmp(&a)))
                .ok_or_else(|| Error::Config(format!("beta = {beta} cannot split shape {shape} evenly")))?;
            factors[axis] *= p;
            extents[axis] /= p;
        }
        PartitionSpec::new(shape, factors, strategy)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("partition spec serializes")
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    /// Total number of blocks.
    pub fn num_blocks(&self) -> usize {
        self.factors.iter().product()
    }

    pub fn block_shape(&self) -> Shape {
        let dims: Vec<usize> = self
            .shape
            .dims()
            .iter()
            .zip(&self.factors)
            .map(|(n, f)| n / f)
            .collect();
        Shape::new(dims).expect("divisible extents stay valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionMap {
    spec: PartitionSpec,
    block_shape: Shape,
    /// signal flat index -> position in the stacked block vector
    forward: Vec<usize>,
    /// stacked position -> signal flat index
    inverse: Vec<usize>,
}

impl PartitionMap {
    pub fn new(spec: PartitionSpec) -> Self {
        let block_shape = spec.block_shape();
        let block_len = block_shape.size();
        let order = spec.shape.order();
        let mut forward = vec![0; spec.shape.size()];
        let mut inverse = vec![0; spec.shape.size()];
        for (flat, multi) in spec.shape.indices().enumerate() {
            let mut block = 0;
            let mut intra = 0;
            for axis in 0..order {
                let i = multi[axis];
                let f = spec.factors[axis];
                let inner = block_shape.dims()[axis];
                let (b, w) = match spec.strategy {
                    Strategy::Comb => (i % f, i / f),
                    Strategy::Contiguous => (i / inner, i % inner),
                };
                block = block * f + b;
                intra = intra * inner + w;
            }
            let pos = block * block_len + intra;
            forward[flat] = pos;
            inverse[pos] = flat;
        }
        PartitionMap {
            spec,
            block_shape,
            forward,
            inverse,
        }
    }

    pub fn spec(&self) -> &PartitionSpec {
        &self.spec
    }

    pub fn shape(&self) -> &Shape {
        &self.spec.shape
    }

    pub fn block_shape(&self) -> &Shape {
        &self.block_shape
    }

    pub fn num_blocks(&self) -> usize {
        self.spec.num_blocks()
    }

    /// Entries per block, `n / beta`.
    pub fn block_len(&self) -> usize {
        self.block_shape.size()
    }

    /// `(block id, intra-block flat index)` of a signal flat index.
    pub fn locate(&self, flat: usize) -> (usize, usize) {
        let pos = self.forward[flat];
        (pos / self.block_len(), pos % self.block_len())
    }

    /// Signal flat index of an intra-block position.
    pub fn signal_index(&self, block: usize, intra: usize) -> usize {
        self.inverse[block * self.block_len() + intra]
    }

    /// Signal flat indices belonging to `block`, in intra-block order.
    pub fn block_indices(&self, block: usize) -> &[usize] {
        let len = self.block_len();
        &self.inverse[block * len..(block + 1) * len]
    }

    fn check_block(&self, block: usize) -> Result<()> {
        if block >= self.num_blocks() {
            return Err(Error::Index(format!(
                "block {block} out of range for {} blocks",
                self.num_blocks()
            )));
        }
        Ok(())
    }

    fn check_signal(&self, shape: &Shape) -> Result<()> {
        if shape != self.shape() {
            return Err(Error::Shape(format!(
                "signal shape {shape} does not match partition shape {}",
                self.shape()
            )));
        }
        Ok(())
    }

    /// Block entries of a flat signal vector.
    pub fn gather_slice<T: Scalar>(&self, x: &[T], block: usize) -> Vec<T> {
        self.block_indices(block).iter().map(|&i| x[i]).collect()
    }

    pub fn gather_block<T: Scalar>(&self, x: &Tensor<T>, block: usize) -> Result<Tensor<T>> {
        self.check_block(block)?;
        self.check_signal(x.shape())?;
        Tensor::from_vec(self.block_shape.clone(), self.gather_slice(x.data(), block))
    }

    /// Full-shape tensor holding `xb` at the block's indices and zeros elsewhere.
    pub fn scatter_block<T: Scalar>(&self, xb: &Tensor<T>, block: usize) -> Result<Tensor<T>> {
        self.check_block(block)?;
        if xb.shape() != &self.block_shape {
            return Err(Error::Shape(format!(
                "block tensor has shape {}, expected {}",
                xb.shape(),
                self.block_shape
            )));
        }
        let mut out = Tensor::zeros(self.shape().clone());
        self.scatter_into(out.data_mut(), xb.data(), block);
        Ok(out)
    }

    /// Writes block values into a flat full-signal buffer.
    pub fn scatter_into<T: Scalar>(&self, out: &mut [T], xb: &[T], block: usize) {
        for (&i, &v) in self.block_indices(block).iter().zip(xb) {
            out[i] = v;
        }
    }

    /// `z = Pi x`: all blocks stacked in block-id order.
    pub fn permute<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        self.inverse.iter().map(|&i| x[i]).collect()
    }
}
