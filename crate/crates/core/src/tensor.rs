//! Dense d-order tensors over a [`Scalar`] field.
//!
//! Data is stored row-major (last index fastest). The JSON form is
//! `{"dims": [...], "data": [...]}` with complex entries written as `[re, im]`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Field, Scalar};

/// Hard cap on tensor order.
pub const MAX_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::Shape("tensor order must be at least 1".into()));
        }
        if dims.len() > MAX_ORDER {
            return Err(Error::Shape(format!(
                "tensor order {} exceeds the cap of {MAX_ORDER}",
                dims.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::Shape(format!("zero extent in {dims:?}")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Shape(format!("size of {dims:?} overflows")))?;
        Ok(Shape(dims))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    /// Total number of entries `n = n_1 * ... * n_d`.
    pub fn size(&self) -> usize {
        self.0.iter().product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.order()];
        for i in (0..self.order().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.0[i + 1];
        }
        strides
    }

    /// Iterates every multi-index in row-major order.
    pub fn indices(&self) -> MultiIndexIter<'_> {
        MultiIndexIter {
            dims: &self.0,
            current: vec![0; self.order()],
            done: false,
        }
    }
}

impl TryFrom<Vec<usize>> for Shape {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Shape::new(dims)
    }
}

impl From<Shape> for Vec<usize> {
    fn from(shape: Shape) -> Self {
        shape.0
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", dims.join("x"))
    }
}

pub struct MultiIndexIter<'a> {
    dims: &'a [usize],
    current: Vec<usize>,
    done: bool,
}

impl Iterator for MultiIndexIter<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let mut axis = self.dims.len();
        loop {
            if axis == 0 {
                self.done = true;
                break;
            }
            axis -= 1;
            self.current[axis] += 1;
            if self.current[axis] < self.dims[axis] {
                break;
            }
            self.current[axis] = 0;
        }
        Some(out)
    }
}

/// Row-major flat offset of `multi` within `shape`.
pub fn flat_index(shape: &Shape, multi: &[usize]) -> Result<usize> {
    if multi.len() != shape.order() {
        return Err(Error::Index(format!(
            "multi-index of order {} for shape {shape}",
            multi.len()
        )));
    }
    let mut flat = 0;
    for (axis, (&i, &n)) in multi.iter().zip(shape.dims()).enumerate() {
        if i >= n {
            return Err(Error::Index(format!(
                "component {i} out of bounds for axis {axis} of extent {n}"
            )));
        }
        flat = flat * n + i;
    }
    Ok(flat)
}

/// Inverse of [`flat_index`].
pub fn multi_index(shape: &Shape, flat: usize) -> Result<Vec<usize>> {
    if flat >= shape.size() {
        return Err(Error::Index(format!(
            "flat index {flat} out of bounds for shape {shape}"
        )));
    }
    let mut multi = vec![0; shape.order()];
    let mut rest = flat;
    for (slot, &n) in multi.iter_mut().zip(shape.dims()).rev() {
        *slot = rest % n;
        rest /= n;
    }
    Ok(multi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawTensor<T>",
    into = "RawTensor<T>",
    bound(serialize = "T: Scalar", deserialize = "T: Scalar")
)]
pub struct Tensor<T> {
    shape: Shape,
    data: Vec<T>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTensor<T> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> TryFrom<RawTensor<T>> for Tensor<T> {
    type Error = Error;

    fn try_from(raw: RawTensor<T>) -> Result<Self> {
        Tensor::from_vec(Shape::new(raw.dims)?, raw.data)
    }
}

impl<T: Scalar> From<Tensor<T>> for RawTensor<T> {
    fn from(t: Tensor<T>) -> Self {
        RawTensor {
            dims: t.shape.0,
            data: t.data,
        }
    }
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: Shape) -> Self {
        let n = shape.size();
        Tensor {
            shape,
            data: vec![T::zero(); n],
        }
    }

    pub fn filled(shape: Shape, value: T) -> Self {
        let n = shape.size();
        Tensor {
            shape,
            data: vec![value; n],
        }
    }

    /// Wraps row-major `data`; rejects length mismatches and non-finite entries.
    pub fn from_vec(shape: Shape, data: Vec<T>) -> Result<Self> {
        if data.len() != shape.size() {
            return Err(Error::Shape(format!(
                "{} entries supplied for shape {shape} of size {}",
                data.len(),
                shape.size()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite entry at flat index {pos}")));
        }
        Ok(Tensor { shape, data })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, multi: &[usize]) -> Result<T> {
        Ok(self.data[flat_index(&self.shape, multi)?])
    }

    pub fn set(&mut self, multi: &[usize], value: T) -> Result<()> {
        let i = flat_index(&self.shape, multi)?;
        self.data[i] = value;
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| x.scale(factor)).collect(),
        }
    }

    /// Entrywise magnitudes as a real tensor.
    pub fn abs(&self) -> Tensor<f64> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| x.abs()).collect(),
        }
    }

    /// Squared Frobenius norm.
    pub fn energy(&self) -> f64 {
        crate::scalar::norm_sqr(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn count_nonzero(&self, threshold: f64) -> usize {
        self.data.iter().filter(|x| x.abs() > threshold).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite tensors always serialize")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// A tensor whose scalar field is decided by the file it was read from.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyTensor {
    Real(Tensor<f64>),
    Complex(Tensor<Complex64>),
}

impl AnyTensor {
    /// Entries written as plain numbers load as real; `[re, im]` pairs as complex.
    pub fn from_json_str(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Probe {
            data: Vec<serde_json::Value>,
        }
        let probe: Probe = serde_json::from_str(s)?;
        match probe.data.first() {
            Some(serde_json::Value::Array(_)) => Ok(AnyTensor::Complex(Tensor::from_json_str(s)?)),
            _ => Ok(AnyTensor::Real(Tensor::from_json_str(s)?)),
        }
    }

    pub fn field(&self) -> Field {
        match self {
            AnyTensor::Real(_) => Field::Real,
            AnyTensor::Complex(_) => Field::Complex,
        }
    }

    pub fn shape(&self) -> &Shape {
        match self {
            AnyTensor::Real(t) => t.shape(),
            AnyTensor::Complex(t) => t.shape(),
        }
    }
}

/// Nonzero pattern of a tensor, stored as sorted flat offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    shape: Shape,
    flat: Vec<usize>,
}

impl SupportSet {
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn flat_indices(&self) -> &[usize] {
        &self.flat
    }

    pub fn contains(&self, multi: &[usize]) -> bool {
        flat_index(&self.shape, multi)
            .map(|i| self.flat.binary_search(&i).is_ok())
            .unwrap_or(false)
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        self.flat
            .iter()
            .map(|&i| multi_index(&self.shape, i).expect("support offsets are in bounds"))
    }
}

/// All multi-indices whose entry magnitude exceeds `threshold`.
///
/// A negative (or NaN) threshold is treated as zero.
pub fn extract_support<T: Scalar>(x: &Tensor<T>, threshold: f64) -> SupportSet {
    let threshold = threshold.max(0.0);
    SupportSet {
        shape: x.shape.clone(),
        flat: x
            .data
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > threshold)
            .map(|(i, _)| i)
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvMode {
    /// Output extent `n_i + m_i - 1` per axis.
    Full,
    /// Output takes `a`'s shape with the (odd) kernel centred; zero padding outside.
    SameCentered,
}

/// Direct d-dimensional convolution `C(i) = sum_j A(j) B(i - j)`.
pub fn convolve<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, mode: ConvMode) -> Result<Tensor<T>> {
    let order = a.shape.order();
    if b.shape.order() != order {
        return Err(Error::Shape(format!(
            "cannot convolve order-{order} with order-{} tensor",
            b.shape.order()
        )));
    }
    let out_shape = match mode {
        ConvMode::Full => Shape::new(
            a.shape
                .dims()
                .iter()
                .zip(b.shape.dims())
                .map(|(n, m)| n + m - 1)
                .collect::<Vec<_>>(),
        )?,
        ConvMode::SameCentered => {
            if let Some(m) = b.shape.dims().iter().find(|&&m| m % 2 == 0) {
                return Err(Error::Shape(format!(
                    "same-centered convolution needs odd kernel extents, got {m}"
                )));
            }
            a.shape.clone()
        }
    };
    let center: Vec<isize> = match mode {
        ConvMode::Full => vec![0; order],
        ConvMode::SameCentered => b.shape.dims().iter().map(|&m| (m / 2) as isize).collect(),
    };

    // Kernel taps as signed offsets relative to the output position.
    let taps: Vec<(Vec<isize>, T)> = b
        .shape
        .indices()
        .zip(&b.data)
        .filter(|(_, v)| **v != T::zero())
        .map(|(k, &v)| {
            let offset = k.iter().zip(&center).map(|(&ki, &c)| ki as isize - c).collect();
            (offset, v)
        })
        .collect();

    let out_dims: Vec<isize> = out_shape.dims().iter().map(|&d| d as isize).collect();
    let out_strides = out_shape.strides();
    let mut out = Tensor::zeros(out_shape);
    for (j, &av) in a.shape.indices().zip(&a.data) {
        if av == T::zero() {
            continue;
        }
        'tap: for (offset, bv) in &taps {
            let mut flat = 0usize;
            for axis in 0..order {
                let pos = j[axis] as isize + offset[axis];
                if pos < 0 || pos >= out_dims[axis] {
                    continue 'tap;
                }
                flat += pos as usize * out_strides[axis];
            }
            out.data[flat] += av * *bv;
        }
    }
    Ok(out)
}
