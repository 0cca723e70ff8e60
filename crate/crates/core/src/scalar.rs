//! Scalar fields the library operates over: `f64` and `Complex64`.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Field {
    Real,
    Complex,
}

pub trait Scalar:
    Copy
    + Debug
    + Default
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + Serialize
    + DeserializeOwned
    + 'static
{
    const FIELD: Field;

    fn zero() -> Self {
        Self::default()
    }
    fn from_real(x: f64) -> Self;
    fn conj(self) -> Self;
    fn abs(self) -> f64;
    fn norm_sqr(self) -> f64;
    fn scale(self, factor: f64) -> Self;
    fn is_finite(self) -> bool;

    /// Zero-mean draw with unit variance. Complex draws are circularly symmetric.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Unit-magnitude draw: a random sign for reals, a random phase for complex.
    fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;

    fn from_real(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn scale(self, factor: f64) -> Self {
        self * factor
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
    fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }
}

impl Scalar for Complex64 {
    const FIELD: Field = Field::Complex;

    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    fn scale(self, factor: f64) -> Self {
        self * factor
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
    fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        Complex64::from_polar(1.0, phase)
    }
}

/// `<a, b> = sum conj(a_i) b_i`
pub fn inner<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x.conj() * y)
}

pub fn norm_sqr<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn norm<T: Scalar>(a: &[T]) -> f64 {
    norm_sqr(a).sqrt()
}
