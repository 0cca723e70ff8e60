//! Mutual coherence, Welch-type lower bounds and the OMP error bound they imply.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{self, Scalar};
use crate::sensing::BlockSensor;

/// Largest normalized absolute inner product between two distinct columns.
pub fn mutual_coherence<T: Scalar>(a: &Matrix<T>) -> Result<f64> {
    if a.ncols() < 2 {
        return Err(Error::Domain(format!(
            "coherence needs at least 2 columns, got {}",
            a.ncols()
        )));
    }
    let norms = a.column_norms();
    if let Some(j) = norms.iter().position(|&v| v == 0.0) {
        return Err(Error::Domain(format!("column {j} is zero")));
    }
    let mut mu: f64 = 0.0;
    for k in 0..a.ncols() {
        for l in k + 1..a.ncols() {
            let c = scalar::inner(a.col(k), a.col(l)).abs() / (norms[k] * norms[l]);
            mu = mu.max(c);
        }
    }
    // Rounding can push identical columns a hair above one.
    Ok(mu.min(1.0))
}

/// Smallest coherence any `m x n` matrix can reach: `sqrt((n - m) / (m (n - 1)))`.
pub fn welch_bound(m: usize, n: usize) -> Result<f64> {
    if n < 2 || m == 0 || m > n {
        return Err(Error::Domain(format!(
            "welch bound needs 1 <= m <= n and n >= 2 (m = {m}, n = {n})"
        )));
    }
    let (m, n) = (m as f64, n as f64);
    Ok(((n - m) / (m * (n - 1.0))).sqrt())
}

/// Coherence of the assembled block-diagonal sensor: the largest block coherence.
/// Columns from different blocks have disjoint row support and never contribute.
pub fn block_coherence<T: Scalar>(sensor: &BlockSensor<T>) -> Result<f64> {
    sensor
        .blocks()
        .iter()
        .map(mutual_coherence)
        .try_fold(0.0f64, |acc, mu| Ok(acc.max(mu?)))
}

/// Lower bound on block-diagonal coherence: `sqrt((n - m) / (m (n / beta - 1)))`.
pub fn bcs_welch_bound(m: usize, n: usize, beta: usize) -> Result<f64> {
    if beta == 0 || !m.is_multiple_of(beta) || !n.is_multiple_of(beta) {
        return Err(Error::Domain(format!("beta = {beta} must divide m = {m} and n = {n}")));
    }
    if m == 0 || m >= n || n / beta < 2 {
        return Err(Error::Domain(format!(
            "need 0 < m < n and n / beta >= 2 (m = {m}, n = {n}, beta = {beta})"
        )));
    }
    let (mf, nf, bf) = (m as f64, n as f64, beta as f64);
    Ok(((nf - mf) / (mf * (nf / bf - 1.0))).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    /// sparsity level
    pub s: usize,
    /// noise standard deviation
    pub sigma: f64,
    pub alpha: f64,
    pub m: usize,
    pub n: usize,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            s: 50,
            sigma: 1e-2,
            alpha: 0.5,
            m: 2000,
            n: 10_000,
        }
    }
}

/// `2 (1 + alpha) / (1 - (s - 1) mu)^2 * s * sigma^2 * ln m`
pub fn omp_mse_bound(params: &BoundParams, mu: f64) -> Result<f64> {
    if params.s == 0 || params.m == 0 {
        return Err(Error::Domain("s and m must be positive".into()));
    }
    let product = (params.s as f64 - 1.0) * mu;
    if !(product < 1.0) {
        return Err(Error::BoundUndefined { product });
    }
    let s = params.s as f64;
    Ok(2.0 * (1.0 + params.alpha) / (1.0 - product).powi(2) * s * params.sigma.powi(2) * (params.m as f64).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundPoint {
    pub beta: usize,
    pub mu_lower_bound: f64,
    /// `None` where the bound is undefined for this `beta`.
    pub mse_upper_bound: Option<f64>,
}

/// MSE bound evaluated at the block coherence lower bound for each `beta`.
pub fn bound_curve(params: &BoundParams, betas: &[usize]) -> Result<Vec<BoundPoint>> {
    betas
        .iter()
        .map(|&beta| {
            let mu = bcs_welch_bound(params.m, params.n, beta)?;
            let mse = match omp_mse_bound(params, mu) {
                Ok(v) => Some(v),
                Err(Error::BoundUndefined { product }) => {
                    log::warn!("bound undefined at beta = {beta}: (s - 1) mu = {product:.4}");
                    None
                }
                Err(e) => return Err(e),
            };
            Ok(BoundPoint {
                beta,
                mu_lower_bound: mu,
                mse_upper_bound: mse,
            })
        })
        .collect()
}

/// Every `beta` that divides both `m` and `n` and leaves at least two columns per block.
pub fn valid_betas(m: usize, n: usize, max_beta: usize) -> Vec<usize> {
    (1..=max_beta)
        .filter(|&b| m.is_multiple_of(b) && n.is_multiple_of(b) && n / b >= 2)
        .collect()
}

/// Writes `beta,mu_lower_bound,mse_upper_bound`; undefined points are left out.
pub fn write_bound_csv<W: std::io::Write>(points: &[BoundPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["beta", "mu_lower_bound", "mse_upper_bound"])?;
    for p in points {
        if let Some(mse) = p.mse_upper_bound {
            w.write_record([p.beta.to_string(), p.mu_lower_bound.to_string(), mse.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherence_examples() {
        assert_eq!(mutual_coherence(&Matrix::<f64>::identity(4)).unwrap(), 0.0);
        let twins = Matrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 1.0]]).unwrap();
        assert!((mutual_coherence(&twins).unwrap() - 1.0).abs() < 1e-15);
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!((mutual_coherence(&a).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn coherence_errors() {
        let zero_col = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(mutual_coherence(&zero_col), Err(Error::Domain(_))));
        assert!(mutual_coherence(&Matrix::<f64>::identity(1)).is_err());
    }

    #[test]
    fn welch_examples() {
        assert_eq!(welch_bound(5, 5).unwrap(), 0.0);
        assert!((welch_bound(2, 4).unwrap() - (2.0f64 / 6.0).sqrt()).abs() < 1e-15);
        assert!((welch_bound(2, 4).unwrap() - 0.5774).abs() < 1e-4);
        assert_eq!(welch_bound(1, 7).unwrap(), 1.0);
        assert!(welch_bound(0, 4).is_err());
        assert!(welch_bound(5, 4).is_err());
        assert!(welch_bound(1, 1).is_err());
    }

    #[test]
    fn bcs_bound_examples() {
        assert_eq!(bcs_welch_bound(2, 8, 2).unwrap(), 1.0);
        assert_eq!(welch_bound(1, 4).unwrap(), 1.0);
        assert_eq!(bcs_welch_bound(30, 100, 1).unwrap(), welch_bound(30, 100).unwrap());
        assert!(bcs_welch_bound(3, 8, 2).is_err());
        assert!(bcs_welch_bound(8, 8, 1).is_err());
        assert!(bcs_welch_bound(4, 8, 4).is_ok());
        assert!(bcs_welch_bound(8, 16, 8).is_ok());
        assert!(bcs_welch_bound(4, 4, 4).is_err());
    }

    #[test]
    fn mse_bound_collapses_to_two() {
        // With mu = 0, s = 1, alpha = 0 and sigma = 1 only 2 ln m remains.
        let p = BoundParams {
            s: 1,
            sigma: 1.0,
            alpha: 0.0,
            m: 1,
            n: 10,
        };
        assert_eq!(omp_mse_bound(&p, 0.0).unwrap(), 0.0);
        let p = BoundParams { m: 3, ..p };
        let v = omp_mse_bound(&p, 0.0).unwrap();
        assert!((v / 3f64.ln() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mse_bound_undefined() {
        let p = BoundParams {
            s: 11,
            ..BoundParams::default()
        };
        assert!(matches!(omp_mse_bound(&p, 0.1), Err(Error::BoundUndefined { .. })));
        assert!(omp_mse_bound(&p, 0.099).is_ok());
    }

    #[test]
    fn mse_bound_monotone_in_mu() {
        let p = BoundParams::default();
        assert!(omp_mse_bound(&p, 0.001).unwrap() < omp_mse_bound(&p, 0.01).unwrap());
    }

    #[test]
    fn curve_single_point() {
        let p = BoundParams {
            m: 9600,
            ..BoundParams::default()
        };
        let c = bound_curve(&p, &[1]).unwrap();
        let direct = omp_mse_bound(&p, welch_bound(p.m, p.n).unwrap()).unwrap();
        assert_eq!(c[0].mse_upper_bound, Some(direct));
    }

    #[test]
    fn curve_marks_undefined_points() {
        let c = bound_curve(&BoundParams::default(), &[1, 2]).unwrap();
        assert!(c[0].mse_upper_bound.is_some());
        assert!(c[1].mse_upper_bound.is_none());
        let mut buf = Vec::new();
        write_bound_csv(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("beta,mu_lower_bound,mse_upper_bound\n1,"));
    }

    #[test]
    fn curve_depends_only_on_mu() {
        let p = BoundParams {
            s: 3,
            sigma: 0.1,
            alpha: 0.5,
            m: 8,
            n: 64,
        };
        for point in bound_curve(&p, &[1, 2, 4, 8]).unwrap() {
            let mu = welch_bound(p.m / point.beta, p.n / point.beta).unwrap();
            assert!((point.mu_lower_bound - mu).abs() < 1e-15);
            assert_eq!(point.mse_upper_bound, omp_mse_bound(&p, point.mu_lower_bound).ok());
        }
    }

    #[test]
    fn valid_beta_list() {
        assert_eq!(
            valid_betas(2000, 10_000, 50),
            vec![1, 2, 4, 5, 8, 10, 16, 20, 25, 40, 50]
        );
    }
}
