//! Orthogonal matching pursuit and its logit-weighted variant.
//!
//! The least-squares refit is kept as an incremental QR factorization of the
//! selected atoms (two-pass modified Gram-Schmidt), so each iteration costs one
//! adjoint plus `O(m k)` for the new atom.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::LinearOperator;
use crate::scalar::{self, Scalar};

/// Relative residual below which the pursuit stops even with a zero noise floor.
const NUMERICAL_FLOOR: f64 = 1e-12;

/// An atom whose component orthogonal to the current support is below this
/// fraction of its norm is treated as linearly dependent.
const DEPENDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryConfig {
    /// Atom budget per solve.
    pub max_iters: usize,
    /// Stop once `||r|| <= residual_tol_factor * sigma * sqrt(m)`.
    pub residual_tol_factor: f64,
    /// Weight of the log-odds term in LW-OMP selection.
    pub logit_scale: f64,
    /// Priors are clipped to `[prior_clip, 1 - prior_clip]` before the logit.
    pub prior_clip: f64,
    /// Per-entry noise variance `sigma^2`.
    pub noise_var: f64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            max_iters: 1,
            residual_tol_factor: 1.0,
            logit_scale: 1.0,
            prior_clip: 1e-3,
            noise_var: 1.0,
        }
    }
}

impl RecoveryConfig {
    /// Budget of `ceil(budget_factor * s / beta)` atoms per block, at least one
    /// and at most the block measurement count.
    pub fn with_budget(mut self, budget_factor: f64, avg_sparsity: f64, beta: usize, block_rows: usize) -> Self {
        let budget = (budget_factor * avg_sparsity / beta as f64).ceil() as usize;
        self.max_iters = budget.clamp(1, block_rows.max(1));
        self
    }

    pub fn validate(&self, block_rows: usize) -> Result<()> {
        if self.max_iters == 0 || self.max_iters > block_rows {
            return Err(Error::Config(format!(
                "max_iters = {} must lie in 1..={block_rows}",
                self.max_iters
            )));
        }
        if !(self.prior_clip > 0.0 && self.prior_clip < 0.5) {
            return Err(Error::Config(format!(
                "prior_clip = {} must lie in (0, 0.5)",
                self.prior_clip
            )));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return Err(Error::Config(format!(
                "noise_var = {} must be finite and nonnegative",
                self.noise_var
            )));
        }
        if !(self.residual_tol_factor >= 0.0 && self.residual_tol_factor.is_finite()) {
            return Err(Error::Config(
                "residual_tol_factor must be finite and nonnegative".into(),
            ));
        }
        if !self.logit_scale.is_finite() {
            return Err(Error::Config("logit_scale must be finite".into()));
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        self.noise_var.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmpSolution<T> {
    pub x: Vec<T>,
    /// Selected atoms in selection order.
    pub support: Vec<usize>,
    /// `||r||` before the first and after every iteration.
    pub residual_norms: Vec<f64>,
    /// Atoms dropped as linearly dependent on the support.
    pub rejected: Vec<usize>,
}

impl<T: Scalar> OmpSolution<T> {
    pub fn iterations(&self) -> usize {
        self.support.len()
    }

    pub fn residual_norm(&self) -> f64 {
        *self.residual_norms.last().expect("initial residual is always recorded")
    }
}

/// `ln(p / (1 - p))` of the prior clipped to `[eps, 1 - eps]`.
pub fn clipped_logit(p: f64, eps: f64) -> f64 {
    let p = p.max(eps).min(1.0 - eps);
    (p / (1.0 - p)).ln()
}

/// Classical OMP: select `argmax |<a_k, r>|`, refit, repeat.
pub fn omp<T: Scalar>(y: &[T], op: &dyn LinearOperator<T>, config: &RecoveryConfig) -> Result<OmpSolution<T>> {
    pursue(y, op, config, None)
}

/// LW-OMP: select `argmax |<a_k, r>|^2 + logit_scale * sigma^2 * logit(p_k)`.
pub fn lw_omp<T: Scalar>(
    y: &[T],
    op: &dyn LinearOperator<T>,
    prior: &[f64],
    config: &RecoveryConfig,
) -> Result<OmpSolution<T>> {
    if prior.len() != op.cols() {
        return Err(Error::Shape(format!(
            "prior of length {} for {} atoms",
            prior.len(),
            op.cols()
        )));
    }
    if let Some(p) = prior.iter().find(|p| !(**p >= 0.0)) {
        return Err(Error::Domain(format!("prior entry {p} is negative or NaN")));
    }
    let weight = config.logit_scale * config.noise_var;
    let bias: Vec<f64> = prior
        .iter()
        .map(|&p| weight * clipped_logit(p, config.prior_clip))
        .collect();
    pursue(y, op, config, Some(&bias))
}

fn pursue<T: Scalar>(
    y: &[T],
    op: &dyn LinearOperator<T>,
    config: &RecoveryConfig,
    bias: Option<&[f64]>,
) -> Result<OmpSolution<T>> {
    let m = op.rows();
    let n = op.cols();
    if y.len() != m {
        return Err(Error::Shape(format!(
            "{} measurements for an operator with {m} rows",
            y.len()
        )));
    }
    config.validate(m)?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("measurements contain non-finite values".into()));
    }

    let y_norm = scalar::norm(y);
    let stop = (config.residual_tol_factor * config.sigma() * (m as f64).sqrt()).max(NUMERICAL_FLOOR * y_norm);

    let mut r = y.to_vec();
    let mut basis: Vec<Vec<T>> = Vec::new();
    // r_factor[j] holds column j of R (length j + 1).
    let mut r_factor: Vec<Vec<T>> = Vec::new();
    let mut qty: Vec<T> = Vec::new();
    let mut support = Vec::new();
    let mut rejected = Vec::new();
    let mut in_play = vec![true; n];
    let mut residual_norms = vec![y_norm];

    while support.len() < config.max_iters && *residual_norms.last().unwrap() > stop {
        let corr = op.adjoint(&r);
        let mut accepted = false;
        while let Some(k) = best_atom(&corr, bias, &in_play) {
            in_play[k] = false;
            let atom = op.column(k);
            let atom_norm = scalar::norm(&atom);
            let mut w = atom;
            let mut coeffs = vec![T::zero(); basis.len()];
            for _pass in 0..2 {
                for (q, c) in basis.iter().zip(coeffs.iter_mut()) {
                    let proj = scalar::inner(q, &w);
                    for (wi, &qi) in w.iter_mut().zip(q) {
                        *wi -= qi * proj;
                    }
                    *c += proj;
                }
            }
            let w_norm = scalar::norm(&w);
            if !(w_norm > DEPENDENCE_TOL * atom_norm) {
                log::warn!("atom {k} is linearly dependent on the current support; trying the next best");
                rejected.push(k);
                continue;
            }
            let q: Vec<T> = w.iter().map(|v| v.scale(1.0 / w_norm)).collect();
            let proj = scalar::inner(&q, &r);
            for (ri, &qi) in r.iter_mut().zip(&q) {
                *ri -= qi * proj;
            }
            qty.push(scalar::inner(&q, y));
            coeffs.push(T::from_real(w_norm));
            r_factor.push(coeffs);
            basis.push(q);
            support.push(k);
            accepted = true;
            break;
        }
        if !accepted {
            break;
        }
        let norm = scalar::norm(&r);
        let prev = *residual_norms.last().unwrap();
        assert!(
            norm <= prev * (1.0 + 1e-12) + f64::MIN_POSITIVE,
            "OMP residual increased from {prev} to {norm}"
        );
        residual_norms.push(norm);
    }

    // Back substitution R c = Q^H y.
    let k = support.len();
    let mut coef = vec![T::zero(); k];
    for i in (0..k).rev() {
        let mut acc = qty[i];
        for (j, &cj) in coef.iter().enumerate().skip(i + 1) {
            acc -= r_factor[j][i] * cj;
        }
        coef[i] = acc.scale(1.0 / r_factor[i][i].abs());
    }
    let mut x = vec![T::zero(); n];
    for (&idx, c) in support.iter().zip(coef) {
        x[idx] = c;
    }
    Ok(OmpSolution {
        x,
        support,
        residual_norms,
        rejected,
    })
}

/// Highest-scoring atom still in play; ties resolve to the lowest index.
fn best_atom<T: Scalar>(corr: &[T], bias: Option<&[f64]>, in_play: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, c) in corr.iter().enumerate() {
        if !in_play[k] {
            continue;
        }
        let score = match bias {
            Some(b) => c.norm_sqr() + b[k],
            None => c.abs(),
        };
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((k, score));
        }
    }
    best.map(|(k, _)| k)
}
