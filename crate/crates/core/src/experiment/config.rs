use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{valid_betas, BoundParams};
use crate::error::{Error, Result};
use crate::partition::{PartitionSpec, Strategy};
use crate::recovery::RecoveryConfig;
use crate::scalar::Field;
use crate::sensing::Ensemble;
use crate::signals::{Amplitude, ClusterSpec};
use crate::tensor::Shape;

/// Solver knobs shared by every method in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// Per-block atom budget is `ceil(budget_factor * s / beta)`.
    pub budget_factor: f64,
    pub residual_tol_factor: f64,
    pub logit_scale: f64,
    pub prior_clip: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            budget_factor: 1.5,
            residual_tol_factor: 1.0,
            logit_scale: 1.0,
            prior_clip: 1e-3,
        }
    }
}

impl SolverSettings {
    /// Recovery config for a `beta`-block problem with unit noise variance.
    pub fn recovery_config(&self, avg_sparsity: f64, beta: usize, block_rows: usize) -> RecoveryConfig {
        RecoveryConfig {
            max_iters: 1,
            residual_tol_factor: self.residual_tol_factor,
            logit_scale: self.logit_scale,
            prior_clip: self.prior_clip,
            noise_var: 1.0,
        }
        .with_budget(self.budget_factor, avg_sparsity, beta, block_rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Signal class; its `seed` seeds the training dataset.
    pub signal: ClusterSpec,
    /// Training signals used to learn the kernel (and written by gen-data).
    pub dataset_size: usize,
    #[serde(default)]
    pub kernel_threshold: f64,
    /// Pre-learned kernel; `stats_file` must accompany it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats_file: Option<PathBuf>,
    pub ensemble: Ensemble,
    pub sensor_seed: u64,
    #[serde(default)]
    pub redraw_sensor_per_trial: bool,
    pub strategy: Strategy,
    pub betas: Vec<usize>,
    /// m / n for the SNR sweep and timing.
    pub subsampling: f64,
    pub snr_db: Vec<f64>,
    pub subsampling_grid: Vec<f64>,
    /// SNR used by the subsampling sweep and timing.
    pub fixed_snr_db: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverSettings,
}

impl ExperimentConfig {
    /// 16x16 real signals, beta in {1, 4, 16}; runs in minutes.
    pub fn desk() -> Self {
        ExperimentConfig {
            signal: ClusterSpec {
                dims: Shape::new(vec![16, 16]).unwrap(),
                field: Field::Real,
                num_clusters: 2,
                cluster_radius: 1,
                sparsity: 12,
                amplitude: Amplitude::ComplexGaussian,
                seed: 1,
            },
            dataset_size: 200,
            kernel_threshold: 0.0,
            kernel_file: None,
            stats_file: None,
            ensemble: Ensemble::Gaussian,
            sensor_seed: 2,
            redraw_sensor_per_trial: false,
            strategy: Strategy::Comb,
            betas: vec![1, 4, 16],
            subsampling: 0.4,
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            subsampling_grid: vec![0.2, 0.3, 0.4, 0.5],
            fixed_snr_db: 30.0,
            trials: 100,
            seed: 3,
            solver: SolverSettings::default(),
        }
    }

    /// 16x16x8x8 complex signals at beta in {16, 64} with few trials.
    pub fn paper() -> Self {
        ExperimentConfig {
            signal: ClusterSpec {
                dims: Shape::new(vec![16, 16, 8, 8]).unwrap(),
                field: Field::Complex,
                num_clusters: 3,
                cluster_radius: 1,
                sparsity: 50,
                amplitude: Amplitude::ComplexGaussian,
                seed: 1,
            },
            dataset_size: 200,
            ensemble: Ensemble::ComplexGaussian,
            betas: vec![16, 64],
            snr_db: vec![0.0, 10.0, 20.0, 30.0],
            trials: 5,
            ..ExperimentConfig::desk()
        }
    }

    /// 8x8 real signals for smoke tests.
    pub fn small() -> Self {
        ExperimentConfig {
            signal: ClusterSpec {
                dims: Shape::new(vec![8, 8]).unwrap(),
                field: Field::Real,
                num_clusters: 1,
                cluster_radius: 1,
                sparsity: 4,
                amplitude: Amplitude::ComplexGaussian,
                seed: 1,
            },
            dataset_size: 20,
            betas: vec![1, 4],
            snr_db: vec![10.0, 30.0],
            trials: 4,
            ..ExperimentConfig::desk()
        }
    }

    pub fn profile(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "paper" => Ok(Self::paper()),
            "small" => Ok(Self::small()),
            other => Err(Error::Config(format!("unknown profile {other:?} (desk, paper, small)"))),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn shape(&self) -> &Shape {
        &self.signal.dims
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        if self.signal.field != self.ensemble.field() {
            return Err(Error::Config(format!(
                "{:?} signals with a {:?} sensing ensemble",
                self.signal.field, self.ensemble
            )));
        }
        if self.trials == 0 || self.dataset_size == 0 {
            return Err(Error::Config("trials and dataset_size must be at least 1".into()));
        }
        if self.betas.is_empty() {
            return Err(Error::Config("betas must not be empty".into()));
        }
        for &beta in &self.betas {
            self.partition(beta)?;
        }
        for &r in self.subsampling_grid.iter().chain([&self.subsampling]) {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::Config(format!("subsampling ratio {r} must lie in (0, 1]")));
            }
        }
        if self.snr_db.iter().chain([&self.fixed_snr_db]).any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR values must be finite".into()));
        }
        if !(self.solver.budget_factor > 0.0 && self.solver.budget_factor.is_finite()) {
            return Err(Error::Config("budget_factor must be positive".into()));
        }
        if self.kernel_file.is_some() != self.stats_file.is_some() {
            return Err(Error::Config(
                "kernel_file and stats_file must be given together".into(),
            ));
        }
        // Validates prior_clip, tolerances and logit scale.
        self.solver.recovery_config(1.0, 1, 1).validate(1)
    }

    pub fn partition(&self, beta: usize) -> Result<PartitionSpec> {
        PartitionSpec::auto(self.shape().clone(), beta, self.strategy)
    }

    /// Measurement count for a subsampling ratio: the multiple of every beta
    /// nearest to `ratio * n`.
    pub fn measurement_count(&self, ratio: f64) -> Result<usize> {
        let n = self.shape().size();
        let step = self.betas.iter().fold(1usize, |acc, &b| lcm(acc, b));
        let m = ((ratio * n as f64 / step as f64).round() as usize) * step;
        if m == 0 || m > n {
            return Err(Error::Config(format!(
                "ratio {ratio} gives no feasible measurement count for n = {n} and betas {:?}",
                self.betas
            )));
        }
        Ok(m)
    }
}

/// Inputs of the `bounds` command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsConfig {
    pub s: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub m: usize,
    pub n: usize,
    /// Largest beta considered; only divisors of both m and n are evaluated.
    pub max_beta: usize,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        let p = BoundParams::default();
        BoundsConfig {
            s: p.s,
            sigma: p.sigma,
            alpha: p.alpha,
            m: p.m,
            n: p.n,
            max_beta: 50,
        }
    }
}

impl BoundsConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: BoundsConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn params(&self) -> BoundParams {
        BoundParams {
            s: self.s,
            sigma: self.sigma,
            alpha: self.alpha,
            m: self.m,
            n: self.n,
        }
    }

    pub fn betas(&self) -> Vec<usize> {
        valid_betas(self.m, self.n, self.max_beta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0 || self.m == 0 || self.m >= self.n || self.max_beta == 0 {
            return Err(Error::Config(format!(
                "bounds need s >= 1, 1 <= m < n and max_beta >= 1 (s = {}, m = {}, n = {}, max_beta = {})",
                self.s, self.m, self.n, self.max_beta
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite() && self.alpha.is_finite()) {
            return Err(Error::Config(
                "sigma and alpha must be finite, sigma nonnegative".into(),
            ));
        }
        Ok(())
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}
