use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::dataset::training_set;
use crate::error::{Error, Result};
use crate::kernel::{learn_kernel, CorrelationKernel, DatasetStats};
use crate::partition::PartitionMap;
use crate::recovery::{parallel_bcs_with, serial_bcs, RecoveryResult, Schedule};
use crate::scalar::{self, Field, Scalar};
use crate::seed;
use crate::sensing::{draw_sensor, measure, BlockSensor};
use crate::signals::{generate_clustered, nmse_from_energies};
use crate::tensor::Tensor;

const TEST_SIGNAL: u64 = 0x7465_7374;
const NOISE: u64 = 0x6e6f_6973;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Every block solved independently by OMP.
    StandardBcs,
    /// Blocks solved in prior-mass order with LW-OMP.
    SerialBcs,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::StandardBcs, Method::SerialBcs];

    pub fn name(self) -> &'static str {
        match self {
            Method::StandardBcs => "standard-bcs",
            Method::SerialBcs => "serial-bcs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Kernel and sparsity statistics driving serial BCS.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    pub kernel: CorrelationKernel,
    pub stats: DatasetStats,
}

impl Prior {
    /// Loads the configured kernel files, or learns from the generated training set.
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Self> {
        if let (Some(kpath), Some(spath)) = (&cfg.kernel_file, &cfg.stats_file) {
            let text = std::fs::read_to_string(kpath).map_err(|e| Error::io(kpath, e))?;
            let kernel = CorrelationKernel::from_json_str(&text)?;
            let text = std::fs::read_to_string(spath).map_err(|e| Error::io(spath, e))?;
            let stats: DatasetStats = serde_json::from_str(&text)?;
            if stats.shape != *cfg.shape() || kernel.order() != cfg.shape().order() {
                return Err(Error::Config(format!(
                    "kernel learned for {} does not match signal shape {}",
                    stats.shape,
                    cfg.shape()
                )));
            }
            return Ok(Prior { kernel, stats });
        }
        let (kernel, stats) = match cfg.signal.field {
            Field::Real => learn_kernel(
                &training_set::<f64>(&cfg.signal, cfg.dataset_size)?,
                cfg.kernel_threshold,
            )?,
            Field::Complex => learn_kernel(
                &training_set::<Complex64>(&cfg.signal, cfg.dataset_size)?,
                cfg.kernel_threshold,
            )?,
        };
        Ok(Prior { kernel, stats })
    }
}

/// One recovery of one test signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// SNR in dB or subsampling ratio, depending on the sweep.
    pub point: f64,
    pub m: usize,
    pub beta: usize,
    pub method: Method,
    pub trial: usize,
    pub error_energy: f64,
    pub reference_energy: f64,
    pub ms: f64,
}

impl TrialRecord {
    pub fn nmse(&self) -> f64 {
        self.error_energy / self.reference_energy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub point: f64,
    pub beta: usize,
    pub method: Method,
    pub nmse: f64,
    pub mean_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub records: Vec<TrialRecord>,
    pub rows: Vec<SummaryRow>,
}

impl Sweep {
    fn from_records(mut records: Vec<TrialRecord>) -> Result<Self> {
        records.sort_by(|a, b| {
            a.point
                .total_cmp(&b.point)
                .then(a.beta.cmp(&b.beta))
                .then(a.method.cmp(&b.method))
                .then(a.trial.cmp(&b.trial))
        });
        let mut groups: BTreeMap<(u64, usize, Method), (f64, Vec<&TrialRecord>)> = BTreeMap::new();
        for r in &records {
            groups
                .entry((order_key(r.point), r.beta, r.method))
                .or_insert((r.point, Vec::new()))
                .1
                .push(r);
        }
        let rows = groups
            .into_values()
            .map(|(point, rs)| {
                let err: f64 = rs.iter().map(|r| r.error_energy).sum();
                let energy: f64 = rs.iter().map(|r| r.reference_energy).sum();
                Ok(SummaryRow {
                    point,
                    beta: rs[0].beta,
                    method: rs[0].method,
                    nmse: nmse_from_energies(err, energy)?,
                    mean_ms: rs.iter().map(|r| r.ms).sum::<f64>() / rs.len() as f64,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Sweep { records, rows })
    }

    /// Trial records of one curve point, ordered by trial.
    pub fn trials(&self, point: f64, beta: usize, method: Method) -> Vec<&TrialRecord> {
        self.records
            .iter()
            .filter(|r| r.point == point && r.beta == beta && r.method == method)
            .collect()
    }

    pub fn row(&self, point: f64, beta: usize, method: Method) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.point == point && r.beta == beta && r.method == method)
    }

    /// CSV with the given name for the point column; `mean_ms` is optional.
    pub fn write_csv(&self, w: impl Write, point_column: &str, with_timing: bool) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![point_column, "beta", "method", "nmse"];
        if with_timing {
            header.push("mean_ms");
        }
        out.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.point.to_string(),
                r.beta.to_string(),
                r.method.to_string(),
                r.nmse.to_string(),
            ];
            if with_timing {
                rec.push(r.mean_ms.to_string());
            }
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::io(Path::new("<csv>"), e))?;
        Ok(())
    }
}

/// Total order on finite floats that `BTreeMap` can use.
fn order_key(v: f64) -> u64 {
    let bits = v.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

/// Everything needed to run trials at one measurement count.
struct Bench<'a> {
    cfg: &'a ExperimentConfig,
    prior: &'a Prior,
    m: usize,
    partitions: Vec<PartitionMap>,
}

impl<'a> Bench<'a> {
    fn new(cfg: &'a ExperimentConfig, prior: &'a Prior, m: usize) -> Result<Self> {
        let partitions = cfg
            .betas
            .iter()
            .map(|&b| cfg.partition(b).map(PartitionMap::new))
            .collect::<Result<Vec<_>>>()?;
        Ok(Bench {
            cfg,
            prior,
            m,
            partitions,
        })
    }

    fn sensor<T: Scalar>(&self, bi: usize, trial: Option<usize>) -> Result<BlockSensor<T>> {
        let beta = self.cfg.betas[bi];
        let mut tags = vec![beta as u64, self.m as u64];
        tags.extend(trial.map(|t| t as u64));
        draw_sensor(
            self.m,
            self.cfg.shape().size(),
            beta,
            self.partitions[bi].clone(),
            seed::derive(self.cfg.sensor_seed, &tags),
            self.cfg.ensemble,
        )
    }

    fn sensors<T: Scalar>(&self) -> Result<Vec<BlockSensor<T>>> {
        (0..self.cfg.betas.len()).map(|bi| self.sensor(bi, None)).collect()
    }

    fn test_signal<T: Scalar>(&self, trial: usize) -> Result<Tensor<T>> {
        let s = seed::derive(self.cfg.seed, &[TEST_SIGNAL, trial as u64]);
        generate_clustered(&self.cfg.signal.with_seed(s))
    }

    /// Scales `x` to the target SNR under unit noise variance and measures it.
    fn measure<T: Scalar>(
        &self,
        sensor: &BlockSensor<T>,
        x: &Tensor<T>,
        snr_db: f64,
        trial: usize,
    ) -> Result<(Tensor<T>, crate::sensing::MeasurementSet<T>)> {
        let energy: f64 = sensor.apply_all(x)?.iter().map(|v| scalar::norm_sqr(v)).sum();
        if !(energy > 0.0) {
            return Err(Error::Domain("test signal has no energy in the measurements".into()));
        }
        let target = 10f64.powf(snr_db / 10.0) * self.m as f64;
        let xs = x.scaled((target / energy).sqrt());
        let meas = measure(sensor, &xs, 1.0, seed::derive(self.cfg.seed, &[NOISE, trial as u64]))?;
        Ok((xs, meas))
    }

    fn solve<T: Scalar>(
        &self,
        method: Method,
        sensor: &BlockSensor<T>,
        meas: &crate::sensing::MeasurementSet<T>,
        schedule: Schedule,
    ) -> Result<RecoveryResult<T>> {
        let beta = sensor.num_blocks();
        let config = self
            .cfg
            .solver
            .recovery_config(self.prior.stats.avg_sparsity, beta, self.m / beta);
        match method {
            Method::StandardBcs => parallel_bcs_with(meas, sensor, &config, schedule),
            Method::SerialBcs => serial_bcs(meas, sensor, &self.prior.kernel, self.prior.stats.avg_sparsity, &config),
        }
    }

    fn run<T: Scalar>(&self, point: f64, snr_db: f64) -> Result<Vec<TrialRecord>> {
        let fixed = if self.cfg.redraw_sensor_per_trial {
            None
        } else {
            Some(self.sensors::<T>()?)
        };
        let per_trial = (0..self.cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let x = self.test_signal::<T>(trial)?;
                let mut out = Vec::with_capacity(self.cfg.betas.len() * Method::ALL.len());
                for bi in 0..self.cfg.betas.len() {
                    let drawn;
                    let sensor = match &fixed {
                        Some(s) => &s[bi],
                        None => {
                            drawn = self.sensor::<T>(bi, Some(trial))?;
                            &drawn
                        }
                    };
                    let (xs, meas) = self.measure(sensor, &x, snr_db, trial)?;
                    for method in Method::ALL {
                        let start = Instant::now();
                        let result = self.solve(method, sensor, &meas, Schedule::Concurrent)?;
                        let ms = start.elapsed().as_secs_f64() * 1e3;
                        let error_energy = xs
                            .data()
                            .iter()
                            .zip(result.estimate.data())
                            .map(|(&a, &b)| (a - b).norm_sqr())
                            .sum();
                        out.push(TrialRecord {
                            point,
                            m: self.m,
                            beta: self.cfg.betas[bi],
                            method,
                            trial,
                            error_energy,
                            reference_energy: xs.energy(),
                            ms,
                        });
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(per_trial.into_iter().flatten().collect())
    }
}

fn dispatch<R>(field: Field, real: impl FnOnce() -> Result<R>, complex: impl FnOnce() -> Result<R>) -> Result<R> {
    match field {
        Field::Real => real(),
        Field::Complex => complex(),
    }
}

/// NMSE against SNR at the configured subsampling ratio.
pub fn bench_snr(cfg: &ExperimentConfig, prior: &Prior) -> Result<Sweep> {
    cfg.validate()?;
    let m = cfg.measurement_count(cfg.subsampling)?;
    let bench = Bench::new(cfg, prior, m)?;
    let mut records = Vec::new();
    for &snr in &cfg.snr_db {
        records.extend(dispatch(
            cfg.signal.field,
            || bench.run::<f64>(snr, snr),
            || bench.run::<Complex64>(snr, snr),
        )?);
    }
    Sweep::from_records(records)
}

/// NMSE against subsampling ratio at the fixed SNR.
pub fn bench_subsampling(cfg: &ExperimentConfig, prior: &Prior) -> Result<Sweep> {
    cfg.validate()?;
    let mut records = Vec::new();
    for &ratio in &cfg.subsampling_grid {
        let m = match cfg.measurement_count(ratio) {
            Ok(m) => m,
            Err(e) => {
                log::warn!("skipping ratio {ratio}: {e}");
                continue;
            }
        };
        let bench = Bench::new(cfg, prior, m)?;
        records.extend(dispatch(
            cfg.signal.field,
            || bench.run::<f64>(ratio, cfg.fixed_snr_db),
            || bench.run::<Complex64>(ratio, cfg.fixed_snr_db),
        )?);
    }
    Sweep::from_records(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimedMethod {
    /// Standard BCS with blocks solved one after another.
    StandardBcs,
    /// Standard BCS with blocks solved concurrently.
    StandardBcsParallel,
    SerialBcs,
}

impl TimedMethod {
    pub const ALL: [TimedMethod; 3] = [
        TimedMethod::StandardBcs,
        TimedMethod::StandardBcsParallel,
        TimedMethod::SerialBcs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TimedMethod::StandardBcs => "standard-bcs",
            TimedMethod::StandardBcsParallel => "standard-bcs-parallel",
            TimedMethod::SerialBcs => "serial-bcs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub beta: usize,
    pub method: TimedMethod,
    /// Median over trials.
    pub wall_ms: f64,
}

/// Median wall-clock per beta and method; trials run one at a time.
pub fn timing(cfg: &ExperimentConfig, prior: &Prior) -> Result<Vec<TimingRow>> {
    cfg.validate()?;
    let m = cfg.measurement_count(cfg.subsampling)?;
    let bench = Bench::new(cfg, prior, m)?;
    dispatch(
        cfg.signal.field,
        || time_all::<f64>(&bench),
        || time_all::<Complex64>(&bench),
    )
}

fn time_all<T: Scalar>(bench: &Bench<'_>) -> Result<Vec<TimingRow>> {
    let cfg = bench.cfg;
    let mut rows = Vec::new();
    for bi in 0..cfg.betas.len() {
        let sensor = bench.sensor::<T>(bi, None)?;
        let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.trials); TimedMethod::ALL.len()];
        for trial in 0..cfg.trials {
            let x = bench.test_signal::<T>(trial)?;
            let (_, meas) = bench.measure(&sensor, &x, cfg.fixed_snr_db, trial)?;
            for (k, method) in TimedMethod::ALL.into_iter().enumerate() {
                let (m, schedule) = match method {
                    TimedMethod::StandardBcs => (Method::StandardBcs, Schedule::Sequential),
                    TimedMethod::StandardBcsParallel => (Method::StandardBcs, Schedule::Concurrent),
                    TimedMethod::SerialBcs => (Method::SerialBcs, Schedule::Sequential),
                };
                let start = Instant::now();
                bench.solve(m, &sensor, &meas, schedule)?;
                samples[k].push(start.elapsed().as_secs_f64() * 1e3);
            }
        }
        for (k, method) in TimedMethod::ALL.into_iter().enumerate() {
            rows.push(TimingRow {
                beta: cfg.betas[bi],
                method,
                wall_ms: median(&mut samples[k]),
            });
        }
    }
    Ok(rows)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn write_timing_csv(rows: &[TimingRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["beta", "method", "wall_ms"])?;
    for r in rows {
        out.write_record([r.beta.to_string(), r.method.name().to_string(), r.wall_ms.to_string()])?;
    }
    out.flush().map_err(|e| Error::io(Path::new("<csv>"), e))?;
    Ok(())
}
