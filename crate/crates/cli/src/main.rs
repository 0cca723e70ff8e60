//! `bcs`: dataset generation, kernel learning, bound curves and the NMSE and
//! timing benchmarks of block compressed sensing.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bcs_core::analysis::{bound_curve, write_bound_csv};
use bcs_core::experiment::{
    bench_snr, bench_subsampling, load_dataset, timing, write_dataset, write_timing_csv, BoundsConfig,
    ExperimentConfig, Prior,
};
use bcs_core::Error;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "bcs", version, about = "Block compressed sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write signal_<j>.json training signals and manifest.json.
    GenData(Common),
    /// Learn the support correlation kernel from a dataset directory.
    LearnKernel {
        #[command(flatten)]
        common: Common,
        /// Dataset directory written by gen-data.
        #[arg(long)]
        data: PathBuf,
    },
    /// NMSE against SNR (snr_db,beta,method,nmse,mean_ms).
    BenchSnr(Common),
    /// NMSE against subsampling ratio (ratio,beta,method,nmse).
    BenchSubsampling(Common),
    /// Median wall-clock per beta and method (beta,method,wall_ms).
    Timing(Common),
    /// Coherence lower bound and OMP MSE bound against beta.
    Bounds(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; overrides --profile.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in config: desk, paper or small.
    #[arg(long, default_value = "desk")]
    profile: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Replaces every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn experiment(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path).map_err(Failure::config)?,
            None => ExperimentConfig::profile(&self.profile).map_err(Failure::config)?,
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
            cfg.sensor_seed = seed;
            cfg.signal.seed = seed;
        }
        Ok(cfg)
    }

    fn bounds(&self) -> Result<BoundsConfig, Failure> {
        match &self.config {
            Some(path) => BoundsConfig::load(path).map_err(Failure::config),
            None => Ok(BoundsConfig::default()),
        }
    }

    fn out_dir(&self) -> Result<&Path, Failure> {
        fs::create_dir_all(&self.out).map_err(|e| Failure::runtime(format!("{}: {e}", self.out.display())))?;
        Ok(&self.out)
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(e: Error) -> Self {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }

    fn runtime(message: String) -> Self {
        Failure { code: 1, message }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_config_error() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn write_sidecar(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("sidecar serializes");
    fs::write(path, text).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::GenData(common) => {
            let cfg = common.experiment()?;
            let files = write_dataset(&cfg.signal, cfg.dataset_size, common.out_dir()?)?;
            log::info!("wrote {} files to {}", files.len(), common.out.display());
        }
        Command::LearnKernel { common, data } => {
            let cfg = common.experiment()?;
            let dataset = load_dataset(&data)?;
            let (kernel, stats) = dataset.learn_kernel(cfg.kernel_threshold)?;
            let out = common.out_dir()?;
            let path = out.join("kernel.json");
            fs::write(&path, kernel.to_json()).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
            write_sidecar(&out.join("stats.json"), &json!(stats))?;
            log::info!(
                "kernel from {} signals, mean sparsity {}",
                stats.signals,
                stats.avg_sparsity
            );
        }
        Command::BenchSnr(common) => {
            let cfg = common.experiment()?;
            let prior = Prior::prepare(&cfg)?;
            let sweep = bench_snr(&cfg, &prior)?;
            let out = common.out_dir()?;
            sweep.write_csv(create(&out.join("bench_snr.csv"))?, "snr_db", true)?;
            write_sidecar(
                &out.join("bench_snr.json"),
                &json!({ "config": cfg, "m": cfg.measurement_count(cfg.subsampling)?, "prior": prior.stats }),
            )?;
        }
        Command::BenchSubsampling(common) => {
            let cfg = common.experiment()?;
            let prior = Prior::prepare(&cfg)?;
            let sweep = bench_subsampling(&cfg, &prior)?;
            let out = common.out_dir()?;
            sweep.write_csv(create(&out.join("bench_subsampling.csv"))?, "ratio", false)?;
            write_sidecar(
                &out.join("bench_subsampling.json"),
                &json!({ "config": cfg, "prior": prior.stats }),
            )?;
        }
        Command::Timing(common) => {
            let cfg = common.experiment()?;
            let prior = Prior::prepare(&cfg)?;
            let rows = timing(&cfg, &prior)?;
            let out = common.out_dir()?;
            write_timing_csv(&rows, create(&out.join("timing.csv"))?)?;
            write_sidecar(
                &out.join("timing.json"),
                &json!({ "config": cfg, "m": cfg.measurement_count(cfg.subsampling)?, "prior": prior.stats }),
            )?;
        }
        Command::Bounds(common) => {
            let cfg = common.bounds()?;
            let betas = cfg.betas();
            let points = bound_curve(&cfg.params(), &betas)?;
            let out = common.out_dir()?;
            write_bound_csv(&points, create(&out.join("bounds.csv"))?)?;
            let undefined: Vec<usize> = points
                .iter()
                .filter(|p| p.mse_upper_bound.is_none())
                .map(|p| p.beta)
                .collect();
            write_sidecar(
                &out.join("bounds.json"),
                &json!({ "config": cfg, "betas": betas, "undefined_betas": undefined }),
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
