//! Reproducible benchmark harness: configs, datasets and Monte-Carlo sweeps.
//!
//! Every random draw is seeded from the config, so NMSE columns are
//! bit-identical across reruns; timing columns are not.

mod config;
mod dataset;
mod runner;

pub use config::{BoundsConfig, ExperimentConfig, SolverSettings};
pub use dataset::{
    load_dataset, signal_file_name, signal_seed, training_set, write_dataset, Dataset, DatasetManifest, MANIFEST,
};
pub use runner::{
    bench_snr, bench_subsampling, timing, write_timing_csv, Method, Prior, SummaryRow, Sweep, TimedMethod, TimingRow,
    TrialRecord,
};
