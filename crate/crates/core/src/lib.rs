//! Block compressed sensing for high-dimensional sparse tensors.
//!
//! The signal `x` (a d-order [`Tensor`]) is split into `beta` equal blocks by a
//! [`PartitionMap`] and each block is measured by its own small Gaussian matrix,
//! `y_b = A_b z_b + v_b`. The crate provides:
//!
//! * [`sensing`]: block-diagonal sensors stored block-wise (`m n / beta` scalars)
//! * [`analysis`]: mutual coherence, Welch and block-Welch bounds, the OMP MSE bound
//! * [`kernel`]: learning the 3^d support correlation kernel from example signals
//! * [`recovery`]: OMP, logit-weighted OMP, standard parallel BCS and data-driven
//!   serial BCS, where each solved block sharpens the support prior of the rest
//! * [`signals`]: clustered-sparse test signals and NMSE
//! * [`experiment`]: the reproducible benchmark harness behind the `bcs` CLI

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod kernel;
pub mod matrix;
pub mod partition;
pub mod recovery;
pub mod scalar;
pub mod seed;
pub mod sensing;
pub mod signals;
pub mod tensor;

pub use error::{Error, Result};
pub use kernel::{learn_kernel, CorrelationKernel, DatasetStats};
pub use matrix::{LinearOperator, Matrix};
pub use partition::{PartitionMap, PartitionSpec, Strategy};
pub use recovery::{lw_omp, omp, parallel_bcs, serial_bcs, RecoveryConfig, RecoveryResult, SupportPrior};
pub use scalar::{Field, Scalar};
pub use sensing::{draw_sensor, measure, BlockSensor, Ensemble, MeasurementSet, SensorHeader};
pub use tensor::{convolve, extract_support, flat_index, multi_index, AnyTensor, ConvMode, Shape, SupportSet, Tensor};
