//! Batch harness around `rwrp-core`: a thread-pool executor, experiment
//! configuration, the `q_d` cache, CSV and JSON output, and the commands
//! behind the `rwrp` binary.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pool;

pub use config::ExperimentConfig;
pub use error::LabError;
pub use pool::RayonExecutor;
