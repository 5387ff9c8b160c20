//! Experiment runner behind the `mec-offload` binary: configuration,
//! manifests, the train / eval / front / baseline / check commands and
//! their CSV and SVG artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod plot;

pub use commands::{run_baseline, run_check, run_eval, run_front, run_train, FrontReport, Scheme};
pub use config::{ExperimentConfig, Mode};
pub use error::CliError;
pub use manifest::RunManifest;

/// Environment variable naming the directory relative output paths live in.
pub const OUTPUT_ROOT_VAR: &str = "MEC_OUTPUT_ROOT";
