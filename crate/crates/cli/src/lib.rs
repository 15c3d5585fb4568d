//! Experiment harness for the `semidev` library: configuration, synthetic
//! data, run orchestration and plain-text artifacts.

pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod synthetic;

pub use config::{Algorithm, DataSource, ExperimentConfig, Settings};
pub use error::CliError;
pub use synthetic::{generate_synthetic, SyntheticSpec};
