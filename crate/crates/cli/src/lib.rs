//! Batch experiment runner for sparse PCA, sparse CCA and the nonlinear test
//! problem: runs the classical and damped multiplier updates across seeds
//! and writes per-run traces plus seed-averaged tables as CSV.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{Arm, ArmSelection, Dims, ExperimentConfig, Family, Overrides};
pub use experiment::{run_experiment, AggregateRow, CellOutcome, Summary};
pub use output::{emit_csv, format_sig, Table};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Solver(#[from] rial_core::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
