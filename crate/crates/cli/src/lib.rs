//! Configuration-driven runner for the halfcmc constructions, with OBJ, JSON
//! and CSV exporters and a catalog of example configurations.

pub mod catalog;
pub mod config;
pub mod export;
pub mod run;

pub use catalog::{examples_catalog, find_preset, Preset};
pub use config::{Command, RunConfig};
pub use export::{export_obj, MeshExport};
pub use run::{run, run_in, Outcome};

use halfcmc::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed input: {0}")]
    Input(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numeric(Error),
}

impl CliError {
    /// Sorts core errors into configuration and numerical failures.
    pub fn from_core(e: Error) -> Self {
        match e {
            Error::InvalidGrid(_) | Error::Domain(_) | Error::Format(_) | Error::Json(_) => {
                CliError::Config(e.to_string())
            }
            Error::NotOnHyperboloid { .. } | Error::NotAnIsometry { .. } => CliError::Config(e.to_string()),
            e => CliError::Numeric(e),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) | CliError::Io(_) => run::EXIT_CONFIG,
            CliError::Numeric(_) => run::EXIT_NUMERIC,
        }
    }
}
