//! Batch front-end for the Polyak minorant method: configured runs with
//! memory sweeps, a projection self-check, and instance generation.

pub mod check;
pub mod config;
pub mod gen;
pub mod output;
pub mod plot;
pub mod run;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 1,
        }
    }
}
