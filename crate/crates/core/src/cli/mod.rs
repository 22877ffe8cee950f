//! Command-line front end: configuration, orchestration and serialization.

mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::{run_command, Command, RunContext};
pub use config::{EnergySpec, ExperimentConfig};

use crate::analysis::AnalysisError;
use crate::discretize::GridError;
use crate::eigensolve::SolveError;
use crate::montecarlo::MonteCarloError;
use crate::potential::PotentialError;
use crate::thirring::ThirringError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 0 success, 1 verification failure, 2 config or I/O error,
    /// 3 precondition, 4 solver failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Precondition(_) => 3,
            CliError::Solver(_) => 4,
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::TooLarge { .. } | SolveError::InvalidRequest(_) => CliError::Precondition(e.to_string()),
            SolveError::UnknownSolver { .. } => CliError::Config(e.to_string()),
            SolveError::NotConverged { .. } => CliError::Solver(e.to_string()),
        }
    }
}

impl From<MonteCarloError> for CliError {
    fn from(e: MonteCarloError) -> Self {
        match e {
            MonteCarloError::Solver { .. } => CliError::Solver(e.to_string()),
            MonteCarloError::ChainViolation { .. } => CliError::Verification(e.to_string()),
            MonteCarloError::UnsortedEnergies | MonteCarloError::NoSamples => CliError::Config(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<ThirringError> for CliError {
    fn from(e: ThirringError) -> Self {
        match e {
            ThirringError::Solve(inner) => inner.into(),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<PotentialError> for CliError {
    fn from(e: PotentialError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        CliError::Precondition(e.to_string())
    }
}
