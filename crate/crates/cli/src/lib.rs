//! Command-line front end for near-cloak decay-rate experiments.

pub mod commands;
pub mod config;

use cloakbench_core::cloakmap::CloakError;
use cloakbench_core::experiments::ExperimentError;
use cloakbench_core::mie::MieError;
use thiserror::Error;

pub use config::ExperimentConfig;

/// Process exit codes. These are a stable interface.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const INVALID_EXPONENTS: i32 = 2;
    pub const SOLVER: i32 = 3;
    pub const SWEEP_FAILED: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid exponents: {0}")]
    InvalidExponents(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => exit::CONFIG,
            CliError::InvalidExponents(_) => exit::INVALID_EXPONENTS,
            CliError::Solver(_) => exit::SOLVER,
        }
    }
}

impl From<MieError> for CliError {
    fn from(e: MieError) -> Self {
        CliError::Solver(format!("mie: {e}"))
    }
}

impl From<CloakError> for CliError {
    fn from(e: CloakError) -> Self {
        match e {
            CloakError::InvalidExponents { .. } => CliError::InvalidExponents(format!("cloakmap: {e}")),
            CloakError::Sphere(m) => m.into(),
            other => CliError::Config(format!("cloakmap: {other}")),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Cloak(c) => c.into(),
            ExperimentError::Solver(m) => m.into(),
            other => CliError::Config(format!("experiments: {other}")),
        }
    }
}
