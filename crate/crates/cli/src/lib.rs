//! Command-line front end for `torus-bml`.
//!
//! Every command renders its report into a [`Output`] instead of printing,
//! so the binary stays a thin shell around [`run`].

pub mod args;
pub mod commands;
mod simulate;
#[cfg(test)]
mod tests;

use std::path::PathBuf;

use thiserror::Error;
use torus_bml::{AnalysisError, LatticeError, NumberError};

pub use args::{Cli, Command, CommonArgs, DiophantineArgs, OutputFormat};
pub use commands::run;
pub use simulate::{SimulationReport, StepRecord};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    CapExceeded(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status: 1 usage, 2 size cap, 3 internal inconsistency.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::CapExceeded(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<NumberError> for CliError {
    fn from(e: NumberError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::CapExceeded { .. } | AnalysisError::TooManyParticles { .. } => {
                CliError::CapExceeded(e.to_string())
            }
            AnalysisError::Lattice(l) => l.into(),
            AnalysisError::Ledger(_) | AnalysisError::Internal(_) => {
                CliError::Internal(e.to_string())
            }
        }
    }
}

/// Validated run parameters shared by all commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub q: f64,
    pub seed: u64,
    pub steps: u64,
    pub m1: usize,
    pub m2: usize,
    pub input: Option<PathBuf>,
    pub format: OutputFormat,
    pub frames: bool,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let c = cli.common;
        if !(0.0..1.0).contains(&c.q) {
            return Err(CliError::Usage(format!(
                "--q must lie in [0,1), got {}",
                c.q
            )));
        }
        if c.n1 == Some(0) || c.n2 == Some(0) {
            return Err(CliError::Usage("--n1 and --n2 must be at least 1".into()));
        }
        Ok(Self {
            command: cli.command,
            n1: c.n1,
            n2: c.n2,
            q: c.q,
            seed: c.seed,
            steps: c.steps,
            m1: c.m1,
            m2: c.m2,
            input: c.input,
            format: c.format,
            frames: c.frames,
            out: c.out,
            workers: c.workers,
        })
    }

    /// Dimensions from `--n1/--n2`, required when no input file supplies them.
    pub fn dims(&self) -> Result<(usize, usize), CliError> {
        match (self.n1, self.n2) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(CliError::Usage("--n1 and --n2 are required".into())),
        }
    }
}

/// What a command produced: text for stdout plus any files it wrote.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub files: Vec<PathBuf>,
}
