use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bml",
    version,
    about = "Two-species BML traffic on a torus with type switching"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run the stochastic dynamics from a file or a seeded random placement.
    Simulate,
    /// Enumerate every state of a small lattice and list its cycles.
    Spectrum,
    /// Check the gcd condition for free movement exhaustively for one lattice size.
    Check,
    /// Classify one state as free movement, jam or other.
    Classify,
    /// Solve a·x + b·y + c = 0 over the integers.
    Diophantine(DiophantineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Args)]
pub struct DiophantineArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub a: i64,
    #[arg(long, allow_negative_numbers = true)]
    pub b: i64,
    #[arg(long, allow_negative_numbers = true)]
    pub c: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum OutputFormat {
    Json,
    Csv,
    #[default]
    Text,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Number of rows.
    #[arg(long, global = true)]
    pub n1: Option<usize>,
    /// Number of columns.
    #[arg(long, global = true)]
    pub n2: Option<usize>,
    /// Per-step type switching probability, in [0, 1).
    #[arg(long, global = true, default_value_t = 0.0)]
    pub q: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Full time steps to simulate.
    #[arg(long, global = true, default_value_t = 10)]
    pub steps: u64,
    /// Type-one particles for random placement.
    #[arg(long, global = true, default_value_t = 0)]
    pub m1: usize,
    /// Type-two particles for random placement.
    #[arg(long, global = true, default_value_t = 0)]
    pub m2: usize,
    /// Configuration file: "N1 N2" header, then rows of '.', '1', '2'.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    /// Include every configuration of the run in the report.
    #[arg(long, global = true)]
    pub frames: bool,
    /// Directory for exported files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for spectrum enumeration.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}
