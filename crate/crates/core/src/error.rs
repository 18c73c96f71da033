use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("lattice dimensions must be positive, got {rows}x{cols}")]
    ZeroDimension { rows: usize, cols: usize },
    #[error("expected {expected} cells, found {found}")]
    CellCount { expected: usize, found: usize },
    #[error("position ({row},{col}) outside {rows}x{cols} lattice")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("cell ({row},{col}) is already occupied")]
    Occupied { row: usize, col: usize },
    #[error("state code out of range for lattice")]
    CodeRange,
    #[error("configuration text, line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("switching probability must lie in [0,1), got {0}")]
    Probability(f64),
    #[error("draw sequence exhausted")]
    DrawsExhausted,
    #[error("full steps start from the row phase")]
    NotRowPhase,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("configuration dimensions do not match the ledger")]
    Dimensions,
    #[error("ledger does not describe the `before` configuration")]
    OutOfSync,
    #[error("particle at ({row},{col}) changed in a way no half-step allows")]
    IllegalMove { row: usize, col: usize },
    #[error("two particles would occupy ({row},{col})")]
    Collision { row: usize, col: usize },
    #[error("`after` is not the half-step image of `before`")]
    Mismatch,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumberError {
    #[error("gcd is defined here for positive arguments only, got ({0}, {1})")]
    NonPositive(i64, i64),
    #[error("coefficients a and b must be nonzero")]
    ZeroCoefficient,
    #[error("position ({row},{col}) outside {rows}x{cols} lattice")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("{cells} cells exceed the enumeration cap of {cap}")]
    CapExceeded { cells: usize, cap: usize },
    #[error("{particles} particles exceed the flip-subset cap of {cap}")]
    TooManyParticles { particles: usize, cap: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}
