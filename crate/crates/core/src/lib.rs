//! Exact analysis of a two-species Biham–Middleton–Levine traffic model on an
//! `N1 × N2` torus in which particles may switch type between steps.
//!
//! - [`lattice`]: configurations, half-steps, the full step and type switching.
//! - [`numtheory`]: linear Diophantine equations and delay witnesses.
//! - [`algebra`]: the free-movement sets and classifiers.
//! - [`spectrum`]: exhaustive cycle enumeration for small lattices.

pub mod algebra;
pub mod error;
pub mod lattice;
pub mod numtheory;
pub mod spectrum;

pub use algebra::{
    classify_deterministic, classify_stochastic, in_set_b, is_mixed, successors_stochastic,
    sweep_deterministic, sweep_stochastic, ClassificationVerdict, Evidence, FlipSupport, Limits,
    SweepReport, VerdictKind,
};
pub use error::{AnalysisError, LatticeError, LedgerError, NumberError};
pub use lattice::{
    step_f, step_half, step_u, step_y, Cell, Configuration, FlipParams, FlipProcess,
    ParticleLedger, Phase, Pos, SystemState,
};
pub use numtheory::{
    find_delay_witness, gcd, gcd_verdict, solve_diophantine, DelayWitness, DiophantineProblem,
    DiophantineSolution, GcdVerdict,
};
pub use spectrum::{build_spectrum, build_spectrum_with, Spectrum, SpectrumExport, StateIndex};
