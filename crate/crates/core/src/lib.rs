//! Capacity of Gaussian MIMO channels under a total power budget and
//! per-receiver interference caps.
//!
//! The core is `no_std` with `alloc`. File formats and the command line live
//! in the `sharecap` crate.

#![no_std]

extern crate alloc;

pub mod linalg;
pub mod oracle;
pub mod problem;
#[cfg(feature = "random")]
pub mod random;
pub mod regime;
pub mod solver;

pub use linalg::{CMatrix, CVector, EigenDecomposition, HermitianMatrix, LinalgError, Tolerances, C64};
pub use oracle::{compare, ComparisonReport, OracleRun, OracleSettings};
pub use problem::{
    gram_from_channel, ActiveConstraints, Constraint, DualVariables, FeasibilityReport,
    KktResiduals, Method, ProblemError, ProblemInstance, Solution, User, Violation, FEAS_TOL,
};
pub use regime::{classify, RegimeReport};
pub use solver::{solve, solve_with, SolveMethod, SolverError, SolverSettings};
