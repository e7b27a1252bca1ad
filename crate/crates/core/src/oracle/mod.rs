//! Independent numerical maximizers of `ln det(I + W1 R)` over the feasible
//! set, used to referee the closed-form solver.

mod compare;
mod grid;
mod interior;
mod projected;

pub use compare::{compare, ComparisonReport};
pub use grid::bruteforce_2x2;
pub use interior::interior_point;
pub use projected::projected_gradient;

use crate::linalg::{CMatrix, HermitianMatrix, Tolerances};
use crate::problem::{ProblemInstance, Solution};
use crate::solver::SolverError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub max_iters: usize,
    /// Initial step length of the gradient iteration.
    pub step0: f64,
    /// Stop once the projected-gradient step and the objective improvement
    /// over a window both fall below this, relative to the objective.
    pub tol: f64,
    /// Newton iterations per projection onto the feasible set.
    pub projection_iters: usize,
    /// Points per axis of the 2x2 brute-force grid.
    pub grid_points: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            step0: 1.0,
            tol: 1e-12,
            projection_iters: 50,
            grid_points: 50,
        }
    }
}

impl OracleSettings {
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = self.max_iters > 0
            && self.step0 > 0.0
            && self.tol > 0.0
            && self.projection_iters > 0
            && self.grid_points > 1;
        if ok {
            Ok(())
        } else {
            Err(SolverError::InvalidSettings)
        }
    }
}

/// Oracle result. The multipliers in `solution` are not estimated and are
/// reported as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub solution: Solution,
    pub iterations: usize,
    pub converged: bool,
    /// Objective gain over the last stretch of iterations.
    pub last_improvement: f64,
}

/// Projector onto the common null space of the zero-cap users, or `None`
/// when there are none.
fn zero_cap_projector(instance: &ProblemInstance, tol: &Tolerances) -> Result<Option<CMatrix>, SolverError> {
    let m = instance.dim();
    let mut sum = HermitianMatrix::zeros(m);
    let mut any = false;
    for user in instance.users() {
        if user.cap == 0.0 {
            sum = &sum + &user.gram;
            any = true;
        }
    }
    if !any {
        return Ok(None);
    }
    let eig = sum.eigh()?;
    let null = eig.null_basis(eig.rank_cutoff(tol));
    Ok(Some(&null * null.adjoint()))
}

/// Scales `r` toward zero until every trace constraint holds. Zero-cap users
/// are assumed already handled by projection.
fn radial_scale(instance: &ProblemInstance, r: &HermitianMatrix) -> f64 {
    let mut s: f64 = 1.0;
    let trace = r.trace();
    if trace > instance.total_power() {
        s = s.min(instance.total_power() / trace);
    }
    for user in instance.users() {
        if user.cap > 0.0 {
            let p = user.gram.trace_product(r);
            if p > user.cap {
                s = s.min(user.cap / p);
            }
        }
    }
    s
}

#[cfg(test)]
mod tests;
