use crate::problem::{ProblemInstance, Solution};
use crate::solver::SolverError;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// `capacity_a - capacity_b`, in nats.
    pub capacity_gap: f64,
    /// Largest entrywise covariance difference. Informational only: optima
    /// need not be unique.
    pub max_covariance_diff: f64,
    pub feasible_a: bool,
    pub feasible_b: bool,
    pub tol: f64,
    /// `|capacity_gap| <= tol` and both feasible.
    pub pass: bool,
}

pub fn compare(
    instance: &ProblemInstance,
    a: &Solution,
    b: &Solution,
    tol: f64,
) -> Result<ComparisonReport, SolverError> {
    let capacity_gap = a.capacity_nats - b.capacity_nats;
    let feasible_a = instance.check_feasibility(&a.covariance)?.is_feasible();
    let feasible_b = instance.check_feasibility(&b.covariance)?.is_feasible();
    Ok(ComparisonReport {
        capacity_gap,
        max_covariance_diff: a.covariance.max_abs_diff(&b.covariance),
        feasible_a,
        feasible_b,
        tol,
        pass: capacity_gap.abs() <= tol && feasible_a && feasible_b,
    })
}
