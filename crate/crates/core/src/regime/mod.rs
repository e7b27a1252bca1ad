//! Structural classification of an instance and the single-user closed
//! forms.

mod special;

#[allow(unused_imports)] // inherent float methods need std
use num_traits::Float;
use alloc::vec::Vec;

pub use special::{
    interference_limited_parameters, solve_full_rank_interference_limited, solve_rank1_channel,
    solve_rank1_interferer, BeamformingCase, InterferenceLimitedParameters, Rank1ChannelSolution,
};
pub(crate) use special::special_case;

use crate::linalg::{CVector, Tolerances};
use crate::problem::{ProblemInstance, Solution};
use crate::solver::SolverError;

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    /// Capacity grows without bound in `P_T`.
    pub unbounded_growth: bool,
    pub zero_capacity: bool,
    /// Necessary condition for a slack power budget at the optimum.
    pub tpc_redundancy_possible: bool,
    /// `rank(W1) > rank(sum_k W2k)`.
    pub favorable_rank: bool,
    /// Present only when growth is bounded.
    pub capacity_upper_bound_nats: Option<f64>,
    /// Unit `u` with `W2k u = 0` for all `k` and `W1 u != 0`.
    pub certifying_vector: Option<CVector>,
    /// Users with a zero cap.
    pub zero_cap_users: Vec<usize>,
}

pub fn classify(instance: &ProblemInstance) -> Result<RegimeReport, SolverError> {
    classify_with(instance, &Tolerances::DEFAULT)
}

pub fn classify_with(instance: &ProblemInstance, tol: &Tolerances) -> Result<RegimeReport, SolverError> {
    let w1 = instance.signal_gram();
    let sum = instance.interference_sum();
    let bounded = sum.nullspace_contained_with(w1, tol)?;

    let zero_cap_users: Vec<usize> = (0..instance.num_users())
        .filter(|&k| instance.users()[k].cap == 0.0)
        .collect();
    let s0 = crate::solver::interference_sum_of(instance, &zero_cap_users);
    let zero_capacity = s0.nullspace_contained_with(w1, tol)?;

    let favorable_rank = w1.rank_with(tol)? > sum.rank_with(tol)?;

    let sum_eig = sum.eigh()?;
    let w1_max = w1.max_eigenvalue()?.max(0.0);
    let (capacity_upper_bound_nats, certifying_vector) = if bounded {
        let cutoff = sum_eig.rank_cutoff(tol);
        let smallest = sum_eig
            .eigenvalues
            .iter()
            .copied()
            .filter(|&l| l > cutoff)
            .fold(f64::INFINITY, f64::min);
        let total_cap: f64 = instance.users().iter().map(|u| u.cap).sum();
        let bound = if smallest.is_finite() {
            instance.dim() as f64 * (w1_max * total_cap / smallest).ln_1p()
        } else {
            // no interference at all and W1 = 0
            0.0
        };
        (Some(bound), None)
    } else {
        let null = sum_eig.null_basis(sum_eig.rank_cutoff(tol));
        let restricted = w1.congruence(&null.adjoint());
        let top = restricted.eigh()?.eigenvector(0);
        let u = &null * top;
        let norm = u.norm();
        (None, Some(u.unscale(norm)))
    };

    Ok(RegimeReport {
        unbounded_growth: !bounded,
        zero_capacity,
        tpc_redundancy_possible: bounded,
        favorable_rank,
        capacity_upper_bound_nats,
        certifying_vector,
        zero_cap_users,
    })
}

/// `rank(R) <= rank(W1)`.
pub fn check_rank_bound(instance: &ProblemInstance, solution: &Solution) -> Result<bool, SolverError> {
    check_rank_bound_with(instance, solution, &Tolerances::DEFAULT)
}

pub fn check_rank_bound_with(
    instance: &ProblemInstance,
    solution: &Solution,
    tol: &Tolerances,
) -> Result<bool, SolverError> {
    Ok(solution.covariance.rank_with(tol)? <= instance.signal_gram().rank_with(tol)?)
}
