//! Optimal covariance and capacity.
//!
//! [`solve`] runs the dispatch pipeline: zero-capacity and zero-forcing
//! handling, the single-user closed forms, the water-filling shortcut, and
//! finally the general dual search.

mod covariance;
mod dual;
mod kkt;
mod reduce;
mod roots;
mod waterfill;

use alloc::vec;
use alloc::vec::Vec;

pub use covariance::{covariance_for_duals, evaluate_duals, DualEvaluation};
pub use dual::{dual_search, DualPoint, DualSearchSettings, SearchStrategy};
pub use kkt::{kkt_residuals, kkt_residuals_with};
pub use waterfill::{waterfill, WaterfillingResult};

pub(crate) use reduce::{interference_sum_of, zero_forcing_users, ZeroForcing};
pub(crate) use roots::{find_root, RootSettings};

use crate::linalg::{HermitianMatrix, LinalgError, Tolerances};
use crate::oracle::OracleSettings;
use crate::problem::{
    ActiveConstraints, DualVariables, Method, ProblemError, ProblemInstance, Solution, FEAS_TOL,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("duals identically zero")]
    ZeroDuals,
    #[error("power multiplier zero is inconsistent: the interference null space is not contained in the null space of the main channel")]
    InconsistentZeroPowerMultiplier,
    #[error("multipliers must be finite and non-negative, one per user")]
    InvalidDuals,
    #[error("invalid solver settings")]
    InvalidSettings,
    #[error("users with zero cap must be removed by the zero-forcing reduction first")]
    ZeroCapNeedsReduction,
    #[error("dual search did not converge after {iterations} iterations (worst relative slack {worst_slack:e})")]
    NoConvergence {
        iterations: usize,
        worst_slack: f64,
        duals: DualVariables,
    },
    #[error("oracle requires a 2x2 instance, got dimension {0}")]
    OracleDimension(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveMethod {
    /// Closed forms where they apply, general dual search otherwise.
    #[default]
    Auto,
    /// Always the general dual search (zero-capacity and zero-forcing
    /// handling still apply).
    General,
    /// Projected-gradient oracle.
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub method: SolveMethod,
    pub tolerances: Tolerances,
    pub feas_tol: f64,
    pub dual: DualSearchSettings,
    pub oracle: OracleSettings,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            method: SolveMethod::Auto,
            tolerances: Tolerances::DEFAULT,
            feas_tol: FEAS_TOL,
            dual: DualSearchSettings::default(),
            oracle: OracleSettings::default(),
        }
    }
}

pub fn solve(instance: &ProblemInstance) -> Result<Solution, SolverError> {
    solve_with(instance, &SolverSettings::default())
}

pub fn solve_with(instance: &ProblemInstance, settings: &SolverSettings) -> Result<Solution, SolverError> {
    match settings.method {
        SolveMethod::Oracle => {
            Ok(crate::oracle::projected_gradient(instance, &settings.oracle)?.solution)
        }
        SolveMethod::Auto => dispatch(instance, settings, true),
        SolveMethod::General => dispatch(instance, settings, false),
    }
}

/// Water-filling on `W1` alone.
pub fn waterfilling(w1: &HermitianMatrix, total_power: f64) -> Result<Solution, SolverError> {
    let instance = ProblemInstance::new(w1.clone(), Vec::new(), total_power)?;
    waterfilling_solution(&instance, &SolverSettings::default(), Method::Waterfilling)
}

fn waterfilling_solution(
    instance: &ProblemInstance,
    settings: &SolverSettings,
    method: Method,
) -> Result<Solution, SolverError> {
    let wf = waterfill(instance.signal_gram(), instance.total_power(), &settings.tolerances)?;
    let duals = DualVariables {
        power: if wf.level > 0.0 { 1.0 / wf.level } else { 0.0 },
        interference: vec![0.0; instance.num_users()],
    };
    finalize(instance, wf.covariance, duals, method, settings)
}

fn dispatch(
    instance: &ProblemInstance,
    settings: &SolverSettings,
    closed_forms: bool,
) -> Result<Solution, SolverError> {
    let tol = &settings.tolerances;
    let zf = zero_forcing_users(instance, tol)?;
    if !zf.is_empty() {
        let s0 = interference_sum_of(instance, &zf);
        if s0.nullspace_contained_with(instance.signal_gram(), tol)? {
            return zero_capacity_solution(instance, &zf, settings);
        }
        let reduction = ZeroForcing::new(instance, &zf, tol)?
            .expect("a leaking null space is nonempty");
        let inner = dispatch(reduction.instance(), settings, closed_forms)?;
        let covariance = reduction.embed(&inner.covariance);
        let duals = reduction.lift_duals(&inner.duals, instance.num_users());
        return finalize(instance, covariance, duals, inner.method, settings);
    }

    let effective = instance
        .users()
        .iter()
        .filter(|u| !u.gram.is_zero())
        .count();
    if effective == 0 {
        return waterfilling_solution(instance, settings, Method::Waterfilling);
    }
    if closed_forms {
        if instance.num_users() == 1 {
            if let Some(s) = crate::regime::special_case(instance, settings)? {
                return Ok(s);
            }
        }
        let wf = waterfill(instance.signal_gram(), instance.total_power(), tol)?;
        if instance
            .users()
            .iter()
            .all(|u| u.gram.trace_product(&wf.covariance) <= u.cap)
        {
            return waterfilling_solution(instance, settings, Method::Waterfilling);
        }
    }
    let point = dual_search(instance, &settings.dual, tol)?;
    finalize(
        instance,
        point.evaluation.covariance,
        point.duals,
        Method::General,
        settings,
    )
}

/// `R = 0` with multipliers certifying it: `mu2k = lambda_max(S0^{+1/2} W1
/// S0^{+1/2})` on the zero-cap users, where `S0` is their interference sum.
fn zero_capacity_solution(
    instance: &ProblemInstance,
    zf: &[usize],
    settings: &SolverSettings,
) -> Result<Solution, SolverError> {
    let tol = &settings.tolerances;
    let s0 = interference_sum_of(instance, zf);
    let root = s0.pinv_with(tol)?.sqrt_psd_with(tol)?;
    let level = instance
        .signal_gram()
        .congruence(root.as_matrix())
        .max_eigenvalue()?
        .max(0.0);
    let mut interference = vec![0.0; instance.num_users()];
    for &k in zf {
        interference[k] = level;
    }
    let duals = DualVariables {
        power: 0.0,
        interference,
    };
    finalize(
        instance,
        HermitianMatrix::zeros(instance.dim()),
        duals,
        Method::ZeroCapacity,
        settings,
    )
}

/// Assembles a [`Solution`]: trims roundoff-level constraint excess by
/// scaling, evaluates the objective, audits KKT and flags active
/// constraints.
pub(crate) fn finalize(
    instance: &ProblemInstance,
    covariance: HermitianMatrix,
    duals: DualVariables,
    method: Method,
    settings: &SolverSettings,
) -> Result<Solution, SolverError> {
    let mut shrink: f64 = 1.0;
    let trace = covariance.trace();
    if trace > instance.total_power() {
        shrink = shrink.min(instance.total_power() / trace);
    }
    for user in instance.users() {
        let p = user.gram.trace_product(&covariance);
        if user.cap > 0.0 && p > user.cap {
            shrink = shrink.min(user.cap / p);
        }
    }
    let covariance = if shrink < 1.0 {
        covariance.scale(shrink)
    } else {
        covariance
    };
    let capacity_nats = instance.mutual_information(&covariance)?;
    let kkt = kkt_residuals_with(instance, &covariance, &duals, &settings.tolerances)?;
    let feas = settings.feas_tol;
    let active = ActiveConstraints {
        power: duals.power > 0.0 && (covariance.trace() - instance.total_power()).abs() <= feas,
        interference: instance
            .users()
            .iter()
            .zip(&duals.interference)
            .map(|(u, &mu)| mu > 0.0 && (u.gram.trace_product(&covariance) - u.cap).abs() <= feas)
            .collect(),
    };
    Ok(Solution {
        covariance,
        capacity_nats,
        duals,
        active,
        kkt,
        method,
    })
}
