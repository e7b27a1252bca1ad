use alloc::vec::Vec;

use crate::linalg::{HermitianMatrix, LinalgError, Tolerances};
use crate::problem::{DualVariables, KktResiduals, ProblemInstance};

use super::reduce::ZeroForcing;
use super::SolverError;

/// Optimality audit of `(R, mu)`.
///
/// `M = mu1 I + sum_k mu2k W2k - W1^{1/2} (I + W1^{1/2} R W1^{1/2})^{-1} W1^{1/2}`
/// must be PSD with `M R = 0`. Infinite interference multipliers mark
/// zero-forcing constraints; the audit then runs on the problem restricted to
/// the common null space of those users, where finite multipliers exist.
pub fn kkt_residuals(
    instance: &ProblemInstance,
    covariance: &HermitianMatrix,
    duals: &DualVariables,
) -> Result<KktResiduals, SolverError> {
    kkt_residuals_with(instance, covariance, duals, &Tolerances::DEFAULT)
}

pub fn kkt_residuals_with(
    instance: &ProblemInstance,
    covariance: &HermitianMatrix,
    duals: &DualVariables,
    tol: &Tolerances,
) -> Result<KktResiduals, SolverError> {
    if duals.interference.len() != instance.num_users() || covariance.dim() != instance.dim() {
        return Err(SolverError::InvalidDuals);
    }
    let zf: Vec<usize> = (0..instance.num_users())
        .filter(|&k| duals.interference[k] == f64::INFINITY)
        .collect();
    if zf.is_empty() {
        return finite_residuals(instance, covariance, duals, tol);
    }
    let full_primal = primal_excess(instance, covariance)?;
    let Some(reduction) = ZeroForcing::new(instance, &zf, tol)? else {
        // the zero-forcing users span everything: only R = 0 is feasible and
        // any large enough multiplier certifies it
        return Ok(KktResiduals {
            stationarity: 0.0,
            comp_slack_power: (duals.power * (instance.total_power() - covariance.trace())).abs()
                / instance.total_power().max(1.0),
            comp_slack_interference: alloc::vec![0.0; instance.num_users()],
            dual_feas: 0.0,
            primal_feas: full_primal,
        });
    };
    let reduced_r = reduction.restrict(covariance);
    let reduced_duals = reduction.restrict_duals(duals);
    let inner = finite_residuals(reduction.instance(), &reduced_r, &reduced_duals, tol)?;
    let mut comp = alloc::vec![0.0; instance.num_users()];
    for (pos, &k) in reduction.kept().iter().enumerate() {
        comp[k] = inner.comp_slack_interference[pos];
    }
    Ok(KktResiduals {
        stationarity: inner.stationarity,
        comp_slack_power: inner.comp_slack_power,
        comp_slack_interference: comp,
        dual_feas: inner.dual_feas,
        primal_feas: inner.primal_feas.max(full_primal),
    })
}

fn finite_residuals(
    instance: &ProblemInstance,
    r: &HermitianMatrix,
    duals: &DualVariables,
    tol: &Tolerances,
) -> Result<KktResiduals, SolverError> {
    let m = instance.dim();
    let q = instance.signal_gram().sqrt_psd_with(tol)?;
    let inner = &HermitianMatrix::identity(m) + &r.congruence(q.as_matrix());
    let Some(inv) = inner.inverse_pd() else {
        return Err(LinalgError::NotPsd {
            min_eigenvalue: inner.min_eigenvalue()?,
        }
        .into());
    };
    let gradient = inv.congruence(q.as_matrix());
    let mut s = HermitianMatrix::identity(m).scale(duals.power);
    for (user, &mu) in instance.users().iter().zip(&duals.interference) {
        if mu > 0.0 {
            s = &s + &user.gram.scale(mu);
        }
    }
    let mm = &s - &gradient;
    let product = mm.as_matrix() * r.as_matrix();
    let stationarity = product.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    let dual_feas = mm.min_eigenvalue()?.min(0.0);
    let comp_slack_power =
        (duals.power * (instance.total_power() - r.trace())).abs() / instance.total_power().max(1.0);
    let comp_slack_interference = instance
        .users()
        .iter()
        .zip(&duals.interference)
        .map(|(u, &mu)| {
            if mu == 0.0 {
                0.0
            } else {
                (mu * (u.cap - u.gram.trace_product(r))).abs() / u.cap.max(1.0)
            }
        })
        .collect();
    Ok(KktResiduals {
        stationarity,
        comp_slack_power,
        comp_slack_interference,
        dual_feas,
        primal_feas: primal_excess(instance, r)?,
    })
}

/// Largest violation over the trace constraints and the PSD cone.
pub(crate) fn primal_excess(
    instance: &ProblemInstance,
    r: &HermitianMatrix,
) -> Result<f64, SolverError> {
    let mut excess = (r.trace() - instance.total_power()).max(0.0);
    for user in instance.users() {
        excess = excess.max(user.gram.trace_product(r) - user.cap);
    }
    Ok(excess.max(-r.min_eigenvalue()?))
}
