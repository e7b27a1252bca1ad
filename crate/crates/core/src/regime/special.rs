//! Closed-form optima for a single interfered user.
//!
//! Each solver returns `None` when its preconditions fail, when the instance
//! sits within a small margin of a strict window edge, or when the candidate
//! fails the post-hoc feasibility and optimality audit. The caller then falls
//! through to the general dual search.

#[allow(unused_imports)] // inherent float methods need std
use num_traits::Float;
use alloc::vec;

use crate::linalg::{CVector, HermitianMatrix, Tolerances, C64};
use crate::problem::{DualVariables, Method, ProblemInstance, Solution};
use crate::solver::{finalize, find_root, RootSettings, SolverError, SolverSettings};

/// Relative margin kept from strict window edges.
const EDGE_MARGIN: f64 = 1e-9;
/// Audit bound on the KKT residuals of a closed-form candidate.
const AUDIT_TOL: f64 = 1e-8;

fn margin(x: f64) -> f64 {
    EDGE_MARGIN * x.abs().max(1.0)
}

pub(crate) fn special_case(
    instance: &ProblemInstance,
    settings: &SolverSettings,
) -> Result<Option<Solution>, SolverError> {
    if let Some(s) = full_rank_interference_limited(instance, settings)? {
        return Ok(Some(s));
    }
    if let Some(s) = rank1_interferer(instance, settings)? {
        return Ok(Some(s));
    }
    Ok(rank1_channel(instance, settings)?.map(|b| b.solution))
}

fn audited(
    instance: &ProblemInstance,
    solution: Solution,
    settings: &SolverSettings,
) -> Result<Option<Solution>, SolverError> {
    let scale = instance.signal_gram().max_eigenvalue()?.max(1.0);
    let ok = solution.kkt.primal_feas <= settings.feas_tol && solution.kkt.worst() <= AUDIT_TOL * scale;
    Ok(ok.then_some(solution))
}

fn single_user(instance: &ProblemInstance) -> Option<&HermitianMatrix> {
    match instance.users() {
        [user] => Some(&user.gram),
        _ => None,
    }
}

/// Quantities of the full-rank, interference-limited closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceLimitedParameters {
    /// Strict lower edge of the cap window.
    pub lower: f64,
    /// Inclusive upper edge of the cap window.
    pub upper: f64,
    /// `1 / mu2 = (P_I + tr(W2 W1^{-1})) / m`.
    pub inverse_multiplier: f64,
    /// `m ln(1/mu2) + ln|W1| - ln|W2|`.
    pub capacity_formula_nats: f64,
}

/// Window edges and closed-form values for one user with `W1`, `W2` both
/// full rank; `None` when either is singular.
pub fn interference_limited_parameters(
    instance: &ProblemInstance,
) -> Result<Option<InterferenceLimitedParameters>, SolverError> {
    let Some(w2) = single_user(instance) else {
        return Ok(None);
    };
    let w1 = instance.signal_gram();
    let m = instance.dim();
    let tol = Tolerances::DEFAULT;
    if w1.rank_with(&tol)? < m || w2.rank_with(&tol)? < m {
        return Ok(None);
    }
    let (Some(w1_inv), Some(w2_inv)) = (w1.inverse_pd(), w2.inverse_pd()) else {
        return Ok(None);
    };
    let (Some(ld1), Some(ld2)) = (w1.log_det_pd(), w2.log_det_pd()) else {
        return Ok(None);
    };
    let cross = w2.trace_product(&w1_inv);
    let w1_inv_root = w1_inv.sqrt_psd()?;
    let peak = w2.congruence(w1_inv_root.as_matrix()).max_eigenvalue()?;
    let mf = m as f64;
    let lower = mf * peak - cross;
    let upper = mf / w2_inv.trace() * (instance.total_power() + w1_inv.trace()) - cross;
    let inverse_multiplier = (instance.users()[0].cap + cross) / mf;
    Ok(Some(InterferenceLimitedParameters {
        lower,
        upper,
        inverse_multiplier,
        capacity_formula_nats: mf * inverse_multiplier.ln() + ld1 - ld2,
    }))
}

/// One user, `W1` and `W2` full rank, cap strictly inside the window where
/// the power budget is slack: `R = (1/mu2) W2^{-1} - W1^{-1}`.
pub fn solve_full_rank_interference_limited(
    instance: &ProblemInstance,
) -> Result<Option<Solution>, SolverError> {
    full_rank_interference_limited(instance, &SolverSettings::default())
}

fn full_rank_interference_limited(
    instance: &ProblemInstance,
    settings: &SolverSettings,
) -> Result<Option<Solution>, SolverError> {
    let Some(p) = interference_limited_parameters(instance)? else {
        return Ok(None);
    };
    let cap = instance.users()[0].cap;
    if !(cap > p.lower + margin(p.lower) && cap <= p.upper) {
        return Ok(None);
    }
    let w1_inv = instance.signal_gram().inverse_pd().expect("checked above");
    let w2_inv = instance.users()[0].gram.inverse_pd().expect("checked above");
    let r = &w2_inv.scale(p.inverse_multiplier) - &w1_inv;
    if r.min_eigenvalue()? <= 0.0 {
        return Ok(None);
    }
    let duals = DualVariables {
        power: 0.0,
        interference: vec![1.0 / p.inverse_multiplier],
    };
    let s = finalize(instance, r, duals, Method::FullRankInterferenceLimited, settings)?;
    audited(instance, s, settings)
}

/// One user, `W1` full rank, `W2 = lambda2 u2 u2^H`. Either plain
/// water-filling already meets the cap, or both constraints bind and
/// `R = (1/mu1) I - W1^{-1} - alpha u2 u2^H`.
pub fn solve_rank1_interferer(instance: &ProblemInstance) -> Result<Option<Solution>, SolverError> {
    rank1_interferer(instance, &SolverSettings::default())
}

fn rank1_interferer(
    instance: &ProblemInstance,
    settings: &SolverSettings,
) -> Result<Option<Solution>, SolverError> {
    let Some(w2) = single_user(instance) else {
        return Ok(None);
    };
    let tol = &settings.tolerances;
    let w1 = instance.signal_gram();
    let m = instance.dim();
    if w1.rank_with(tol)? < m || w2.rank_with(tol)? != 1 {
        return Ok(None);
    }
    let Some(w1_inv) = w1.inverse_pd() else {
        return Ok(None);
    };
    let eig = w2.eigh()?;
    let lambda2 = eig.max_eigenvalue();
    let u2 = eig.eigenvector(0);
    let q = w1_inv.quadratic_form(&u2);
    let inv_trace = w1_inv.trace();
    let inv_peak = w1_inv.max_eigenvalue()?;
    let (mf, pt, cap) = (m as f64, instance.total_power(), instance.users()[0].cap);

    let threshold = lambda2 * (pt + inv_trace) / mf - lambda2 * q;
    let wf_power_edge = mf * inv_peak - inv_trace;
    if cap >= threshold && pt > wf_power_edge + margin(wf_power_edge) {
        let level = (pt + inv_trace) / mf;
        let r = &HermitianMatrix::identity(m).scale(level) - &w1_inv;
        let duals = DualVariables {
            power: 1.0 / level,
            interference: vec![0.0],
        };
        let s = finalize(instance, r, duals, Method::Rank1Interferer, settings)?;
        return audited(instance, s, settings);
    }

    let lower = lambda2 * inv_peak - lambda2 * q;
    let power_edge = mf * cap / lambda2 + mf * q - inv_trace;
    let inside = m >= 2
        && cap > lower + margin(lower)
        && cap < threshold - margin(threshold)
        && pt > power_edge + margin(power_edge);
    if !inside {
        return Ok(None);
    }
    let mu1 = (mf - 1.0) / (pt - cap / lambda2 - q + inv_trace);
    let combined = cap / lambda2 + q; // (mu1 + lambda2 mu2)^{-1}
    let mu2 = (1.0 / combined - mu1) / lambda2;
    if !(mu1 > 0.0 && mu2 > 0.0) {
        return Ok(None);
    }
    let alpha = 1.0 / mu1 - combined;
    let r = &(&HermitianMatrix::identity(m).scale(1.0 / mu1) - &w1_inv)
        - &HermitianMatrix::outer(&u2).scale(alpha);
    if r.min_eigenvalue()? <= 0.0 {
        return Ok(None);
    }
    let duals = DualVariables {
        power: mu1,
        interference: vec![mu2],
    };
    let s = finalize(instance, r, duals, Method::Rank1Interferer, settings)?;
    audited(instance, s, settings)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamformingCase {
    /// Only the interference cap binds.
    InterferenceLimited,
    /// Only the power budget binds.
    PowerLimited,
    /// Both bind.
    BothActive,
}

/// Beamforming optimum for a rank-one main channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1ChannelSolution {
    pub solution: Solution,
    pub case: BeamformingCase,
    /// Power-loss factor, `C = ln(1 + lambda1 alpha P_T)`.
    pub alpha: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

/// One user and `W1 = lambda1 u1 u1^H`. The optimum is rank one.
///
/// The interference-limited case needs `u1` in the range of `W2`; otherwise
/// its candidate is dominated by the both-active solution, which is used
/// instead.
pub fn solve_rank1_channel(instance: &ProblemInstance) -> Result<Option<Rank1ChannelSolution>, SolverError> {
    rank1_channel(instance, &SolverSettings::default())
}

fn rank1_channel(
    instance: &ProblemInstance,
    settings: &SolverSettings,
) -> Result<Option<Rank1ChannelSolution>, SolverError> {
    let Some(w2) = single_user(instance) else {
        return Ok(None);
    };
    let tol = &settings.tolerances;
    let w1 = instance.signal_gram();
    if w1.rank_with(tol)? != 1 {
        return Ok(None);
    }
    let eig1 = w1.eigh()?;
    let lambda1 = eig1.max_eigenvalue();
    let u1 = eig1.eigenvector(0);
    let (pt, cap) = (instance.total_power(), instance.users()[0].cap);
    let w2_max = w2.max_eigenvalue()?.max(0.0);

    let beam = |v: &CVector, power: f64| HermitianMatrix::outer(v).scale(power / v.norm_squared());
    let w2u = w2.as_matrix() * &u1;
    let gamma2 = w2.quadratic_form(&u1);
    let pinv = w2.pinv_with(tol)?;
    let pinv_u = pinv.as_matrix() * &u1;
    let a = pinv.quadratic_form(&u1);
    let b = pinv_u.norm_squared();
    let gamma1 = if b > 0.0 { a / b } else { 0.0 };
    let gamma_i = cap / pt;

    let case = if w2u.norm() <= tol.rank * (1.0 + w2_max) || gamma_i >= gamma2 {
        BeamformingCase::PowerLimited
    } else if w2.nullspace_contained_with(w1, tol)? && gamma_i <= gamma1 * (1.0 + 1e-12) {
        BeamformingCase::InterferenceLimited
    } else if cap == 0.0 {
        return Ok(None);
    } else {
        BeamformingCase::BothActive
    };

    let (r, duals, alpha, method) = match case {
        BeamformingCase::PowerLimited => (
            beam(&u1, pt),
            DualVariables {
                power: 1.0 / (pt + 1.0 / lambda1),
                interference: vec![0.0],
            },
            1.0,
            Method::BeamformingPowerLimited,
        ),
        BeamformingCase::InterferenceLimited => (
            beam(&pinv_u, cap / gamma1),
            DualVariables {
                power: 0.0,
                interference: vec![1.0 / (cap + 1.0 / (lambda1 * a))],
            },
            gamma_i * a,
            Method::BeamformingInterferenceLimited,
        ),
        BeamformingCase::BothActive => {
            let Some((ratio, v)) = both_active_direction(w2, &u1, pt, cap)? else {
                return Ok(None);
            };
            let p = u1.dotc(&v).re;
            let n = v.norm_squared();
            let mu1 = 1.0 / (pt * p / n + 1.0 / (lambda1 * p));
            (
                beam(&v, pt),
                DualVariables {
                    power: mu1,
                    interference: vec![mu1 * ratio],
                },
                p * p / n,
                Method::BeamformingBothActive,
            )
        }
    };
    let solution = finalize(instance, r, duals, method, settings)?;
    Ok(audited(instance, solution, settings)?.map(|solution| Rank1ChannelSolution {
        solution,
        case,
        alpha,
        gamma1,
        gamma2,
    }))
}

/// Finds `t > 0` with `tr(W2 R) = P_I` for the beam along
/// `v = (I + t W2)^{-1} u1` at full power, working in the eigenbasis of `W2`.
fn both_active_direction(
    w2: &HermitianMatrix,
    u1: &CVector,
    pt: f64,
    cap: f64,
) -> Result<Option<(f64, CVector)>, SolverError> {
    let eig = w2.eigh()?;
    let coords = eig.eigenvectors.adjoint() * u1;
    let weights: alloc::vec::Vec<f64> = eig.eigenvalues.iter().map(|&w| w.max(0.0)).collect();
    let power = |t: f64| {
        let (mut num, mut den) = (0.0, 0.0);
        for (c, &w) in coords.iter().zip(&weights) {
            let g = c.norm_sqr() / ((1.0 + t * w) * (1.0 + t * w));
            num += w * g;
            den += g;
        }
        pt * num / den
    };
    let slack = |t: f64| cap - power(t);
    let s0 = slack(0.0);
    if s0 >= 0.0 {
        return Ok(None);
    }
    let peak = eig.max_eigenvalue().max(f64::MIN_POSITIVE);
    let mut hi = 1.0 / peak;
    while slack(hi) < 0.0 {
        hi *= 4.0;
        if hi > 1e300 {
            return Ok(None);
        }
    }
    let (root, _) = find_root::<(), SolverError>(
        |t| Ok((slack(t), ())),
        (0.0, s0),
        (hi, slack(hi), ()),
        RootSettings {
            ftol: 1e-13 * cap.max(1.0),
            max_evals: 500,
        },
    )?;
    let t = root.x;
    let scaled = CVector::from_iterator(
        coords.len(),
        coords
            .iter()
            .zip(&weights)
            .map(|(c, &w)| c * C64::new(1.0 / (1.0 + t * w), 0.0)),
    );
    let v: CVector = &eig.eigenvectors * scaled;
    Ok(Some((t, v)))
}
