#[allow(unused_imports)] // inherent float methods need std
use num_traits::Float;
use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{CMatrix, EigenDecomposition, HermitianMatrix, Tolerances};
use crate::problem::{DualVariables, Method, ProblemInstance};
use crate::solver::{finalize, SolverError, SolverSettings};

use super::{radial_scale, zero_cap_projector, OracleRun, OracleSettings};

const MEMORY: usize = 10;
const SUFFICIENT: f64 = 1e-4;
const STEP_MIN: f64 = 1e-12;
const STEP_MAX: f64 = 1e12;
const WINDOW: usize = 50;
const PROJECTION_TOL: f64 = 1e-13;
const MAX_STALLS: usize = 5;

/// Spectral projected gradient ascent with a nonmonotone line search. Each
/// projection onto `{R >= 0} ∩ {tr R <= P_T} ∩ {tr(W2k R) <= P_Ik}` is
/// solved through its dual and followed by an exact feasibility repair.
pub fn projected_gradient(
    instance: &ProblemInstance,
    settings: &OracleSettings,
) -> Result<OracleRun, SolverError> {
    settings.validate()?;
    let tol = Tolerances::DEFAULT;
    let m = instance.dim();
    let objective = Objective::new(instance, &tol)?;
    let mut projector = Projector::new(instance, &tol)?;

    let mut r = projector.repair(&HermitianMatrix::identity(m).scale(instance.total_power() / m as f64))?;
    let (mut f, mut g) = objective.value_and_gradient(&r)?;
    let mut history: VecDeque<f64> = VecDeque::from(vec![f]);
    let mut trail: VecDeque<f64> = VecDeque::from(vec![f]);
    let mut step = settings.step0;
    let mut iterations = 0;
    let mut converged = false;
    let mut stalls = 0;

    while iterations < settings.max_iters {
        iterations += 1;
        let target = &r + &g.scale(step);
        let trial = projector.project(&target, settings.projection_iters)?;
        let d = &trial - &r;
        let slope = g.trace_product(&d);
        let scale = f.abs().max(1.0);
        let small = settings.tol * (1.0 + r.max_abs());
        if d.frobenius_norm_sq().sqrt() <= small {
            converged = true;
            break;
        }
        if slope <= settings.tol * scale * 1e-3 {
            // no ascent along an inexact projection: retry shorter
            stalls += 1;
            if stalls > MAX_STALLS {
                converged = true;
                break;
            }
            step = (step * 0.1).max(STEP_MIN);
            continue;
        }
        stalls = 0;
        let reference = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut lambda = 1.0;
        let (r_new, f_new, g_new) = loop {
            let cand = &r + &d.scale(lambda);
            let (fc, gc) = objective.value_and_gradient(&cand)?;
            if fc >= reference + SUFFICIENT * lambda * slope || lambda < 1e-12 {
                break (cand, fc, gc);
            }
            lambda *= 0.5;
        };
        let s = &r_new - &r;
        let y = &g - &g_new;
        let sy = s.trace_product(&y);
        step = if sy > 0.0 {
            (s.frobenius_norm_sq() / sy).clamp(STEP_MIN, STEP_MAX)
        } else {
            STEP_MAX.min(step * 4.0)
        };
        r = r_new;
        f = f_new;
        g = g_new;
        history.push_back(f);
        if history.len() > MEMORY {
            history.pop_front();
        }
        trail.push_back(f);
        if trail.len() > WINDOW {
            trail.pop_front();
            let gain = f - trail[0];
            if gain.abs() <= settings.tol * scale {
                converged = true;
                break;
            }
        }
    }
    let last_improvement = f - trail.front().copied().unwrap_or(f);
    let duals = DualVariables::zeros(instance.num_users());
    let solution = finalize(instance, r, duals, Method::Oracle, &SolverSettings::default())?;
    Ok(OracleRun {
        solution,
        iterations,
        converged,
        last_improvement,
    })
}

struct Objective {
    root: HermitianMatrix,
}

impl Objective {
    fn new(instance: &ProblemInstance, tol: &Tolerances) -> Result<Self, SolverError> {
        Ok(Self {
            root: instance.signal_gram().sqrt_psd_with(tol)?,
        })
    }

    /// `ln det(I + Q R Q)` and its gradient `Q (I + Q R Q)^{-1} Q`.
    fn value_and_gradient(&self, r: &HermitianMatrix) -> Result<(f64, HermitianMatrix), SolverError> {
        let m = r.dim();
        let inner = &HermitianMatrix::identity(m) + &r.congruence(self.root.as_matrix());
        match (inner.log_det_pd(), inner.inverse_pd()) {
            (Some(v), Some(inv)) => Ok((v, inv.congruence(self.root.as_matrix()))),
            _ => Ok((f64::NEG_INFINITY, HermitianMatrix::zeros(m))),
        }
    }
}

/// Half-space `tr(A R) <= c`.
struct HalfSpace {
    normal: HermitianMatrix,
    cap: f64,
}

/// Euclidean projection onto the feasible set, computed through its dual:
/// the projection of `x` is `(x - sum_j lambda_j A_j)_+` for the `lambda >= 0`
/// maximizing the concave dual, found by projected semismooth Newton.
/// Multipliers carry over between calls.
struct Projector<'a> {
    instance: &'a ProblemInstance,
    null_projector: Option<CMatrix>,
    halves: Vec<HalfSpace>,
    lambda: Vec<f64>,
}

struct DualState {
    value: f64,
    gradient: Vec<f64>,
    eig: EigenDecomposition,
}

impl<'a> Projector<'a> {
    fn new(instance: &'a ProblemInstance, tol: &Tolerances) -> Result<Self, SolverError> {
        let m = instance.dim();
        let null_projector = zero_cap_projector(instance, tol)?;
        let restrict = |a: &HermitianMatrix| match &null_projector {
            Some(p) => a.congruence(p),
            None => a.clone(),
        };
        let mut halves = vec![HalfSpace {
            normal: restrict(&HermitianMatrix::identity(m)),
            cap: instance.total_power(),
        }];
        for user in instance.users() {
            if user.cap > 0.0 {
                let normal = restrict(&user.gram);
                if !normal.is_zero() {
                    halves.push(HalfSpace { normal, cap: user.cap });
                }
            }
        }
        let lambda = vec![0.0; halves.len()];
        Ok(Self {
            instance,
            null_projector,
            halves,
            lambda,
        })
    }

    fn restrict(&self, x: &HermitianMatrix) -> HermitianMatrix {
        match &self.null_projector {
            Some(p) => x.congruence(p),
            None => x.clone(),
        }
    }

    fn shifted(&self, x: &HermitianMatrix, lambda: &[f64]) -> HermitianMatrix {
        let mut y = x.clone();
        for (h, &l) in self.halves.iter().zip(lambda) {
            if l != 0.0 {
                y = &y - &h.normal.scale(l);
            }
        }
        y
    }

    fn dual(&self, x: &HermitianMatrix, lambda: &[f64]) -> Result<DualState, SolverError> {
        let eig = self.shifted(x, lambda).eigh()?;
        let plus = eig.map(|l| l.max(0.0));
        let norm_sq: f64 = eig.eigenvalues.iter().map(|&l| l.max(0.0) * l.max(0.0)).sum();
        let mut value = -0.5 * norm_sq;
        let mut gradient = Vec::with_capacity(self.halves.len());
        for (h, &l) in self.halves.iter().zip(lambda) {
            value -= l * h.cap;
            gradient.push(h.normal.trace_product(&plus) - h.cap);
        }
        Ok(DualState { value, gradient, eig })
    }

    /// Negated generalized Hessian of the dual, `<A_i, D(A_j)>` with `D` the
    /// derivative of the positive part at the current point.
    fn curvature(&self, eig: &EigenDecomposition) -> Vec<Vec<f64>> {
        let v = &eig.eigenvectors;
        let e = &eig.eigenvalues;
        let n = e.len();
        let omega = |p: usize, q: usize| -> f64 {
            match (e[p] > 0.0, e[q] > 0.0) {
                (true, true) => 1.0,
                (false, false) => 0.0,
                _ => (e[p].max(0.0) - e[q].max(0.0)) / (e[p] - e[q]),
            }
        };
        let rotated: Vec<CMatrix> = self
            .halves
            .iter()
            .map(|h| v.adjoint() * h.normal.as_matrix() * v)
            .collect();
        let k = self.halves.len();
        let mut hess = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in i..k {
                let mut acc = 0.0;
                for p in 0..n {
                    for q in 0..n {
                        let w = omega(p, q);
                        if w != 0.0 {
                            acc += w * (rotated[i][(p, q)].conj() * rotated[j][(p, q)]).re;
                        }
                    }
                }
                hess[i][j] = acc;
                hess[j][i] = acc;
            }
        }
        hess
    }

    fn stationarity(&self, lambda: &[f64], gradient: &[f64]) -> f64 {
        lambda
            .iter()
            .zip(gradient)
            .zip(&self.halves)
            .map(|((&l, &g), h)| {
                let r = if l > 0.0 { g.abs() } else { g.max(0.0) };
                r / h.cap.max(1.0)
            })
            .fold(0.0, f64::max)
    }

    fn project(&mut self, x: &HermitianMatrix, iters: usize) -> Result<HermitianMatrix, SolverError> {
        let x = self.restrict(x);
        let mut lambda = self.lambda.clone();
        let mut state = self.dual(&x, &lambda)?;
        for _ in 0..iters {
            if self.stationarity(&lambda, &state.gradient) <= PROJECTION_TOL {
                break;
            }
            let k = lambda.len();
            // free variables: positive, or at zero with an ascent direction
            let free: Vec<usize> = (0..k).filter(|&j| lambda[j] > 0.0 || state.gradient[j] > 0.0).collect();
            let hess = self.curvature(&state.eig);
            let mut direction = vec![0.0; k];
            let sub = DMatrix::from_fn(free.len(), free.len(), |a, b| hess[free[a]][free[b]]);
            let shift = 1e-12 * (1.0 + (0..free.len()).map(|a| sub[(a, a)]).fold(0.0, f64::max));
            let sub = sub + DMatrix::identity(free.len(), free.len()) * shift;
            let rhs = DVector::from_fn(free.len(), |a, _| state.gradient[free[a]]);
            match sub.cholesky() {
                Some(ch) => {
                    let step = ch.solve(&rhs);
                    for (a, &j) in free.iter().enumerate() {
                        direction[j] = step[a];
                    }
                }
                None => direction = state.gradient.clone(),
            }
            if direction.iter().zip(&state.gradient).map(|(d, g)| d * g).sum::<f64>() <= 0.0 {
                direction = state.gradient.clone();
            }
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-20 {
                let trial: Vec<f64> = lambda.iter().zip(&direction).map(|(l, d)| (l + t * d).max(0.0)).collect();
                let next = self.dual(&x, &trial)?;
                let gain: f64 = trial
                    .iter()
                    .zip(&lambda)
                    .zip(&state.gradient)
                    .map(|((a, b), g)| (a - b) * g)
                    .sum();
                if next.value >= state.value + 1e-4 * gain {
                    lambda = trial;
                    state = next;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        self.lambda = lambda;
        self.repair(&state.eig.map(|l| l.max(0.0)))
    }

    /// Exactly feasible point near `x`: null-space restriction, PSD part,
    /// then radial scaling.
    fn repair(&self, x: &HermitianMatrix) -> Result<HermitianMatrix, SolverError> {
        let psd = self.restrict(x).eigh()?.map(|l| l.max(0.0));
        let s = radial_scale(self.instance, &psd);
        Ok(if s < 1.0 { psd.scale(s) } else { psd })
    }
}
