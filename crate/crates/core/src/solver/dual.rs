//! Search for the multipliers that make `R(mu)` optimal.
//!
//! The dual function
//! `g(mu) = C(R(mu)) + mu1 (P_T - tr R(mu)) + sum_k mu2k (P_Ik - tr(W2k R(mu)))`
//! is convex and its gradient is the vector of constraint slacks. The power
//! multiplier is eliminated by a monotone root search for every interference
//! multiplier vector, leaving `h(mu2) = min_{mu1 >= 0} g(mu1, mu2)`, which is
//! again convex with gradient equal to the interference slacks. Convexity
//! makes each slack nondecreasing in its own multiplier, so one-dimensional
//! searches can bracket safely.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{HermitianMatrix, Tolerances};
use crate::problem::{DualVariables, ProblemInstance};

use super::covariance::{DualContext, DualEvaluation};
use super::roots::{find_root, RootSettings};
use super::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStrategy {
    /// Nested bisection for one user, projected Newton otherwise.
    Auto,
    /// Cyclic one-dimensional root searches over the interference multipliers.
    NestedBisection,
    /// Projected Newton steps on `h(mu2)` with a finite-difference Hessian.
    ProjectedNewton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualSearchSettings {
    /// Outer iterations: Newton steps or coordinate sweeps.
    pub max_iters: usize,
    /// Target on every slack, relative to `max(1, cap)`.
    pub residual_tol: f64,
    pub strategy: SearchStrategy,
    /// Ceiling for bracket expansion of any multiplier.
    pub mu_upper_bound: f64,
}

impl Default for DualSearchSettings {
    fn default() -> Self {
        Self {
            max_iters: 200,
            residual_tol: 1e-11,
            strategy: SearchStrategy::Auto,
            mu_upper_bound: 1e15,
        }
    }
}

impl DualSearchSettings {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.max_iters == 0 || self.residual_tol.is_nan() || self.residual_tol <= 0.0 || self.mu_upper_bound.is_nan() || self.mu_upper_bound <= 0.0 {
            return Err(SolverError::InvalidSettings);
        }
        Ok(())
    }
}

/// Converged multipliers and the matching covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub duals: DualVariables,
    pub evaluation: DualEvaluation,
    /// `h(mu2)`, the dual objective with `mu1` eliminated.
    pub dual_value: f64,
    /// `P_Ik - tr(W2k R)`.
    pub slack: Vec<f64>,
}

const INNER_MAX_EVALS: usize = 400;
const COORD_MAX_EVALS: usize = 200;
const ARMIJO: f64 = 1e-4;

pub(crate) struct Search<'a> {
    instance: &'a ProblemInstance,
    tol: Tolerances,
    settings: DualSearchSettings,
    mu1_hi: f64,
    /// Natural scale of each interference multiplier.
    mu_ref: Vec<f64>,
    pub evaluations: usize,
}

impl<'a> Search<'a> {
    pub fn new(
        instance: &'a ProblemInstance,
        settings: DualSearchSettings,
        tol: Tolerances,
    ) -> Result<Self, SolverError> {
        settings.validate()?;
        let w1_max = instance.signal_gram().max_eigenvalue()?.max(0.0);
        let mut mu_ref = Vec::with_capacity(instance.num_users());
        for user in instance.users() {
            let eig = user.gram.eigh()?;
            let cutoff = eig.rank_cutoff(&tol);
            let smallest = eig
                .eigenvalues
                .iter()
                .copied()
                .filter(|&l| l > cutoff)
                .fold(f64::INFINITY, f64::min);
            mu_ref.push(if smallest.is_finite() {
                (w1_max / smallest).max(f64::MIN_POSITIVE)
            } else {
                1.0
            });
        }
        Ok(Self {
            instance,
            tol,
            settings,
            mu1_hi: w1_max * (1.0 + 1e-12),
            mu_ref,
            evaluations: 0,
        })
    }

    fn cap_scale(&self, k: usize) -> f64 {
        self.instance.users()[k].cap.max(1.0)
    }

    /// Eliminates `mu1` for fixed `mu2`.
    pub fn inner(&mut self, mu2: &[f64]) -> Result<DualPoint, SolverError> {
        let ctx = DualContext::new(self.instance.signal_gram(), self.instance.users(), mu2, &self.tol)?;
        let pt = self.instance.total_power();
        let mut lo_value = -1.0;
        if ctx.zero_power_admissible() {
            self.evaluations += 1;
            match ctx.evaluate(0.0) {
                Ok(ev) => {
                    let phi = pt - ev.trace;
                    if phi >= 0.0 {
                        return Ok(self.point(0.0, mu2, ev));
                    }
                    lo_value = phi;
                }
                Err(SolverError::ZeroDuals) => {}
                Err(e) => return Err(e),
            }
        }
        self.evaluations += 1;
        let hi = ctx.evaluate(self.mu1_hi)?;
        let hi_phi = pt - hi.trace;
        let mut evals = 0;
        let (root, _) = find_root(
            |x| {
                evals += 1;
                ctx.evaluate(x).map(|ev| (pt - ev.trace, ev))
            },
            (0.0, lo_value),
            (self.mu1_hi, hi_phi, hi),
            RootSettings {
                ftol: 1e-12 * pt.max(1.0),
                max_evals: INNER_MAX_EVALS,
            },
        )?;
        self.evaluations += evals;
        Ok(self.point(root.x, mu2, root.payload))
    }

    fn point(&self, mu1: f64, mu2: &[f64], evaluation: DualEvaluation) -> DualPoint {
        let slack: Vec<f64> = self
            .instance
            .users()
            .iter()
            .zip(&evaluation.interference)
            .map(|(u, &i)| u.cap - i)
            .collect();
        let dual_value = evaluation.capacity_nats
            + mu1 * (self.instance.total_power() - evaluation.trace)
            + mu2.iter().zip(&slack).map(|(m, s)| m * s).sum::<f64>();
        DualPoint {
            duals: DualVariables {
                power: mu1,
                interference: mu2.to_vec(),
            },
            evaluation,
            dual_value,
            slack,
        }
    }

    /// Worst complementarity residual of the interference multipliers,
    /// relative to each cap.
    pub fn residual(&self, p: &DualPoint) -> f64 {
        p.slack
            .iter()
            .zip(&p.duals.interference)
            .enumerate()
            .map(|(k, (&s, &mu))| {
                let r = if mu > 0.0 { s.abs() } else { (-s).max(0.0) };
                r / self.cap_scale(k)
            })
            .fold(0.0, f64::max)
    }

    fn converged(&self, p: &DualPoint) -> bool {
        self.residual(p) <= self.settings.residual_tol
    }

    pub fn run(&mut self) -> Result<DualPoint, SolverError> {
        let k = self.instance.num_users();
        let start = self.inner(&vec![0.0; k])?;
        if self.converged(&start) {
            return Ok(start);
        }
        let newton = match self.settings.strategy {
            SearchStrategy::Auto => k > 1,
            SearchStrategy::NestedBisection => false,
            SearchStrategy::ProjectedNewton => true,
        };
        if newton {
            self.projected_newton(start)
        } else {
            self.coordinate_sweeps(start, self.settings.max_iters)
        }
    }

    fn finish(&self, best: DualPoint, iterations: usize) -> Result<DualPoint, SolverError> {
        let worst = self.residual(&best);
        // the feasibility tolerance of the model is the last line of acceptance
        if worst <= crate::problem::FEAS_TOL * 0.1 {
            return Ok(best);
        }
        Err(SolverError::NoConvergence {
            iterations,
            worst_slack: worst,
            duals: best.duals,
        })
    }

    fn coordinate_sweeps(&mut self, mut p: DualPoint, sweeps: usize) -> Result<DualPoint, SolverError> {
        for sweep in 0..sweeps {
            for k in 0..self.instance.num_users() {
                p = self.coordinate_root(p, k)?;
            }
            if self.converged(&p) {
                return Ok(p);
            }
            if sweep + 1 == sweeps {
                break;
            }
        }
        self.finish(p, sweeps)
    }

    /// Solves `slack_k(mu2) = 0` in `mu2k` with the other multipliers fixed,
    /// or sets `mu2k = 0` when that is already feasible.
    fn coordinate_root(&mut self, p: DualPoint, k: usize) -> Result<DualPoint, SolverError> {
        let tol_k = self.settings.residual_tol * self.cap_scale(k);
        let mu = p.duals.interference[k];
        let s = p.slack[k];
        if (mu == 0.0 && s >= 0.0) || (mu > 0.0 && s.abs() <= tol_k) {
            return Ok(p);
        }
        let at = |search: &mut Self, x: f64| -> Result<DualPoint, SolverError> {
            let mut mu2 = p.duals.interference.clone();
            mu2[k] = x;
            search.inner(&mu2)
        };
        let (lo, lo_slack, hi_point) = if s < 0.0 {
            let mut x = (2.0 * mu).max(self.mu_ref[k]);
            loop {
                let q = at(self, x)?;
                if q.slack[k] >= 0.0 {
                    break (mu, s, q);
                }
                if x > self.settings.mu_upper_bound {
                    return Err(SolverError::NoConvergence {
                        iterations: 0,
                        worst_slack: -q.slack[k] / self.cap_scale(k),
                        duals: q.duals,
                    });
                }
                x *= 4.0;
            }
        } else {
            let zero = at(self, 0.0)?;
            if zero.slack[k] >= 0.0 {
                return Ok(zero);
            }
            (0.0, zero.slack[k], p.clone())
        };
        let hi_x = hi_point.duals.interference[k];
        let hi_slack = hi_point.slack[k];
        let (root, _) = find_root(
            |x| at(self, x).map(|q| (q.slack[k], q)),
            (lo, lo_slack),
            (hi_x, hi_slack, hi_point),
            RootSettings {
                ftol: tol_k,
                max_evals: COORD_MAX_EVALS,
            },
        )?;
        Ok(root.payload)
    }

    fn projected_newton(&mut self, start: DualPoint) -> Result<DualPoint, SolverError> {
        let k = self.instance.num_users();
        let mut p = self.coordinate_sweeps_once(start)?;
        let mut stalls = 0;
        for iter in 0..self.settings.max_iters {
            if self.converged(&p) {
                return Ok(p);
            }
            let free: Vec<usize> = (0..k)
                .filter(|&j| p.duals.interference[j] > 0.0 || p.slack[j] < 0.0)
                .collect();
            let step = self.newton_direction(&p, &free)?;
            match self.line_search(&p, &free, &step)? {
                Some(q) => {
                    p = q;
                    stalls = 0;
                }
                None => {
                    stalls += 1;
                    p = self.coordinate_sweeps_once(p)?;
                    if stalls > 3 {
                        let rest = self.settings.max_iters.saturating_sub(iter).max(1);
                        return self.coordinate_sweeps(p, rest);
                    }
                }
            }
        }
        let iters = self.settings.max_iters;
        if self.converged(&p) {
            return Ok(p);
        }
        self.finish(p, iters)
    }

    fn coordinate_sweeps_once(&mut self, mut p: DualPoint) -> Result<DualPoint, SolverError> {
        for j in 0..self.instance.num_users() {
            p = self.coordinate_root(p, j)?;
        }
        Ok(p)
    }

    fn newton_direction(&mut self, p: &DualPoint, free: &[usize]) -> Result<Vec<f64>, SolverError> {
        let n = free.len();
        let mut hess = DMatrix::<f64>::zeros(n, n);
        for (col, &j) in free.iter().enumerate() {
            let mu = p.duals.interference[j];
            let delta = 1e-6 * mu.max(1e-3 * self.mu_ref[j]);
            let mut mu2 = p.duals.interference.clone();
            mu2[j] = mu + delta;
            let q = self.inner(&mu2)?;
            for (row, &i) in free.iter().enumerate() {
                hess[(row, col)] = (q.slack[i] - p.slack[i]) / delta;
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let grad = DVector::from_iterator(n, free.iter().map(|&i| p.slack[i]));
        let diag_max = (0..n).map(|i| hess[(i, i)].abs()).fold(0.0, f64::max);
        let mut tau = 1e-12 * diag_max.max(f64::MIN_POSITIVE);
        for _ in 0..40 {
            let shifted = &hess + DMatrix::<f64>::identity(n, n) * tau;
            if let Some(chol) = shifted.cholesky() {
                let d = chol.solve(&(-&grad));
                let mut full = vec![0.0; self.instance.num_users()];
                for (pos, &i) in free.iter().enumerate() {
                    full[i] = d[pos];
                }
                return Ok(full);
            }
            tau *= 100.0;
        }
        // fall back to a scaled gradient step
        let mut full = vec![0.0; self.instance.num_users()];
        for &i in free {
            full[i] = -p.slack[i] * self.mu_ref[i] / self.cap_scale(i);
        }
        Ok(full)
    }

    fn line_search(
        &mut self,
        p: &DualPoint,
        free: &[usize],
        step: &[f64],
    ) -> Result<Option<DualPoint>, SolverError> {
        let noise = 1e-13 * (p.dual_value.abs() + 1.0);
        let base_residual = self.residual(p);
        let mut t = 1.0;
        for _ in 0..40 {
            let mut mu2 = p.duals.interference.clone();
            for &i in free {
                mu2[i] = (mu2[i] + t * step[i]).max(0.0);
            }
            let q = self.inner(&mu2)?;
            let predicted: f64 = (0..mu2.len())
                .map(|i| p.slack[i] * (mu2[i] - p.duals.interference[i]))
                .sum();
            let armijo = q.dual_value <= p.dual_value + ARMIJO * predicted + noise;
            let residual = self.residual(&q);
            if armijo && residual < base_residual || residual <= 0.5 * base_residual {
                return Ok(Some(q));
            }
            t *= 0.5;
        }
        Ok(None)
    }
}

/// Finds multipliers for an instance with positive caps, returning the
/// matching `R(mu)`.
pub fn dual_search(
    instance: &ProblemInstance,
    settings: &DualSearchSettings,
    tol: &Tolerances,
) -> Result<DualPoint, SolverError> {
    if !super::zero_forcing_users(instance, tol)?.is_empty() {
        return Err(SolverError::ZeroCapNeedsReduction);
    }
    if instance.signal_gram().rank_with(tol)? == 0 {
        let m = instance.dim();
        let evaluation = DualEvaluation {
            covariance: HermitianMatrix::zeros(m),
            capacity_nats: 0.0,
            trace: 0.0,
            interference: vec![0.0; instance.num_users()],
        };
        return Ok(DualPoint {
            duals: DualVariables::zeros(instance.num_users()),
            evaluation,
            dual_value: 0.0,
            slack: instance.users().iter().map(|u| u.cap).collect(),
        });
    }
    Search::new(instance, *settings, *tol)?.run()
}
