use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods need std
use num_traits::Float;
use nalgebra::{DMatrix, DVector};

use crate::linalg::{CMatrix, HermitianMatrix, Tolerances, C64};
use crate::problem::{DualVariables, Method, ProblemInstance};
use crate::solver::{finalize, SolverError, SolverSettings};

use super::{OracleRun, OracleSettings};

const BARRIER_GROWTH: f64 = 8.0;
const CENTERING_ITERS: usize = 60;

/// Log-barrier interior-point maximizer of `ln det(I + W1 R)`.
///
/// Newton steps are taken in the coordinates `R = L Z L` with `L = R^{1/2}`
/// at the current iterate, where the barrier of the cone has identity
/// Hessian. Zero-cap users are eliminated by restricting `R` to the null
/// space of their Gram matrices. Stops once the barrier duality gap
/// `(n + constraints) / t` is below `settings.tol` relative to the
/// objective.
pub fn interior_point(instance: &ProblemInstance, settings: &OracleSettings) -> Result<OracleRun, SolverError> {
    settings.validate()?;
    let tol = Tolerances::DEFAULT;
    let m = instance.dim();
    let basis = free_basis(instance, &tol)?;
    let n = basis.ncols();
    let zero = |iterations| -> Result<OracleRun, SolverError> {
        let solution = finalize(
            instance,
            HermitianMatrix::zeros(m),
            DualVariables::zeros(instance.num_users()),
            Method::Oracle,
            &SolverSettings::default(),
        )?;
        Ok(OracleRun {
            solution,
            iterations,
            converged: true,
            last_improvement: 0.0,
        })
    };
    if n == 0 {
        return zero(0);
    }
    let reduce = |a: &HermitianMatrix| a.congruence(&basis.adjoint());
    let w1 = reduce(instance.signal_gram());
    if w1.max_abs() == 0.0 {
        return zero(0);
    }
    let mut constraints = vec![(HermitianMatrix::identity(n), instance.total_power())];
    for user in instance.users() {
        if user.cap > 0.0 {
            let a = reduce(&user.gram);
            if a.max_abs() > 0.0 {
                constraints.push((a, user.cap));
            }
        }
    }
    let problem = Barrier {
        root: w1.sqrt_psd_with(&tol)?,
        constraints,
        basis: hermitian_basis(n),
    };

    let start = problem
        .constraints
        .iter()
        .map(|(a, c)| c / a.trace())
        .fold(f64::INFINITY, f64::min);
    let mut r = HermitianMatrix::identity(n).scale(0.5 * start / n as f64);
    let barrier_terms = (n + problem.constraints.len()) as f64;
    let mut t = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut last = problem.objective(&r).unwrap_or(0.0);
    let mut last_improvement = 0.0;
    while iterations < settings.max_iters {
        for _ in 0..CENTERING_ITERS {
            iterations += 1;
            match problem.newton_step(&r, t)? {
                Some(next) => r = next,
                None => break,
            }
        }
        let f = problem.objective(&r).unwrap_or(last);
        last_improvement = f - last;
        last = f;
        if barrier_terms / t <= settings.tol * f.abs().max(1.0) {
            converged = true;
            break;
        }
        t *= BARRIER_GROWTH;
    }

    let full = r.congruence(&basis);
    let full = full.scale(super::radial_scale(instance, &full));
    let solution = finalize(
        instance,
        full,
        DualVariables::zeros(instance.num_users()),
        Method::Oracle,
        &SolverSettings::default(),
    )?;
    Ok(OracleRun {
        solution,
        iterations,
        converged,
        last_improvement,
    })
}

/// Orthonormal basis of the common null space of the zero-cap users.
fn free_basis(instance: &ProblemInstance, tol: &Tolerances) -> Result<CMatrix, SolverError> {
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
        return Ok(CMatrix::identity(m, m));
    }
    let eig = sum.eigh()?;
    Ok(eig.null_basis(eig.rank_cutoff(tol)))
}

#[derive(Clone, Copy)]
enum Element {
    Diagonal(usize),
    Real(usize, usize),
    Imaginary(usize, usize),
}

fn hermitian_basis(n: usize) -> Vec<Element> {
    let mut out: Vec<Element> = (0..n).map(Element::Diagonal).collect();
    for i in 0..n {
        for j in i + 1..n {
            out.push(Element::Real(i, j));
            out.push(Element::Imaginary(i, j));
        }
    }
    out
}

impl Element {
    /// `Re tr(M E)`.
    fn pair(self, m: &CMatrix) -> f64 {
        match self {
            Element::Diagonal(i) => m[(i, i)].re,
            Element::Real(i, j) => (m[(i, j)] + m[(j, i)]).re,
            Element::Imaginary(i, j) => -(m[(j, i)] - m[(i, j)]).im,
        }
    }

    fn add_to(self, m: &mut CMatrix, s: f64) {
        match self {
            Element::Diagonal(i) => m[(i, i)] += C64::new(s, 0.0),
            Element::Real(i, j) => {
                m[(i, j)] += C64::new(s, 0.0);
                m[(j, i)] += C64::new(s, 0.0);
            }
            Element::Imaginary(i, j) => {
                m[(i, j)] += C64::new(0.0, s);
                m[(j, i)] -= C64::new(0.0, s);
            }
        }
    }

    /// `tr(E E)`; distinct elements are orthogonal.
    fn norm_sq(self) -> f64 {
        match self {
            Element::Diagonal(_) => 1.0,
            _ => 2.0,
        }
    }

    /// `A E B` without forming `E`.
    fn sandwich(self, a: &CMatrix, b: &CMatrix) -> CMatrix {
        let n = a.nrows();
        let col = |k: usize| a.column(k).into_owned();
        let row = |k: usize| b.row(k).into_owned();
        let mut out = CMatrix::zeros(n, n);
        match self {
            Element::Diagonal(i) => out += col(i) * row(i),
            Element::Real(i, j) => out += col(i) * row(j) + col(j) * row(i),
            Element::Imaginary(i, j) => {
                let unit = C64::new(0.0, 1.0);
                out += (col(i) * row(j)) * unit - (col(j) * row(i)) * unit;
            }
        }
        out
    }
}

struct Barrier {
    root: HermitianMatrix,
    constraints: Vec<(HermitianMatrix, f64)>,
    basis: Vec<Element>,
}

impl Barrier {
    fn objective(&self, r: &HermitianMatrix) -> Option<f64> {
        let n = r.dim();
        (&HermitianMatrix::identity(n) + &r.congruence(self.root.as_matrix())).log_det_pd()
    }

    fn slacks(&self, r: &HermitianMatrix) -> Vec<f64> {
        self.constraints.iter().map(|(a, c)| c - a.trace_product(r)).collect()
    }

    /// Barrier function, `None` outside the interior.
    fn value(&self, r: &HermitianMatrix, t: f64) -> Option<f64> {
        let mut v = t * self.objective(r)? + r.log_det_pd()?;
        for s in self.slacks(r) {
            if s <= 0.0 {
                return None;
            }
            v += s.ln();
        }
        Some(v)
    }

    /// One damped Newton step at barrier weight `t`, or `None` once the
    /// Newton decrement is negligible.
    fn newton_step(&self, r: &HermitianMatrix, t: f64) -> Result<Option<HermitianMatrix>, SolverError> {
        let n = r.dim();
        let l = r.sqrt_psd()?;
        let lm = l.as_matrix();
        let inner = &HermitianMatrix::identity(n) + &r.congruence(self.root.as_matrix());
        let Some(inner_inv) = inner.inverse_pd() else {
            return Ok(None);
        };
        // G = Q (I + Q R Q)^{-1} Q in scaled coordinates
        let g = inner_inv.congruence(self.root.as_matrix()).congruence(lm);
        let gm = g.as_matrix();
        let slacks = self.slacks(r);
        let scaled: Vec<HermitianMatrix> = self.constraints.iter().map(|(a, _)| a.congruence(lm)).collect();

        let mut grad_matrix = gm * C64::new(t, 0.0) + CMatrix::identity(n, n);
        for (a, s) in scaled.iter().zip(&slacks) {
            grad_matrix -= a.as_matrix() * C64::new(1.0 / s, 0.0);
        }
        let dim = self.basis.len();
        let grad = DVector::from_fn(dim, |a, _| self.basis[a].pair(&grad_matrix));
        let pairs: Vec<Vec<f64>> = scaled
            .iter()
            .map(|a| self.basis.iter().map(|e| e.pair(a.as_matrix())).collect())
            .collect();
        let mut hess = DMatrix::zeros(dim, dim);
        for (a, ea) in self.basis.iter().enumerate() {
            let geg = ea.sandwich(gm, gm);
            for (b, eb) in self.basis.iter().enumerate().skip(a) {
                let mut h = t * eb.pair(&geg);
                if a == b {
                    h += ea.norm_sq();
                }
                for (p, s) in pairs.iter().zip(&slacks) {
                    h += p[a] * p[b] / (s * s);
                }
                hess[(a, b)] = h;
                hess[(b, a)] = h;
            }
        }
        let Some(chol) = hess.cholesky() else {
            return Ok(None);
        };
        let step = chol.solve(&grad);
        let decrement = grad.dot(&step);
        if decrement <= 1e-14 {
            return Ok(None);
        }
        let mut dz = CMatrix::zeros(n, n);
        for (e, &s) in self.basis.iter().zip(step.iter()) {
            e.add_to(&mut dz, s);
        }
        let dz = HermitianMatrix::new(dz)?;
        // R + s dR stays positive definite while I + s dZ does
        let min = dz.min_eigenvalue()?;
        let mut size: f64 = if min < 0.0 { (0.99 / -min).min(1.0) } else { 1.0 };
        let dr = dz.congruence(lm);
        let base = self.value(r, t).unwrap_or(f64::NEG_INFINITY);
        while size > 1e-12 {
            let cand = r + &dr.scale(size);
            if let Some(v) = self.value(&cand, t) {
                if v >= base + 0.25 * size * decrement {
                    return Ok(Some(cand));
                }
            }
            size *= 0.5;
        }
        Ok(None)
    }
}
