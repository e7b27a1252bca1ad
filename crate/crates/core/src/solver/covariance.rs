//! Optimal covariance for fixed multipliers.
//!
//! For `S = mu1 I + sum_k mu2k W2k` and `W_mu = S^{1/2}`, the maximizer of
//! the Lagrangian is `W_mu^+ [sum_{lambda > 1} (1 - 1/lambda) u u^H] W_mu^+`
//! over the eigenpairs of `W_mu^+ W1 W_mu^+`. When `S` is singular the
//! problem is solved on `range(S)` and embedded back with zero off-range
//! blocks.

#[allow(unused_imports)] // inherent float methods need std
use num_traits::Float;
use alloc::vec::Vec;

use crate::linalg::{CMatrix, HermitianMatrix, Tolerances, C64};
use crate::problem::{DualVariables, ProblemInstance, User};

use super::SolverError;

/// `R(mu)` together with the quantities the dual search needs.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEvaluation {
    pub covariance: HermitianMatrix,
    /// `sum_{lambda > 1} ln lambda`, in nats.
    pub capacity_nats: f64,
    pub trace: f64,
    pub interference: Vec<f64>,
}

/// Precomputed eigenbasis of `S2 = sum_k mu2k W2k` for a fixed interference
/// multiplier vector, so each power multiplier costs one small eigenproblem.
#[derive(Debug, Clone)]
pub(crate) struct DualContext<'a> {
    users: &'a [User],
    basis: CMatrix,
    spectrum: Vec<f64>,
    /// `V^H W1 V` in the eigenbasis of `S2`.
    signal: CMatrix,
    singular: bool,
    contained: bool,
}

impl<'a> DualContext<'a> {
    pub fn new(
        w1: &HermitianMatrix,
        users: &'a [User],
        mu2: &[f64],
        tol: &Tolerances,
    ) -> Result<Self, SolverError> {
        let m = w1.dim();
        let s2 = users
            .iter()
            .zip(mu2)
            .filter(|(_, &mu)| mu > 0.0)
            .fold(HermitianMatrix::zeros(m), |acc, (u, &mu)| &acc + &u.gram.scale(mu));
        let eig = s2.eigh()?;
        let cutoff = tol.rank * eig.abs_max();
        let spectrum: Vec<f64> = eig
            .eigenvalues
            .iter()
            .map(|&d| if d > cutoff { d } else { 0.0 })
            .collect();
        let basis = eig.eigenvectors;
        let mut signal = basis.adjoint() * w1.as_matrix() * &basis;
        let singular = spectrum.contains(&0.0);
        let mut contained = true;
        if singular {
            let w1_max = w1.max_eigenvalue()?.max(0.0);
            let leak = (0..m)
                .filter(|&i| spectrum[i] == 0.0)
                .flat_map(|i| (0..m).map(move |j| (i, j)))
                .fold(0.0_f64, |acc, (i, j)| acc.max(signal[(i, j)].norm()));
            contained = leak <= tol.rank * (1.0 + w1_max);
            if contained {
                for i in (0..m).filter(|&i| spectrum[i] == 0.0) {
                    for j in 0..m {
                        signal[(i, j)] = C64::new(0.0, 0.0);
                        signal[(j, i)] = C64::new(0.0, 0.0);
                    }
                }
            }
        }
        Ok(Self {
            users,
            basis,
            spectrum,
            signal,
            singular,
            contained,
        })
    }

    /// Whether a zero power multiplier is admissible for these interference
    /// multipliers.
    pub fn zero_power_admissible(&self) -> bool {
        !self.singular || self.contained
    }

    pub fn evaluate(&self, mu1: f64) -> Result<DualEvaluation, SolverError> {
        let m = self.spectrum.len();
        let idx: Vec<usize> = (0..m).filter(|&i| mu1 + self.spectrum[i] > 0.0).collect();
        if idx.is_empty() {
            return Err(SolverError::ZeroDuals);
        }
        if mu1 == 0.0 && !self.zero_power_admissible() {
            return Err(SolverError::InconsistentZeroPowerMultiplier);
        }
        let scale: Vec<f64> = idx
            .iter()
            .map(|&i| 1.0 / (mu1 + self.spectrum[i]).sqrt())
            .collect();
        let r = idx.len();
        let whitened = HermitianMatrix::from_symmetrized(CMatrix::from_fn(r, r, |a, b| {
            self.signal[(idx[a], idx[b])] * (scale[a] * scale[b])
        }));
        let eig = whitened.eigh()?;
        let keep: Vec<usize> = (0..r).filter(|&j| eig.eigenvalues[j] > 1.0).collect();
        let capacity_nats = keep.iter().map(|&j| eig.eigenvalues[j].ln()).sum();
        // X = V_r D U_keep, columns are the transmit directions
        let x = CMatrix::from_fn(m, keep.len(), |row, col| {
            let j = keep[col];
            (0..r)
                .map(|a| self.basis[(row, idx[a])] * eig.eigenvectors[(a, j)] * scale[a])
                .sum()
        });
        let mut weighted = x.clone();
        let mut trace = 0.0;
        for (col, &j) in keep.iter().enumerate() {
            let w = 1.0 - 1.0 / eig.eigenvalues[j];
            trace += w * x.column(col).norm_squared();
            weighted.column_mut(col).scale_mut(w);
        }
        let covariance = HermitianMatrix::from_symmetrized(weighted * x.adjoint());
        let interference = self
            .users
            .iter()
            .map(|u| u.gram.trace_product(&covariance))
            .collect();
        Ok(DualEvaluation {
            covariance,
            capacity_nats,
            trace,
            interference,
        })
    }
}

/// `R(mu)` for the given multipliers.
///
/// Fails with [`SolverError::ZeroDuals`] when `mu1 I + sum mu2k W2k`
/// vanishes, and with [`SolverError::InconsistentZeroPowerMultiplier`] when
/// `mu1 = 0` while the interference null space is not contained in the null
/// space of the main channel.
pub fn covariance_for_duals(
    instance: &ProblemInstance,
    duals: &DualVariables,
) -> Result<HermitianMatrix, SolverError> {
    Ok(evaluate_duals(instance, duals, &Tolerances::DEFAULT)?.covariance)
}

pub fn evaluate_duals(
    instance: &ProblemInstance,
    duals: &DualVariables,
    tol: &Tolerances,
) -> Result<DualEvaluation, SolverError> {
    check_duals(instance, duals)?;
    DualContext::new(instance.signal_gram(), instance.users(), &duals.interference, tol)?
        .evaluate(duals.power)
}

fn check_duals(instance: &ProblemInstance, duals: &DualVariables) -> Result<(), SolverError> {
    if duals.interference.len() != instance.num_users() {
        return Err(SolverError::InvalidDuals);
    }
    let ok = |x: f64| x >= 0.0 && x.is_finite();
    if !ok(duals.power) || !duals.interference.iter().all(|&x| ok(x)) {
        return Err(SolverError::InvalidDuals);
    }
    Ok(())
}
