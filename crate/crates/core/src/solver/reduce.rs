//! Zero-forcing reduction for users whose interference cap is zero.
//!
//! `tr(W2k R) = 0` with `R` PSD forces `R` onto the null space of `W2k`, so
//! the problem is solved in the coordinates of the common null space of all
//! such users and embedded back.

use alloc::vec::Vec;

use crate::linalg::{CMatrix, HermitianMatrix, Tolerances};
use crate::problem::{DualVariables, ProblemInstance, User};

use super::SolverError;

#[derive(Debug, Clone)]
pub(crate) struct ZeroForcing {
    /// Orthonormal basis of the common null space, `m x n`.
    basis: CMatrix,
    kept: Vec<usize>,
    reduced: ProblemInstance,
}

/// Users with a zero cap whose channel is not identically zero.
pub(crate) fn zero_forcing_users(instance: &ProblemInstance, tol: &Tolerances) -> Result<Vec<usize>, SolverError> {
    let mut out = Vec::new();
    for (k, user) in instance.users().iter().enumerate() {
        if user.cap == 0.0 && user.gram.rank_with(tol)? > 0 {
            out.push(k);
        }
    }
    Ok(out)
}

/// `sum_{k in users} W2k`.
pub(crate) fn interference_sum_of(instance: &ProblemInstance, users: &[usize]) -> HermitianMatrix {
    users.iter().fold(HermitianMatrix::zeros(instance.dim()), |acc, &k| {
        &acc + &instance.users()[k].gram
    })
}

impl ZeroForcing {
    /// `None` when the zero-forcing users leave no room to transmit.
    pub fn new(
        instance: &ProblemInstance,
        zf: &[usize],
        tol: &Tolerances,
    ) -> Result<Option<Self>, SolverError> {
        let eig = interference_sum_of(instance, zf).eigh()?;
        let basis = eig.null_basis(eig.rank_cutoff(tol));
        if basis.ncols() == 0 {
            return Ok(None);
        }
        let project = |g: &HermitianMatrix| g.congruence(&basis.adjoint());
        let kept: Vec<usize> = (0..instance.num_users()).filter(|k| !zf.contains(k)).collect();
        let users = kept
            .iter()
            .map(|&k| {
                let u = &instance.users()[k];
                User {
                    gram: project(&u.gram),
                    cap: u.cap,
                }
            })
            .collect();
        let reduced = ProblemInstance::new_unchecked(
            project(instance.signal_gram()),
            users,
            instance.total_power(),
        );
        Ok(Some(Self {
            basis,
            kept,
            reduced,
        }))
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.reduced
    }

    /// Indices of the users that remain in the reduced problem.
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    /// `B R' B^H`.
    pub fn embed(&self, reduced: &HermitianMatrix) -> HermitianMatrix {
        reduced.congruence(&self.basis)
    }

    /// `B^H R B`.
    pub fn restrict(&self, full: &HermitianMatrix) -> HermitianMatrix {
        full.congruence(&self.basis.adjoint())
    }

    pub fn restrict_duals(&self, duals: &DualVariables) -> DualVariables {
        DualVariables {
            power: duals.power,
            interference: self.kept.iter().map(|&k| duals.interference[k]).collect(),
        }
    }

    /// Reduced multipliers for kept users, infinity for zero-forced ones.
    pub fn lift_duals(&self, reduced: &DualVariables, users: usize) -> DualVariables {
        let mut interference = alloc::vec![f64::INFINITY; users];
        for (pos, &k) in self.kept.iter().enumerate() {
            interference[k] = reduced.interference[pos];
        }
        DualVariables {
            power: reduced.power,
            interference,
        }
    }
}
