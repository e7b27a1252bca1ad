//! Dense Hermitian linear algebra with tolerance-aware rank and PSD semantics.
//!
//! Every spectral decision (rank, null space, pseudo-inverse cutoff, positive
//! part) is made against a [`Tolerances`] record. The plain methods use
//! [`Tolerances::DEFAULT`]; the `*_with` variants take an explicit record.

#[allow(unused_imports)] // inherent float methods need std
use num_traits::Float;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use nalgebra::linalg::{Cholesky, SymmetricEigen};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

const EIGEN_MAX_SWEEPS_PER_DIM: usize = 1000;

/// Numerical thresholds shared by every spectral decision in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative eigenvalue cutoff for rank and null-space decisions.
    pub rank: f64,
    /// Relative tolerance on negative eigenvalues of matrices that should be PSD.
    pub psd: f64,
    /// Reconstruction tolerance per unit dimension.
    pub recon: f64,
}

impl Tolerances {
    pub const DEFAULT: Self = Self {
        rank: 1e-10,
        psd: 1e-9,
        recon: 1e-9,
    };

    /// Reconstruction tolerance for an `m x m` problem.
    pub fn recon_for(&self, dim: usize) -> f64 {
        self.recon * dim.max(1) as f64
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("eigensolver did not converge on a {dim}x{dim} matrix (condition estimate {cond_estimate:e})")]
    NoConvergence { dim: usize, cond_estimate: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is empty")]
    Empty,
    #[error("matrix has a non-finite entry")]
    NonFinite,
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("eigenvalue must be positive, got {0}")]
    NonPositiveEigenvalue(f64),
    #[error("vector must have unit norm, got norm {0}")]
    NotUnitVector(f64),
}

/// Complex Hermitian matrix. Construction symmetrizes the input, so
/// `entry(i, j) == entry(j, i).conj()` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix; column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: CMatrix,
}

fn symmetrize(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(m[(i, i)].re, 0.0)
        } else if i < j {
            (m[(i, j)] + m[(j, i)].conj()) * 0.5
        } else {
            ((m[(j, i)] + m[(i, j)].conj()) * 0.5).conj()
        }
    })
}

impl HermitianMatrix {
    /// Wraps a square matrix, replacing it by its Hermitian part `(A + A^H) / 2`.
    pub fn new(m: CMatrix) -> Result<Self, LinalgError> {
        if m.nrows() != m.ncols() {
            return Err(LinalgError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(LinalgError::Empty);
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self(symmetrize(&m)))
    }

    /// Largest entrywise deviation of `m` from its Hermitian part.
    pub fn hermitian_deviation(m: &CMatrix) -> f64 {
        let n = m.nrows().min(m.ncols());
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub(crate) fn from_symmetrized(m: CMatrix) -> Self {
        Self(symmetrize(&m))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    /// Builds a Hermitian matrix from real row-major entries.
    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self, LinalgError> {
        if entries.len() != dim * dim {
            return Err(LinalgError::DimensionMismatch {
                left: entries.len(),
                right: dim * dim,
            });
        }
        Self::new(CMatrix::from_fn(dim, dim, |i, j| {
            C64::new(entries[i * dim + j], 0.0)
        }))
    }

    /// `v v^H`.
    pub fn outer(v: &CVector) -> Self {
        Self::from_symmetrized(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// `Re tr(self * other)`, real for a pair of Hermitian matrices.
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// `v^H A v`.
    pub fn quadratic_form(&self, v: &CVector) -> f64 {
        (v.adjoint() * &self.0 * v)[(0, 0)].re
    }

    /// `X A X^H` for any `X` with `dim` columns.
    pub fn congruence(&self, x: &CMatrix) -> HermitianMatrix {
        Self::from_symmetrized(x * &self.0 * x.adjoint())
    }

    pub fn scale(&self, s: f64) -> HermitianMatrix {
        Self(&self.0 * C64::new(s, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &HermitianMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).norm()))
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn eigh(&self) -> Result<EigenDecomposition, LinalgError> {
        let dim = self.dim();
        let eig = SymmetricEigen::try_new(
            self.0.clone(),
            f64::EPSILON,
            EIGEN_MAX_SWEEPS_PER_DIM * dim.max(1),
        )
        .ok_or_else(|| LinalgError::NoConvergence {
            dim,
            cond_estimate: self.gershgorin_condition(),
        })?;
        let mut order: Vec<usize> = (0..dim).collect();
        // stable: ties keep solver order
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(core::cmp::Ordering::Equal)
        });
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = CMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(EigenDecomposition {
            eigenvalues,
            eigenvectors,
        })
    }

    fn gershgorin_condition(&self) -> f64 {
        let n = self.dim();
        let mut hi: f64 = 0.0;
        let mut lo = f64::INFINITY;
        for i in 0..n {
            let radius: f64 = (0..n).filter(|&j| j != i).map(|j| self.0[(i, j)].norm()).sum();
            let d = self.0[(i, i)].re.abs();
            hi = hi.max(d + radius);
            lo = lo.min(d - radius);
        }
        if lo > 0.0 {
            hi / lo
        } else {
            f64::INFINITY
        }
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>, LinalgError> {
        Ok(self.eigh()?.eigenvalues)
    }

    pub fn max_eigenvalue(&self) -> Result<f64, LinalgError> {
        Ok(self.eigh()?.max_eigenvalue())
    }

    pub fn min_eigenvalue(&self) -> Result<f64, LinalgError> {
        Ok(self.eigh()?.min_eigenvalue())
    }

    pub fn pinv(&self) -> Result<HermitianMatrix, LinalgError> {
        self.pinv_with(&Tolerances::DEFAULT)
    }

    /// Spectral pseudo-inverse: eigenvalues above the rank cutoff are
    /// inverted, the rest are zeroed.
    pub fn pinv_with(&self, tol: &Tolerances) -> Result<HermitianMatrix, LinalgError> {
        let eig = self.eigh()?;
        let cutoff = tol.rank * eig.abs_max().max(1.0);
        Ok(eig.map(|l| if l.abs() > cutoff { 1.0 / l } else { 0.0 }))
    }

    pub fn positive_part(&self) -> Result<HermitianMatrix, LinalgError> {
        self.positive_part_with(&Tolerances::DEFAULT)
    }

    /// Keeps the eigenmodes whose eigenvalue exceeds `tol.rank` times the
    /// spectral radius.
    pub fn positive_part_with(&self, tol: &Tolerances) -> Result<HermitianMatrix, LinalgError> {
        let eig = self.eigh()?;
        let cutoff = tol.rank * eig.abs_max();
        Ok(eig.map(|l| if l > cutoff { l } else { 0.0 }))
    }

    pub fn sqrt_psd(&self) -> Result<HermitianMatrix, LinalgError> {
        self.sqrt_psd_with(&Tolerances::DEFAULT)
    }

    pub fn sqrt_psd_with(&self, tol: &Tolerances) -> Result<HermitianMatrix, LinalgError> {
        let eig = self.eigh()?;
        eig.check_psd(tol)?;
        Ok(eig.map(|l| l.max(0.0).sqrt()))
    }

    pub fn rank(&self) -> Result<usize, LinalgError> {
        self.rank_with(&Tolerances::DEFAULT)
    }

    /// Number of eigenvalues above `tol.rank * max(lambda_max, 1)`.
    pub fn rank_with(&self, tol: &Tolerances) -> Result<usize, LinalgError> {
        Ok(self.eigh()?.rank(tol))
    }

    pub fn is_psd_with(&self, tol: &Tolerances) -> Result<bool, LinalgError> {
        Ok(self.eigh()?.check_psd(tol).is_ok())
    }

    pub fn nullspace_contained(&self, other: &HermitianMatrix) -> Result<bool, LinalgError> {
        self.nullspace_contained_with(other, &Tolerances::DEFAULT)
    }

    /// Whether `N(self) ⊆ N(other)` for PSD `self` and `other`, tested by the
    /// norm of `other` applied to the projector onto the null space of `self`.
    pub fn nullspace_contained_with(
        &self,
        other: &HermitianMatrix,
        tol: &Tolerances,
    ) -> Result<bool, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        let eig = self.eigh()?;
        let null = eig.null_basis(eig.rank_cutoff(tol));
        if null.ncols() == 0 {
            return Ok(true);
        }
        let projector = &null * null.adjoint();
        let other_max = other.max_eigenvalue()?.max(0.0);
        let leak = (&other.0 * projector)
            .iter()
            .fold(0.0_f64, |acc, z| acc.max(z.norm()));
        Ok(leak <= tol.rank * (1.0 + other_max))
    }

    /// Inverse of a positive definite matrix via Cholesky, `None` when the
    /// factorization breaks down.
    pub fn inverse_pd(&self) -> Option<HermitianMatrix> {
        Some(Self::from_symmetrized(self.cholesky()?.inverse()))
    }

    // Complex square roots never fail, so a negative pivot shows up as a
    // non-real diagonal entry of the factor rather than as `None`.
    fn cholesky(&self) -> Option<Cholesky<C64, nalgebra::Dyn>> {
        let chol = Cholesky::new(self.0.clone())?;
        let l = chol.l_dirty();
        let ok = (0..self.dim()).all(|i| {
            let d = l[(i, i)];
            d.re > 0.0 && d.re.is_finite() && d.im.abs() <= 1e-12 * d.re
        });
        ok.then_some(chol)
    }

    /// `ln det` of a positive definite matrix via Cholesky.
    pub fn log_det_pd(&self) -> Option<f64> {
        let chol = self.cholesky()?;
        let l = chol.l_dirty();
        Some((0..self.dim()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
    }
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn abs_max(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |acc, l| acc.max(l.abs()))
    }

    pub fn eigenvector(&self, i: usize) -> CVector {
        self.eigenvectors.column(i).into_owned()
    }

    /// Eigenvalue cutoff used by rank and null-space decisions.
    pub fn rank_cutoff(&self, tol: &Tolerances) -> f64 {
        tol.rank * self.max_eigenvalue().max(1.0)
    }

    pub fn rank(&self, tol: &Tolerances) -> usize {
        let cutoff = self.rank_cutoff(tol);
        self.eigenvalues.iter().filter(|&&l| l > cutoff).count()
    }

    fn check_psd(&self, tol: &Tolerances) -> Result<(), LinalgError> {
        let min = self.min_eigenvalue();
        if min < -tol.psd * self.abs_max() {
            return Err(LinalgError::NotPsd {
                min_eigenvalue: min,
            });
        }
        Ok(())
    }

    /// Columns of eigenvectors with eigenvalue at or below `cutoff`.
    pub fn null_basis(&self, cutoff: f64) -> CMatrix {
        self.select_columns(|l| l <= cutoff)
    }

    /// Columns of eigenvectors with eigenvalue above `cutoff`.
    pub fn range_basis(&self, cutoff: f64) -> CMatrix {
        self.select_columns(|l| l > cutoff)
    }

    fn select_columns(&self, keep: impl Fn(f64) -> bool) -> CMatrix {
        let idx: Vec<usize> = (0..self.dim())
            .filter(|&i| keep(self.eigenvalues[i]))
            .collect();
        CMatrix::from_fn(self.dim(), idx.len(), |r, c| self.eigenvectors[(r, idx[c])])
    }

    /// `sum_i f(lambda_i) u_i u_i^H`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        self.map_indexed(|_, l| f(l))
    }

    /// Like [`map`](Self::map), with the eigenvalue position passed along.
    pub fn map_indexed(&self, f: impl Fn(usize, f64) -> f64) -> HermitianMatrix {
        let n = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for (c, &l) in self.eigenvalues.iter().enumerate() {
            let s = C64::new(f(c, l), 0.0);
            for r in 0..n {
                scaled[(r, c)] *= s;
            }
        }
        HermitianMatrix::from_symmetrized(scaled * self.eigenvectors.adjoint())
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map(|l| l)
    }
}

/// `(I - W^{-1})_+` for the rank-one matrix `W = lambda u u^H`, which equals
/// `(1 - 1/lambda)_+ u u^H`: the singular modes of `W` drop out.
pub fn rank1_positive_part_shifted(
    lambda: f64,
    u: &CVector,
    tol: &Tolerances,
) -> Result<HermitianMatrix, LinalgError> {
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(LinalgError::NonPositiveEigenvalue(lambda));
    }
    let norm = u.norm();
    if (norm - 1.0).abs() > tol.recon_for(u.len()) {
        return Err(LinalgError::NotUnitVector(norm));
    }
    let weight = (1.0 - 1.0 / lambda).max(0.0);
    Ok(HermitianMatrix::outer(u).scale(weight))
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn close(a: &HermitianMatrix, b: &HermitianMatrix, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol
    }

    #[test]
    fn construction_symmetrizes_exactly() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.3), C64::new(2.0, 1.0), C64::new(2.5, -0.5), c(3.0)],
        );
        let h = HermitianMatrix::new(m).unwrap();
        assert_eq!(h.entry(0, 1), h.entry(1, 0).conj());
        assert_eq!(h.entry(0, 0).im, 0.0);
        assert_eq!(h.entry(0, 1), C64::new(2.25, 0.75));
    }

    #[test]
    fn rejects_non_square_and_empty() {
        assert!(matches!(
            HermitianMatrix::new(CMatrix::zeros(2, 3)),
            Err(LinalgError::NotSquare { .. })
        ));
        assert_eq!(
            HermitianMatrix::new(CMatrix::zeros(0, 0)),
            Err(LinalgError::Empty)
        );
    }

    #[test]
    fn eigh_diagonal_sorted_descending() {
        let eig = HermitianMatrix::from_diagonal(&[1.0, 2.0]).eigh().unwrap();
        assert_eq!(eig.eigenvalues.len(), 2);
        assert!((eig.eigenvalues[0] - 2.0).abs() < 1e-15);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-15);
        assert!((eig.eigenvectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert!((eig.eigenvectors[(0, 1)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigh_identity() {
        let eig = HermitianMatrix::identity(3).eigh().unwrap();
        for l in eig.eigenvalues {
            assert!((l - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn eigh_two_by_two_closed_form() {
        // trace 4, det 3: eigenvalues 2 +- 1
        let a = HermitianMatrix::from_real_rows(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let eig = a.eigh().unwrap();
        assert!((eig.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-14);
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let top = eig.eigenvector(0);
        let overlap = (top[0] * s + top[1] * s).norm();
        assert!((overlap - 1.0).abs() < 1e-14);
        let bottom = eig.eigenvector(1);
        let overlap = (bottom[0] * s - bottom[1] * s).norm();
        assert!((overlap - 1.0).abs() < 1e-14);
        assert!(close(&eig.reconstruct(), &a, 1e-14));
    }

    #[test]
    fn pinv_fixtures() {
        let p = HermitianMatrix::from_diagonal(&[2.0, 0.0]).pinv().unwrap();
        assert!(close(&p, &HermitianMatrix::from_diagonal(&[0.5, 0.0]), 1e-15));
        let p = HermitianMatrix::identity(4).pinv().unwrap();
        assert!(close(&p, &HermitianMatrix::identity(4), 1e-15));
        assert!(HermitianMatrix::zeros(3).pinv().unwrap().is_zero());

        let s = core::f64::consts::FRAC_1_SQRT_2;
        let u = CVector::from_vec(alloc::vec![c(s), c(s)]);
        let a = HermitianMatrix::outer(&u).scale(4.0);
        let p = a.pinv().unwrap();
        assert!(close(&p, &HermitianMatrix::outer(&u).scale(0.25), 1e-15));
        let apa = HermitianMatrix::from_symmetrized(a.as_matrix() * p.as_matrix() * a.as_matrix());
        let pap = HermitianMatrix::from_symmetrized(p.as_matrix() * a.as_matrix() * p.as_matrix());
        assert!(close(&apa, &a, 1e-14));
        assert!(close(&pap, &p, 1e-14));
    }

    #[test]
    fn positive_part_fixtures() {
        let p = HermitianMatrix::from_diagonal(&[1.0, -1.0])
            .positive_part()
            .unwrap();
        assert!(close(&p, &HermitianMatrix::from_diagonal(&[1.0, 0.0]), 1e-15));

        let swap = HermitianMatrix::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let expected = HermitianMatrix::from_real_rows(2, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!(close(&swap.positive_part().unwrap(), &expected, 1e-15));

        let psd = HermitianMatrix::from_real_rows(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        assert!(close(&psd.positive_part().unwrap(), &psd, 1e-14));
        assert!(HermitianMatrix::zeros(2).positive_part().unwrap().is_zero());
    }

    #[test]
    fn rank1_shifted_fixtures() {
        let tol = Tolerances::DEFAULT;
        let e1 = CVector::from_vec(alloc::vec![c(1.0), c(0.0)]);
        let r = rank1_positive_part_shifted(2.0, &e1, &tol).unwrap();
        assert!(close(&r, &HermitianMatrix::from_diagonal(&[0.5, 0.0]), 1e-15));
        assert!(rank1_positive_part_shifted(0.5, &e1, &tol).unwrap().is_zero());
        assert_eq!(
            rank1_positive_part_shifted(0.0, &e1, &tol),
            Err(LinalgError::NonPositiveEigenvalue(0.0))
        );
        let long = CVector::from_vec(alloc::vec![c(2.0), c(0.0)]);
        assert!(matches!(
            rank1_positive_part_shifted(2.0, &long, &tol),
            Err(LinalgError::NotUnitVector(_))
        ));

        let s = core::f64::consts::FRAC_1_SQRT_2;
        let u = CVector::from_vec(alloc::vec![c(s), c(s)]);
        let r = rank1_positive_part_shifted(4.0, &u, &tol).unwrap();
        let expected = HermitianMatrix::from_real_rows(2, &[0.375; 4]).unwrap();
        assert!(close(&r, &expected, 1e-15));
        // continuity check: positive part of I - pinv(W) restricted to range(u)
        let w = HermitianMatrix::outer(&u).scale(4.0);
        let proj = HermitianMatrix::outer(&u);
        let shifted = &proj - &w.pinv().unwrap();
        assert!(close(&shifted.positive_part().unwrap(), &expected, 1e-14));
    }

    #[test]
    fn sqrt_psd_fixtures() {
        let r = HermitianMatrix::from_diagonal(&[4.0, 9.0]).sqrt_psd().unwrap();
        assert!(close(&r, &HermitianMatrix::from_diagonal(&[2.0, 3.0]), 1e-15));
        assert!(HermitianMatrix::zeros(2).sqrt_psd().unwrap().is_zero());
        let a = HermitianMatrix::from_real_rows(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let r = a.sqrt_psd().unwrap();
        let sq = HermitianMatrix::from_symmetrized(r.as_matrix() * r.as_matrix());
        assert!(close(&sq, &a, 1e-14));
        assert!(matches!(
            HermitianMatrix::from_diagonal(&[1.0, -1.0]).sqrt_psd(),
            Err(LinalgError::NotPsd { .. })
        ));
    }

    #[test]
    fn rank_fixtures() {
        assert_eq!(HermitianMatrix::identity(3).rank().unwrap(), 3);
        assert_eq!(HermitianMatrix::zeros(3).rank().unwrap(), 0);
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let u = CVector::from_vec(alloc::vec![c(s), C64::new(0.0, s)]);
        assert_eq!(HermitianMatrix::outer(&u).rank().unwrap(), 1);
    }

    #[test]
    fn nullspace_containment_fixtures() {
        let a = HermitianMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(a.nullspace_contained(&a).unwrap());
        assert!(!a
            .nullspace_contained(&HermitianMatrix::identity(2))
            .unwrap());
        let b = HermitianMatrix::from_real_rows(2, &[3.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(HermitianMatrix::identity(2).nullspace_contained(&b).unwrap());
        assert!(matches!(
            a.nullspace_contained(&HermitianMatrix::identity(3)),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cholesky_helpers() {
        let a = HermitianMatrix::from_real_rows(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        assert!((a.log_det_pd().unwrap() - 3.0_f64.ln()).abs() < 1e-14);
        let inv = a.inverse_pd().unwrap();
        let prod = HermitianMatrix::from_symmetrized(a.as_matrix() * inv.as_matrix());
        assert!(close(&prod, &HermitianMatrix::identity(2), 1e-14));
        assert!(HermitianMatrix::from_diagonal(&[1.0, -1.0])
            .inverse_pd()
            .is_none());
    }
}
