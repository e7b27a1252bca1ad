//! Problem data, objective, and constraint bookkeeping.
//!
//! A [`ProblemInstance`] holds the main-channel Gram matrix, one
//! [`User`] per protected receiver with its interference cap, and the total
//! transmit power budget. Noise is normalized to unit variance, so the
//! objective is `ln det(I + W R)` in nats.

#[allow(unused_imports)] // inherent float methods need std
use num_traits::Float;
use alloc::vec::Vec;
use core::fmt;


use crate::linalg::{CMatrix, HermitianMatrix, LinalgError, Tolerances};

/// Absolute tolerance on trace constraints.
pub const FEAS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{what} has dimension {found}, expected {expected}")]
    Dimension {
        what: &'static str,
        found: usize,
        expected: usize,
    },
    #[error("total power must be positive and finite, got {0}")]
    InvalidTotalPower(f64),
    #[error("interference cap of user {user} must be non-negative and finite, got {cap}")]
    InvalidCap { user: usize, cap: f64 },
    #[error("{what} is not positive semidefinite")]
    NotPsd { what: &'static str },
    #[error("user index {index} out of range ({count} users)")]
    UserIndex { index: usize, count: usize },
    #[error("aggregation requires at least one user")]
    NoUsers,
}

/// A protected receiver: its channel Gram matrix and interference cap.
#[derive(Debug, Clone, PartialEq)]
pub struct User {
    pub gram: HermitianMatrix,
    pub cap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    signal_gram: HermitianMatrix,
    users: Vec<User>,
    total_power: f64,
}

/// Lagrange multipliers of the power and interference constraints.
///
/// An infinite interference multiplier marks a zero-forcing constraint
/// (cap zero) enforced by restricting the signal to the interferer's null
/// space, where no finite multiplier exists in general.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVariables {
    pub power: f64,
    pub interference: Vec<f64>,
}

impl DualVariables {
    pub fn zeros(users: usize) -> Self {
        Self {
            power: 0.0,
            interference: alloc::vec![0.0; users],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    Psd,
    TotalPower,
    Interference(usize),
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Psd => f.write_str("psd"),
            Constraint::TotalPower => f.write_str("total_power"),
            Constraint::Interference(k) => write!(f, "interference_{}", k + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub constraint: Constraint,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Where a [`Solution`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Waterfilling,
    General,
    ZeroCapacity,
    /// Full-rank channels, power budget redundant.
    FullRankInterferenceLimited,
    /// Full-rank main channel, rank-one interferer.
    Rank1Interferer,
    /// Rank-one main channel, only the interference cap binds.
    BeamformingInterferenceLimited,
    /// Rank-one main channel, only the power budget binds.
    BeamformingPowerLimited,
    /// Rank-one main channel, both constraints bind.
    BeamformingBothActive,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Waterfilling,
        Method::General,
        Method::ZeroCapacity,
        Method::FullRankInterferenceLimited,
        Method::Rank1Interferer,
        Method::BeamformingInterferenceLimited,
        Method::BeamformingPowerLimited,
        Method::BeamformingBothActive,
        Method::Oracle,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Waterfilling => "waterfilling",
            Method::General => "general",
            Method::ZeroCapacity => "zero-capacity",
            Method::FullRankInterferenceLimited => "full-rank-interference-limited",
            Method::Rank1Interferer => "rank1-interferer",
            Method::BeamformingInterferenceLimited => "beamforming-interference-limited",
            Method::BeamformingPowerLimited => "beamforming-power-limited",
            Method::BeamformingBothActive => "beamforming-both-active",
            Method::Oracle => "oracle",
        }
    }

    pub fn parse(tag: &str) -> Option<Method> {
        Method::ALL.iter().copied().find(|m| m.as_str() == tag)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Optimality audit of a candidate covariance against its multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct KktResiduals {
    /// `max |M R|` with `M` recovered from the stationarity equation.
    pub stationarity: f64,
    pub comp_slack_power: f64,
    pub comp_slack_interference: Vec<f64>,
    /// Most negative eigenvalue of `M`, zero when `M` is PSD.
    pub dual_feas: f64,
    /// Largest constraint excess, including negative eigenvalues of `R`.
    pub primal_feas: f64,
}

impl KktResiduals {
    /// Largest residual magnitude over all groups.
    pub fn worst(&self) -> f64 {
        self.comp_slack_interference
            .iter()
            .fold(
                self.stationarity
                    .max(self.comp_slack_power)
                    .max(self.dual_feas.abs())
                    .max(self.primal_feas),
                |acc, &x| acc.max(x),
            )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveConstraints {
    pub power: bool,
    pub interference: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub covariance: HermitianMatrix,
    pub capacity_nats: f64,
    pub duals: DualVariables,
    pub active: ActiveConstraints,
    pub kkt: KktResiduals,
    pub method: Method,
}

impl Solution {
    pub fn capacity_bits(&self) -> f64 {
        self.capacity_nats / core::f64::consts::LN_2
    }
}

/// `H^H H`, exactly Hermitian PSD by construction.
pub fn gram_from_channel(channel: &CMatrix) -> Result<HermitianMatrix, LinalgError> {
    if channel.nrows() == 0 || channel.ncols() == 0 {
        return Err(LinalgError::Empty);
    }
    HermitianMatrix::new(channel.adjoint() * channel)
}

impl ProblemInstance {
    pub fn new(
        signal_gram: HermitianMatrix,
        users: Vec<User>,
        total_power: f64,
    ) -> Result<Self, ProblemError> {
        Self::new_with(signal_gram, users, total_power, &Tolerances::DEFAULT)
    }

    pub fn new_with(
        signal_gram: HermitianMatrix,
        users: Vec<User>,
        total_power: f64,
        tol: &Tolerances,
    ) -> Result<Self, ProblemError> {
        let m = signal_gram.dim();
        if total_power <= 0.0 || !total_power.is_finite() {
            return Err(ProblemError::InvalidTotalPower(total_power));
        }
        if !signal_gram.is_psd_with(tol)? {
            return Err(ProblemError::NotPsd {
                what: "signal Gram matrix",
            });
        }
        for (k, user) in users.iter().enumerate() {
            if user.gram.dim() != m {
                return Err(ProblemError::Dimension {
                    what: "interference Gram matrix",
                    found: user.gram.dim(),
                    expected: m,
                });
            }
            if user.cap < 0.0 || !user.cap.is_finite() {
                return Err(ProblemError::InvalidCap {
                    user: k,
                    cap: user.cap,
                });
            }
            if !user.gram.is_psd_with(tol)? {
                return Err(ProblemError::NotPsd {
                    what: "interference Gram matrix",
                });
            }
        }
        Ok(Self {
            signal_gram,
            users,
            total_power,
        })
    }

    pub(crate) fn new_unchecked(
        signal_gram: HermitianMatrix,
        users: Vec<User>,
        total_power: f64,
    ) -> Self {
        Self {
            signal_gram,
            users,
            total_power,
        }
    }

    pub fn dim(&self) -> usize {
        self.signal_gram.dim()
    }

    pub fn signal_gram(&self) -> &HermitianMatrix {
        &self.signal_gram
    }

    pub fn users(&self) -> &[User] {
        &self.users
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    pub fn with_total_power(&self, total_power: f64) -> Result<Self, ProblemError> {
        if total_power <= 0.0 || !total_power.is_finite() {
            return Err(ProblemError::InvalidTotalPower(total_power));
        }
        Ok(Self {
            total_power,
            ..self.clone()
        })
    }

    pub fn with_cap(&self, user: usize, cap: f64) -> Result<Self, ProblemError> {
        self.check_user(user)?;
        if cap < 0.0 || !cap.is_finite() {
            return Err(ProblemError::InvalidCap { user, cap });
        }
        let mut out = self.clone();
        out.users[user].cap = cap;
        Ok(out)
    }

    fn check_user(&self, index: usize) -> Result<(), ProblemError> {
        if index >= self.users.len() {
            return Err(ProblemError::UserIndex {
                index,
                count: self.users.len(),
            });
        }
        Ok(())
    }

    fn check_dim(&self, r: &HermitianMatrix) -> Result<(), ProblemError> {
        if r.dim() != self.dim() {
            return Err(ProblemError::Dimension {
                what: "covariance",
                found: r.dim(),
                expected: self.dim(),
            });
        }
        Ok(())
    }

    /// Sum of all interference Gram matrices.
    pub fn interference_sum(&self) -> HermitianMatrix {
        self.users
            .iter()
            .fold(HermitianMatrix::zeros(self.dim()), |acc, u| &acc + &u.gram)
    }

    /// `ln det(I + W R)` in nats, evaluated through the eigenvalues of
    /// `W^{1/2} R W^{1/2}`.
    pub fn mutual_information(&self, r: &HermitianMatrix) -> Result<f64, ProblemError> {
        self.check_dim(r)?;
        let tol = Tolerances::DEFAULT;
        if !r.is_psd_with(&tol)? {
            return Err(ProblemError::NotPsd { what: "covariance" });
        }
        let root = self.signal_gram.sqrt_psd_with(&tol)?;
        let inner = r.congruence(root.as_matrix());
        Ok(inner
            .eigenvalues()?
            .iter()
            .map(|&l| l.max(0.0).ln_1p())
            .sum())
    }

    /// `tr(W_k R)`.
    pub fn interference_power(&self, r: &HermitianMatrix, user: usize) -> Result<f64, ProblemError> {
        self.check_user(user)?;
        self.check_dim(r)?;
        Ok(self.users[user].gram.trace_product(r))
    }

    pub fn check_feasibility(&self, r: &HermitianMatrix) -> Result<FeasibilityReport, ProblemError> {
        self.check_feasibility_with(r, &Tolerances::DEFAULT, FEAS_TOL)
    }

    pub fn check_feasibility_with(
        &self,
        r: &HermitianMatrix,
        tol: &Tolerances,
        feas_tol: f64,
    ) -> Result<FeasibilityReport, ProblemError> {
        self.check_dim(r)?;
        let mut violations = Vec::new();
        let eig = r.eigh()?;
        let min = eig.min_eigenvalue();
        if min < -tol.psd * eig.abs_max().max(1.0) {
            violations.push(Violation {
                constraint: Constraint::Psd,
                excess: -min,
            });
        }
        let excess = r.trace() - self.total_power;
        if excess > feas_tol {
            violations.push(Violation {
                constraint: Constraint::TotalPower,
                excess,
            });
        }
        for (k, user) in self.users.iter().enumerate() {
            let excess = user.gram.trace_product(r) - user.cap;
            if excess > feas_tol {
                violations.push(Violation {
                    constraint: Constraint::Interference(k),
                    excess,
                });
            }
        }
        Ok(FeasibilityReport { violations })
    }

    /// Replaces the per-user caps by a single cap on the total interference
    /// `sum_k tr(W_k R) <= total_cap`.
    pub fn aggregate_total_ipc(&self, total_cap: f64) -> Result<Self, ProblemError> {
        if self.users.is_empty() {
            return Err(ProblemError::NoUsers);
        }
        if total_cap < 0.0 || !total_cap.is_finite() {
            return Err(ProblemError::InvalidCap {
                user: 0,
                cap: total_cap,
            });
        }
        Ok(Self {
            signal_gram: self.signal_gram.clone(),
            users: alloc::vec![User {
                gram: self.interference_sum(),
                cap: total_cap,
            }],
            total_power: self.total_power,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CVector, C64};
    use alloc::vec;

    fn user(gram: HermitianMatrix, cap: f64) -> User {
        User { gram, cap }
    }

    #[test]
    fn gram_fixtures() {
        let eye = CMatrix::identity(2, 2);
        assert_eq!(gram_from_channel(&eye).unwrap(), HermitianMatrix::identity(2));
        let row = CMatrix::from_row_slice(1, 2, &[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        assert_eq!(
            gram_from_channel(&row).unwrap(),
            HermitianMatrix::from_real_rows(2, &[1.0, 1.0, 1.0, 1.0]).unwrap()
        );
        let diag = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(2.0, 0.0)],
        );
        assert_eq!(
            gram_from_channel(&diag).unwrap(),
            HermitianMatrix::from_diagonal(&[1.0, 4.0])
        );
        assert_eq!(
            gram_from_channel(&CMatrix::zeros(0, 2)),
            Err(LinalgError::Empty)
        );
    }

    #[test]
    fn mutual_information_fixtures() {
        let inst = ProblemInstance::new(HermitianMatrix::identity(2), vec![], 2.0).unwrap();
        let c = inst.mutual_information(&HermitianMatrix::identity(2)).unwrap();
        assert!((c - 2.0 * 2.0_f64.ln()).abs() < 1e-14);
        assert_eq!(inst.mutual_information(&HermitianMatrix::zeros(2)).unwrap(), 0.0);

        let inst = ProblemInstance::new(HermitianMatrix::from_diagonal(&[4.0, 1.0]), vec![], 1.0)
            .unwrap();
        let c = inst
            .mutual_information(&HermitianMatrix::from_diagonal(&[0.875, 0.125]))
            .unwrap();
        assert!((c - (4.5_f64.ln() + 1.125_f64.ln())).abs() < 1e-14);
        assert!((c - 1.621860).abs() < 1e-6);

        assert!(matches!(
            inst.mutual_information(&HermitianMatrix::from_diagonal(&[1.0, -1.0])),
            Err(ProblemError::NotPsd { .. })
        ));
    }

    #[test]
    fn interference_power_fixtures() {
        let inst = ProblemInstance::new(
            HermitianMatrix::identity(2),
            vec![user(HermitianMatrix::identity(2), 1.0)],
            1.0,
        )
        .unwrap();
        let p = inst
            .interference_power(&HermitianMatrix::from_diagonal(&[1.0, 2.0]), 0)
            .unwrap();
        assert!((p - 3.0).abs() < 1e-15);
        assert!(matches!(
            inst.interference_power(&HermitianMatrix::identity(2), 1),
            Err(ProblemError::UserIndex { index: 1, count: 1 })
        ));

        let s = core::f64::consts::FRAC_1_SQRT_2;
        let u = CVector::from_vec(vec![C64::new(s, 0.0), C64::new(s, 0.0)]);
        let v = CVector::from_vec(vec![C64::new(s, 0.0), C64::new(-s, 0.0)]);
        let inst = ProblemInstance::new(
            HermitianMatrix::identity(2),
            vec![user(HermitianMatrix::outer(&u), 1.0)],
            1.0,
        )
        .unwrap();
        let p = inst.interference_power(&HermitianMatrix::outer(&v), 0).unwrap();
        assert!(p.abs() < 1e-15);

        let inst = ProblemInstance::new(
            HermitianMatrix::identity(2),
            vec![user(HermitianMatrix::from_diagonal(&[1.0, 4.0]), 1.0)],
            1.0,
        )
        .unwrap();
        let r = HermitianMatrix::from_real_rows(2, &[1.0, 0.25, 0.25, 0.0625])
            .unwrap()
            .scale(0.8);
        assert!((inst.interference_power(&r, 0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn feasibility_fixtures() {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let u = CVector::from_vec(vec![C64::new(s, 0.0), C64::new(s, 0.0)]);
        let w2 = HermitianMatrix::outer(&u);
        let inst = ProblemInstance::new(
            HermitianMatrix::identity(2),
            vec![user(w2.clone(), 0.5)],
            2.0,
        )
        .unwrap();
        assert!(inst
            .check_feasibility(&HermitianMatrix::zeros(2))
            .unwrap()
            .is_feasible());

        let over = HermitianMatrix::identity(2).scale(1.5);
        let report = inst.check_feasibility(&over).unwrap();
        assert_eq!(report.violations[0].constraint, Constraint::TotalPower);
        assert!((report.violations[0].excess - 1.0).abs() < 1e-14);

        let beam = HermitianMatrix::outer(&u).scale(2.0);
        let report = inst.check_feasibility(&beam).unwrap();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].constraint, Constraint::Interference(0));
        assert!((report.violations[0].excess - 1.5).abs() < 1e-14);
    }

    #[test]
    fn aggregation_fixtures() {
        let inst = ProblemInstance::new(
            HermitianMatrix::identity(2),
            vec![
                user(HermitianMatrix::from_diagonal(&[1.0, 0.0]), 0.5),
                user(HermitianMatrix::from_diagonal(&[0.0, 1.0]), 0.5),
            ],
            1.0,
        )
        .unwrap();
        let agg = inst.aggregate_total_ipc(2.0).unwrap();
        assert_eq!(agg.num_users(), 1);
        assert_eq!(agg.users()[0].gram, HermitianMatrix::identity(2));
        assert_eq!(agg.users()[0].cap, 2.0);

        let a = HermitianMatrix::from_real_rows(2, &[2.0, 1.0, 1.0, 1.0]).unwrap();
        let inst = ProblemInstance::new(
            HermitianMatrix::identity(2),
            vec![user(a.clone(), 1.0), user(a.clone(), 1.0)],
            1.0,
        )
        .unwrap();
        assert_eq!(inst.aggregate_total_ipc(1.0).unwrap().users()[0].gram, a.scale(2.0));

        let single = ProblemInstance::new(
            HermitianMatrix::identity(2),
            vec![user(a.clone(), 0.7)],
            1.0,
        )
        .unwrap();
        assert_eq!(single.aggregate_total_ipc(0.7).unwrap(), single);
    }

    #[test]
    fn validation_errors() {
        let eye = HermitianMatrix::identity(2);
        assert_eq!(
            ProblemInstance::new(eye.clone(), vec![], 0.0),
            Err(ProblemError::InvalidTotalPower(0.0))
        );
        assert!(matches!(
            ProblemInstance::new(eye.clone(), vec![user(eye.clone(), -1.0)], 1.0),
            Err(ProblemError::InvalidCap { user: 0, .. })
        ));
        assert!(matches!(
            ProblemInstance::new(eye.clone(), vec![user(HermitianMatrix::identity(3), 1.0)], 1.0),
            Err(ProblemError::Dimension { .. })
        ));
        assert!(matches!(
            ProblemInstance::new(HermitianMatrix::from_diagonal(&[1.0, -1.0]), vec![], 1.0),
            Err(ProblemError::NotPsd { .. })
        ));
        // zero cap with zero Gram is a vacuous constraint, not an error
        assert!(ProblemInstance::new(eye, vec![user(HermitianMatrix::zeros(2), 0.0)], 1.0).is_ok());
    }
}
