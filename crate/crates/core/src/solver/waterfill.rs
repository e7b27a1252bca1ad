#[allow(unused_imports)] // inherent float methods need std
use num_traits::Float;
use alloc::vec::Vec;

use crate::linalg::{HermitianMatrix, Tolerances};

use super::SolverError;

/// Water-filling over the eigenmodes of `W1` with total power `P_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillingResult {
    pub covariance: HermitianMatrix,
    /// `sum ln(lambda_i * level)` over the active modes.
    pub capacity_nats: f64,
    /// `1 / mu1`; zero when `W1 = 0`.
    pub level: f64,
    pub active_modes: usize,
}

pub fn waterfill(
    w1: &HermitianMatrix,
    total_power: f64,
    tol: &Tolerances,
) -> Result<WaterfillingResult, SolverError> {
    let eig = w1.eigh()?;
    let cutoff = eig.rank_cutoff(tol);
    let gains: Vec<f64> = eig
        .eigenvalues
        .iter()
        .copied()
        .take_while(|&l| l > cutoff)
        .collect();
    if gains.is_empty() {
        return Ok(WaterfillingResult {
            covariance: HermitianMatrix::zeros(w1.dim()),
            capacity_nats: 0.0,
            level: 0.0,
            active_modes: 0,
        });
    }
    let mut inv_sum: f64 = gains.iter().map(|l| 1.0 / l).sum();
    let mut n = gains.len();
    let mut level = (total_power + inv_sum) / n as f64;
    while n > 1 && level <= 1.0 / gains[n - 1] {
        inv_sum -= 1.0 / gains[n - 1];
        n -= 1;
        level = (total_power + inv_sum) / n as f64;
    }
    let covariance = eig.map_indexed(|i, _| {
        if i < n {
            level - 1.0 / gains[i]
        } else {
            0.0
        }
    });
    let capacity_nats = gains[..n].iter().map(|l| (l * level).ln()).sum();
    Ok(WaterfillingResult {
        covariance,
        capacity_nats,
        level,
        active_modes: n,
    })
}
