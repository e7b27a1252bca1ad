//! Seeded random instances for tests, benchmarks and the CLI `generate`
//! command.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods need std
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{CMatrix, HermitianMatrix, C64};
use crate::problem::{gram_from_channel, ProblemInstance, User};

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Circularly symmetric complex Gaussian matrix with unit-variance entries.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * s, im * s)
    })
}

/// Gram matrix of a `rank x dim` Gaussian channel; rank zero gives zero.
pub fn random_gram<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> HermitianMatrix {
    if rank == 0 {
        return HermitianMatrix::zeros(dim);
    }
    gram_from_channel(&complex_gaussian(rng, rank, dim)).expect("nonempty channel")
}

/// Ranges for [`random_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub dims: Vec<usize>,
    pub users: (usize, usize),
    /// Total power, sampled log-uniformly.
    pub total_power: (f64, f64),
    /// Interference caps, sampled uniformly.
    pub cap: (f64, f64),
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            dims: alloc::vec![2, 3, 4, 6, 8],
            users: (1, 3),
            total_power: (0.1, 100.0),
            cap: (0.0, 10.0),
        }
    }
}

/// Draws dimension, user count, ranks in `1..=m` for every Gram matrix,
/// and the power parameters.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, spec: &InstanceSpec) -> ProblemInstance {
    let m = spec.dims[rng.random_range(0..spec.dims.len())];
    let k = rng.random_range(spec.users.0..=spec.users.1);
    let rank = rng.random_range(1..=m);
    let w1 = random_gram(rng, m, rank);
    let users = (0..k)
        .map(|_| {
            let rank = rng.random_range(1..=m);
            User {
                gram: random_gram(rng, m, rank),
                cap: rng.random_range(spec.cap.0..=spec.cap.1),
            }
        })
        .collect();
    let (lo, hi) = spec.total_power;
    let total_power = (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp();
    ProblemInstance::new(w1, users, total_power).expect("random instance is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible() {
        let spec = InstanceSpec::default();
        let a = random_instance(&mut seeded_rng(7), &spec);
        let b = random_instance(&mut seeded_rng(7), &spec);
        assert_eq!(a, b);
    }

    #[test]
    fn gram_rank() {
        let mut rng = seeded_rng(1);
        for m in 1..6 {
            for r in 0..=m {
                assert_eq!(random_gram(&mut rng, m, r).rank().unwrap(), r);
            }
        }
    }
}
