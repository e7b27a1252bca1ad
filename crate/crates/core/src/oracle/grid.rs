#[allow(unused_imports)] // inherent float methods need std
use num_traits::Float;
use alloc::vec::Vec;

use crate::linalg::{CMatrix, HermitianMatrix, Tolerances, C64};
use crate::problem::{DualVariables, Method, ProblemInstance};
use crate::solver::{finalize, SolverError, SolverSettings};

use super::{radial_scale, zero_cap_projector, OracleRun, OracleSettings};

/// Exhaustive search for `m = 2` over Cholesky factors
/// `L = [[x, 0], [y + i z, w]]`, `R = L L^H`.
///
/// `x, w` range over `[0, sqrt(P_T)]` and `y, z` over
/// `[-sqrt(P_T), sqrt(P_T)]`. Every point is PSD and is scaled radially
/// onto the feasible set, so rank-one and boundary optima are reachable.
/// The best grid point is refined by compass passes with shrinking step
/// down to a thousandth of the grid spacing.
pub fn bruteforce_2x2(instance: &ProblemInstance, settings: &OracleSettings) -> Result<OracleRun, SolverError> {
    settings.validate()?;
    if instance.dim() != 2 {
        return Err(SolverError::OracleDimension(instance.dim()));
    }
    let tol = Tolerances::DEFAULT;
    let null_projector = zero_cap_projector(instance, &tol)?;
    let w = instance.signal_gram();
    let (w11, w12, w22) = (w.entry(0, 0).re, w.entry(0, 1), w.entry(1, 1).re);

    let to_matrix = |p: [f64; 4]| -> HermitianMatrix {
        let l21 = C64::new(p[2], p[3]);
        let a = p[0] * p[0];
        let b = l21.norm_sqr() + p[1] * p[1];
        let off = l21.conj() * p[0];
        let raw = CMatrix::from_row_slice(2, 2, &[C64::new(a, 0.0), off, off.conj(), C64::new(b, 0.0)]);
        let h = HermitianMatrix::new(raw).expect("finite 2x2");
        match &null_projector {
            Some(proj) => h.congruence(proj),
            None => h,
        }
    };
    // (w11, w22, w12) per user with a positive cap
    let users: Vec<(f64, f64, C64, f64)> = instance
        .users()
        .iter()
        .filter(|u| u.cap > 0.0)
        .map(|u| (u.gram.entry(0, 0).re, u.gram.entry(1, 1).re, u.gram.entry(0, 1), u.cap))
        .collect();
    let pt = instance.total_power();
    let scaled = |a: f64, b: f64, c: C64| -> f64 {
        let mut s: f64 = 1.0;
        if a + b > pt {
            s = pt / (a + b);
        }
        for &(u11, u22, u12, cap) in &users {
            let p = u11 * a + u22 * b + 2.0 * (u12 * c.conj()).re;
            if p > cap {
                s = s.min(cap / p);
            }
        }
        s
    };
    let log_det = |a: f64, b: f64, c: C64| -> f64 {
        let p00 = w11 * a + w12 * c.conj();
        let p01 = w11 * c + w12 * b;
        let p10 = w12.conj() * a + w22 * c.conj();
        let p11 = w12.conj() * c + w22 * b;
        let det = (p00 + 1.0) * (p11 + 1.0) - p01 * p10;
        det.re.max(f64::MIN_POSITIVE).ln()
    };
    let value = |p: [f64; 4]| -> f64 {
        let r = to_matrix(p);
        let (a, b, c) = (r.entry(0, 0).re, r.entry(1, 1).re, r.entry(0, 1));
        if a + b == 0.0 {
            return 0.0;
        }
        let s = scaled(a, b, c);
        log_det(s * a, s * b, c * s)
    };

    let n = settings.grid_points;
    let root = pt.sqrt();
    let diag_step = root / (n - 1) as f64;
    let off_step = 2.0 * root / (n - 1) as f64;
    let coord = |i: usize, lo: f64, step: f64| lo + step * i as f64;
    let mut best = ([0.0; 4], value([0.0; 4]));
    for ix in 0..n {
        let x = coord(ix, 0.0, diag_step);
        for iw in 0..n {
            let w = coord(iw, 0.0, diag_step);
            for iy in 0..n {
                let y = coord(iy, -root, off_step);
                for iz in 0..n {
                    let p = [x, w, y, coord(iz, -root, off_step)];
                    let v = value(p);
                    if v > best.1 {
                        best = (p, v);
                    }
                }
            }
        }
    }

    let mut iterations = 0;
    let mut step = diag_step;
    let floor = diag_step / 1000.0;
    let start = best.1;
    while step >= floor {
        let mut improved = true;
        while improved {
            improved = false;
            for axis in 0..4 {
                for sign in [-1.0, 1.0] {
                    let mut p = best.0;
                    p[axis] += sign * step;
                    iterations += 1;
                    let v = value(p);
                    if v > best.1 {
                        best = (p, v);
                        improved = true;
                    }
                }
            }
        }
        step *= 0.5;
    }

    let r = to_matrix(best.0);
    let r = r.scale(radial_scale(instance, &r));
    let duals = DualVariables::zeros(instance.num_users());
    let solution = finalize(instance, r, duals, Method::Oracle, &SolverSettings::default())?;
    Ok(OracleRun {
        solution,
        iterations,
        converged: true,
        last_improvement: best.1 - start,
    })
}
