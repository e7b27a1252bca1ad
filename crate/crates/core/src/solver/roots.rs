//! Bracketed root finding for monotone scalar functions.

#[allow(unused_imports)] // inherent float methods need std
use num_traits::Float;

/// Outcome of [`find_root`]: the point on the nonnegative side of the
/// bracket and its function value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Root<T> {
    pub x: f64,
    pub fx: f64,
    pub payload: T,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RootSettings {
    /// Accept once `0 <= f(x) <= ftol`.
    pub ftol: f64,
    pub max_evals: usize,
}

/// Finds `x` in `(lo, hi]` with `0 <= f(x) <= ftol`, given `f(lo) < 0 <= f(hi)`.
///
/// Illinois regula falsi, switching to geometric bisection while the
/// bracket spans orders of magnitude and to plain bisection when the
/// false-position steps stall. The returned point always satisfies
/// `f(x) >= 0`; if the budget runs out the best such point is returned with
/// `converged == false` in the second slot.
pub(crate) fn find_root<T, E>(
    mut f: impl FnMut(f64) -> Result<(f64, T), E>,
    lo: (f64, f64),
    hi: (f64, f64, T),
    settings: RootSettings,
) -> Result<(Root<T>, bool), E> {
    let (mut a, mut wa) = lo;
    let (mut b, mut fb, mut best) = hi;
    debug_assert!(wa < 0.0 && fb >= 0.0);
    let mut wb = fb;
    let mut evals = 0;
    let mut side = 0i8;
    // bracket widths one and two steps back
    let mut history = [f64::INFINITY; 2];

    while evals < settings.max_evals {
        if fb <= settings.ftol {
            return Ok((done(b, fb, best, evals), true));
        }
        let width = b - a;
        if width <= 4.0 * f64::EPSILON * b.abs().max(f64::MIN_POSITIVE) {
            return Ok((done(b, fb, best, evals), true));
        }
        let x = if a <= 0.0 {
            // descend in log scale toward zero first
            if b > 1e-300 { b * 1e-2 } else { 0.5 * (a + b) }
        } else if b / a > 64.0 {
            (a * b).sqrt()
        } else if width > 0.5 * history[1] {
            0.5 * (a + b)
        } else {
            let t = b - wb * (b - a) / (wb - wa);
            if t > a && t < b { t } else { 0.5 * (a + b) }
        };
        history = [width, history[0]];
        let (fx, payload) = f(x)?;
        evals += 1;
        if fx >= 0.0 {
            b = x;
            fb = fx;
            wb = fx;
            best = payload;
            if side == 1 {
                wa *= 0.5;
            }
            side = 1;
        } else {
            a = x;
            wa = fx;
            if side == -1 {
                wb *= 0.5;
            }
            side = -1;
        }
    }
    Ok((done(b, fb, best, evals), false))
}

fn done<T>(x: f64, fx: f64, payload: T, evaluations: usize) -> Root<T> {
    Root {
        x,
        fx,
        payload,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (Root<()>, bool) {
        find_root::<(), ()>(
            |x| Ok((f(x), ())),
            (lo, f(lo)),
            (hi, f(hi), ()),
            RootSettings {
                ftol: 1e-14,
                max_evals: 200,
            },
        )
        .unwrap()
    }

    #[test]
    fn linear() {
        let (r, ok) = solve(|x| x - 0.3, 0.0, 1.0);
        assert!(ok);
        assert!((r.x - 0.3).abs() < 1e-13 && r.fx >= 0.0);
    }

    #[test]
    fn tiny_root_from_zero() {
        let (r, ok) = solve(|x| 1.0 - 1e-9 / x, 0.0, 10.0);
        assert!(ok);
        assert!((r.x / 1e-9 - 1.0).abs() < 1e-12 && r.fx >= 0.0);
    }

    #[test]
    fn steep_decreasing_response() {
        let (r, ok) = solve(|x| 5.0 - 1.0 / (x * x), 0.0, 100.0);
        assert!(ok);
        assert!((r.x - 1.0 / 5.0_f64.sqrt()).abs() < 1e-12);
        assert!(r.evaluations < 80);
    }

    #[test]
    fn kinked() {
        let (r, ok) = solve(|x| if x < 2.0 { x - 2.0 } else { 1e6 * (x - 2.0) }, 0.0, 3.0);
        assert!(ok);
        assert!((r.x - 2.0).abs() < 1e-13);
    }
}
