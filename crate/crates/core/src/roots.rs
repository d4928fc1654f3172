//! One-dimensional safeguarded Newton iteration for monotone functions.

use crate::error::{Result, TailError};

/// Find `x ∈ [lo, hi]` with `f(x) = 0` where `f` is decreasing and
/// `f(lo) ≥ 0 ≥ f(hi)`. `fdf` returns `(f(x), f'(x))`. Newton steps that leave
/// the current bracket are replaced by bisection. Stops when the bracket or
/// step is below `rel_tol·max(|x|, 1)`.
pub fn newton_decreasing<F>(
    fdf: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    what: &'static str,
) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    const MAX_ITER: usize = 200;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        let (fx, dfx) = fdf(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let tol = rel_tol * next.abs().max(1.0);
        if (next - x).abs() <= tol || (hi - lo) <= tol {
            return Ok(next);
        }
        x = next;
    }
    Err(TailError::NonConvergence {
        what,
        iterations: MAX_ITER,
    })
}

/// Expand `hi` geometrically (from `start`) until `f(hi) < 0`.
pub fn expand_upper<F: Fn(f64) -> f64>(f: F, start: f64, what: &'static str) -> Result<f64> {
    let mut hi = start.max(1.0);
    for _ in 0..200 {
        if f(hi) < 0.0 {
            return Ok(hi);
        }
        hi *= 1.5;
    }
    Err(TailError::NonConvergence {
        what,
        iterations: 200,
    })
}
