use super::closed_form::{log_tail_qn, log_tail_qn_slope};
use crate::distributions::Portfolio;
use crate::error::{Result, TailError};
use crate::roots::newton_decreasing;

const MAX_FIXED_POINT: usize = 200;
const SCAN_POINTS: usize = 4000;

/// The level t with closed-form P(Q_n > t) = `prob`, for `prob ≤ 1e−2`.
///
/// Iterates t ← λ·√(2(ln c(t) − ln p)), where ln c(t) is the closed-form tail
/// without its Gaussian exponent; falls back to bracketed Newton/bisection on
/// the largest root if the iteration leaves the admissible region.
pub fn quantile(portfolio: &Portfolio, prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob <= 1e-2) {
        return Err(TailError::OutOfDomain(format!(
            "quantile probability must lie in (0, 1e-2], got {prob}"
        )));
    }
    let target = prob.ln();
    let lambda = portfolio.lambda_norm();
    let two_l2 = 2.0 * lambda * lambda;
    let f = |t: f64| log_tail_qn(portfolio, t).map(|v| v - target);

    let mut t = lambda * (-2.0 * target).sqrt();
    for _ in 0..MAX_FIXED_POINT {
        if t <= 1.0 {
            break;
        }
        let log_c = log_tail_qn(portfolio, t)? + t * t / two_l2;
        let gap = log_c - target;
        if !(gap > 0.0) {
            break;
        }
        let next = lambda * (2.0 * gap).sqrt();
        if (next - t).abs() <= 1e-15 * t {
            if f(next)?.abs() <= 1e-12 * target.abs() {
                return Ok(next);
            }
            break;
        }
        t = next;
    }
    bracketed(portfolio, target, lambda * (-2.0 * target).sqrt(), &f)
}

fn bracketed<F>(portfolio: &Portfolio, target: f64, start: f64, f: &F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut hi = start.max(2.0);
    while f(hi)? > 0.0 {
        hi *= 1.5;
        if !hi.is_finite() {
            return Err(TailError::NonConvergence {
                what: "quantile bracket",
                iterations: MAX_FIXED_POINT,
            });
        }
    }
    // walk down to the largest sign change
    let floor = 1.0 + 1e-9;
    let ratio = (floor / hi).powf(1.0 / SCAN_POINTS as f64);
    let mut upper = hi;
    let mut lower = hi * ratio;
    while f(lower)? < 0.0 {
        upper = lower;
        lower *= ratio;
        if lower < floor {
            return Err(TailError::OutOfDomain(format!(
                "no tail-regime level reaches probability e^{target}"
            )));
        }
    }
    newton_decreasing(
        |t| {
            (
                log_tail_qn(portfolio, t)
                    .map(|v| v - target)
                    .unwrap_or(f64::NAN),
                log_tail_qn_slope(portfolio, t),
            )
        },
        lower,
        upper,
        1e-15,
        "quantile",
    )
}
