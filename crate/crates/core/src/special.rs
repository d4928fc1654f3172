//! Log-space special functions: the normal survival function, log-gamma and
//! stable exp/log combinators.

use std::f64::consts::{PI, SQRT_2};

/// ln(√(2π)).
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Beyond this point ln Ψ is evaluated through the Mills-ratio continued fraction.
const CF_SWITCH: f64 = 6.0;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Ψ(x) = P(N(0,1) > x).
pub fn normal_sf(x: f64) -> f64 {
    log_normal_sf(x).exp()
}

/// ln Ψ(x), accurate in the far right tail (no underflow for any finite x).
pub fn log_normal_sf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < -CF_SWITCH {
        // Ψ(x) = 1 − Ψ(−x)
        return (-log_normal_sf(-x).exp()).ln_1p();
    }
    if x <= CF_SWITCH {
        return (0.5 * statrs::function::erf::erfc(x / SQRT_2)).ln();
    }
    -0.5 * x * x - LN_SQRT_2PI + mills_ratio(x).ln()
}

/// Mills ratio Ψ(x)/φ(x) for x > 0.
pub fn mills_ratio(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < CF_SWITCH {
        return normal_sf(x) / normal_pdf(x);
    }
    1.0 / mills_fraction(x, 1.0)
}

/// φ(x)/Ψ(x) − x without cancellation, for x ≥ 6.
pub fn inverse_mills_excess(x: f64) -> f64 {
    1.0 / mills_fraction(x, 2.0)
}

/// x + k/(x + (k+1)/(x + (k+2)/(x + ...))) by the modified Lentz method.
fn mills_fraction(x: f64, k0: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 0..500 {
        let a = k0 + k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    f
}

/// d/dx ln Ψ(x) = −φ(x)/Ψ(x).
pub fn d_log_normal_sf(x: f64) -> f64 {
    if x > 0.0 {
        -1.0 / mills_ratio(x)
    } else {
        -(-0.5 * x * x - LN_SQRT_2PI - log_normal_sf(x)).exp()
    }
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// ln(e^a + e^b) without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln Σ e^{v_i}.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// ln(1 − e^a) for a ≤ 0.
pub fn log1m_exp(a: f64) -> f64 {
    if a > -std::f64::consts::LN_2 {
        (-a.exp_m1()).ln()
    } else {
        (-a.exp()).ln_1p()
    }
}

/// Materialize a log-probability in linear space, or `None` below 1e−300.
pub fn materialize(log_p: f64) -> Option<f64> {
    let p = log_p.exp();
    (p >= 1e-300).then_some(p)
}
