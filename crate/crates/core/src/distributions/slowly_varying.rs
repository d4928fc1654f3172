use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Result};
use crate::special::{
    d_log_normal_sf, inverse_mills_excess, log_normal_sf, mills_ratio, LN_SQRT_2PI,
};

/// Above this the normal factor is evaluated through the Mills ratio directly.
const MILLS_DIRECT: f64 = 6.0;

/// A slowly varying function L, evaluated for u > 1.
///
/// The family is closed under products so that d(ln L)/du is always
/// available in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SlowlyVarying {
    /// L(u) = c.
    Constant { c: f64 },
    /// L(u) = c·(ln u)^beta.
    LogPower { c: f64, beta: f64 },
    /// L(u) = u·e^{u²/2}·Ψ(u), the exact factor of a standard normal tail
    /// (tends to (2π)^{-1/2}).
    NormalMills,
    /// L(u) = left(u)·right(u).
    Product {
        left: Box<SlowlyVarying>,
        right: Box<SlowlyVarying>,
    },
}

impl SlowlyVarying {
    pub fn constant(c: f64) -> Self {
        SlowlyVarying::Constant { c }
    }

    pub fn log_power(c: f64, beta: f64) -> Self {
        SlowlyVarying::LogPower { c, beta }
    }

    pub fn product(left: SlowlyVarying, right: SlowlyVarying) -> Self {
        SlowlyVarying::Product {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SlowlyVarying::Constant { c } => ensure_positive("sv.c", *c),
            SlowlyVarying::LogPower { c, beta } => {
                ensure_positive("sv.c", *c)?;
                ensure_finite("sv.beta", *beta)
            }
            SlowlyVarying::NormalMills => Ok(()),
            SlowlyVarying::Product { left, right } => {
                left.validate()?;
                right.validate()
            }
        }
    }

    /// ln L(u). Only meaningful for u > 1.
    pub fn ln_eval(&self, u: f64) -> f64 {
        match self {
            SlowlyVarying::Constant { c } => c.ln(),
            SlowlyVarying::LogPower { c, beta } => c.ln() + beta * u.ln().ln(),
            SlowlyVarying::NormalMills if u >= MILLS_DIRECT => {
                (u * mills_ratio(u)).ln() - LN_SQRT_2PI
            }
            SlowlyVarying::NormalMills => u.ln() + 0.5 * u * u + log_normal_sf(u),
            SlowlyVarying::Product { left, right } => left.ln_eval(u) + right.ln_eval(u),
        }
    }

    pub fn evaluate(&self, u: f64) -> f64 {
        self.ln_eval(u).exp()
    }

    /// d/du ln L(u).
    pub fn d_ln(&self, u: f64) -> f64 {
        match self {
            SlowlyVarying::Constant { .. } => 0.0,
            SlowlyVarying::LogPower { beta, .. } => beta / (u * u.ln()),
            SlowlyVarying::NormalMills if u >= MILLS_DIRECT => 1.0 / u - inverse_mills_excess(u),
            SlowlyVarying::NormalMills => 1.0 / u + u + d_log_normal_sf(u),
            SlowlyVarying::Product { left, right } => left.d_ln(u) + right.d_ln(u),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family() -> Vec<SlowlyVarying> {
        vec![
            SlowlyVarying::constant(0.3),
            SlowlyVarying::log_power(2.0, 1.5),
            SlowlyVarying::log_power(0.5, -2.0),
            SlowlyVarying::NormalMills,
            SlowlyVarying::product(
                SlowlyVarying::log_power(1.0, 0.7),
                SlowlyVarying::NormalMills,
            ),
        ]
    }

    #[test]
    fn positive_above_one() {
        for sv in family() {
            for &u in &[1.01, 1.5, 3.0, 50.0, 1e6] {
                let v = sv.evaluate(u);
                assert!(v > 0.0 && v.is_finite(), "{sv:?} at {u}: {v}");
            }
        }
    }

    #[test]
    fn slow_variation_on_geometric_grid() {
        for sv in family() {
            for &t in &[0.5, 2.0, 10.0] {
                let dev: Vec<f64> = [1e1, 1e3, 1e6, 1e12, 1e60]
                    .iter()
                    .map(|&u| (sv.ln_eval(t * u) - sv.ln_eval(u)).abs())
                    .collect();
                for w in dev.windows(2) {
                    assert!(w[1] <= w[0] + 1e-12, "{sv:?} t={t}: {dev:?}");
                }
                assert!(dev[4] < 0.1, "{sv:?} t={t}: {dev:?}");
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for sv in family() {
            for &u in &[2.5, 7.0, 30.0] {
                let h = 1e-5 * u;
                let fd = (sv.ln_eval(u + h) - sv.ln_eval(u - h)) / (2.0 * h);
                assert!((fd - sv.d_ln(u)).abs() < 1e-7, "{sv:?} at {u}");
            }
        }
    }

    #[test]
    fn normal_mills_limit() {
        let limit = -0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((SlowlyVarying::NormalMills.ln_eval(1e4) - limit).abs() < 1e-8);
    }

    #[test]
    fn rejects_nonpositive_constant() {
        assert!(SlowlyVarying::constant(0.0).validate().is_err());
        assert!(SlowlyVarying::log_power(1.0, f64::NAN).validate().is_err());
    }
}
