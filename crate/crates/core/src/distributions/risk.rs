use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SlowlyVarying;
use crate::error::{ensure_finite, ensure_positive, Result, TailError};
use crate::roots::{expand_upper, newton_decreasing};
use crate::special::{log_normal_sf, LN_SQRT_2PI};

/// Distribution below the tail onset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Body {
    /// Uniform mass `1 − S(x_onset)` on `[x_low, x_onset]`, with `x_low = −x_onset`.
    Uniform { x_low: f64 },
    /// The exact N(0,1) law on the whole line (tail expression = Ψ everywhere).
    StandardNormal,
}

/// A risk whose survival function equals `L(x)·x^α·exp(−x²/(2p²))` above
/// `x_onset`, completed by a simple body below it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianLikeRisk {
    alpha: f64,
    sv: SlowlyVarying,
    p: f64,
    x_onset: f64,
    body: Body,
    log_s_onset: f64,
}

const ONSET_LEVEL: f64 = 0.5;
const MONOTONE_GRID: usize = 4000;

impl GaussianLikeRisk {
    /// Risk with the default tail onset and a uniform body.
    pub fn new(alpha: f64, sv: SlowlyVarying, p: f64) -> Result<Self> {
        Self::validate_params(alpha, &sv, p)?;
        let x_onset = default_onset(alpha, &sv, p)?;
        Self::assemble(alpha, sv, p, x_onset)
    }

    /// Risk with an explicit tail onset; the tail must be a valid, strictly
    /// decreasing survival function from there on.
    pub fn with_onset(alpha: f64, sv: SlowlyVarying, p: f64, x_onset: f64) -> Result<Self> {
        Self::validate_params(alpha, &sv, p)?;
        ensure_positive("x_onset", x_onset)?;
        let t = tail_expr(alpha, &sv, p, x_onset);
        if !(t < 0.0) {
            return Err(TailError::param(
                "x_onset",
                format!("tail expression at x_onset is {} (must be < 1)", t.exp()),
            ));
        }
        if let Some(bad) = last_nondecreasing(alpha, &sv, p, x_onset) {
            return Err(TailError::param(
                "x_onset",
                format!("tail expression increases near x = {bad:.4}; choose a larger onset"),
            ));
        }
        Self::assemble(alpha, sv, p, x_onset)
    }

    /// The standard normal law, parameterized as α = −1, L = `NormalMills`, p = 1.
    pub fn standard_normal() -> Self {
        let x_onset = 2.0;
        GaussianLikeRisk {
            alpha: -1.0,
            sv: SlowlyVarying::NormalMills,
            p: 1.0,
            x_onset,
            body: Body::StandardNormal,
            log_s_onset: log_normal_sf(x_onset),
        }
    }

    fn validate_params(alpha: f64, sv: &SlowlyVarying, p: f64) -> Result<()> {
        ensure_finite("alpha", alpha)?;
        ensure_positive("p", p)?;
        sv.validate()
    }

    fn assemble(alpha: f64, sv: SlowlyVarying, p: f64, x_onset: f64) -> Result<Self> {
        let log_s_onset = tail_expr(alpha, &sv, p, x_onset);
        Ok(GaussianLikeRisk {
            alpha,
            sv,
            p,
            x_onset,
            body: Body::Uniform { x_low: -x_onset },
            log_s_onset,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sv(&self) -> &SlowlyVarying {
        &self.sv
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn x_onset(&self) -> f64 {
        self.x_onset
    }

    pub fn body(&self) -> Body {
        self.body
    }

    pub fn is_standard_normal(&self) -> bool {
        matches!(self.body, Body::StandardNormal)
    }

    /// Lower end of the support (−∞ for the normal body).
    pub fn lower_endpoint(&self) -> f64 {
        match self.body {
            Body::Uniform { x_low } => x_low,
            Body::StandardNormal => f64::NEG_INFINITY,
        }
    }

    /// Points where the density is discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.body {
            Body::Uniform { x_low } => vec![x_low, self.x_onset],
            Body::StandardNormal => Vec::new(),
        }
    }

    /// ln(L(x)·x^α·exp(−x²/(2p²))) for x > 0.
    pub fn tail_log_expr(&self, x: f64) -> f64 {
        tail_expr(self.alpha, &self.sv, self.p, x)
    }

    /// d/dx of `tail_log_expr`.
    pub fn tail_log_slope(&self, x: f64) -> f64 {
        tail_slope(self.alpha, &self.sv, self.p, x)
    }

    pub fn log_survival(&self, x: f64) -> f64 {
        match self.body {
            Body::StandardNormal => log_normal_sf(x),
            Body::Uniform { x_low } => {
                if x >= self.x_onset {
                    self.tail_log_expr(x)
                } else if x <= x_low {
                    0.0
                } else {
                    let body_mass = -self.log_s_onset.exp_m1();
                    (-body_mass * (x - x_low) / (self.x_onset - x_low)).ln_1p()
                }
            }
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        self.log_survival(x).exp().min(1.0)
    }

    pub fn log_density(&self, x: f64) -> f64 {
        match self.body {
            Body::StandardNormal => -0.5 * x * x - LN_SQRT_2PI,
            Body::Uniform { x_low } => {
                if x >= self.x_onset {
                    self.tail_log_expr(x) + (-self.tail_log_slope(x)).ln()
                } else if x < x_low {
                    f64::NEG_INFINITY
                } else {
                    (-self.log_s_onset.exp_m1()).ln() - (self.x_onset - x_low).ln()
                }
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    /// The x with ln S(x) = `log_q`, for `log_q ∈ (−∞, 0)`.
    pub fn inverse_log_survival(&self, log_q: f64) -> Result<f64> {
        if !(log_q < 0.0) {
            return Err(TailError::OutOfDomain(format!(
                "log survival level must be < 0, got {log_q}"
            )));
        }
        match self.body {
            Body::Uniform { x_low } if log_q >= self.log_s_onset => {
                let frac = -log_q.exp_m1() / -self.log_s_onset.exp_m1();
                Ok(x_low + frac * (self.x_onset - x_low))
            }
            Body::Uniform { .. } => {
                let hi = expand_upper(
                    |x| self.tail_log_expr(x) - log_q,
                    2.0 * self.x_onset,
                    "tail bracket",
                )?;
                newton_decreasing(
                    |x| (self.tail_log_expr(x) - log_q, self.tail_log_slope(x)),
                    self.x_onset,
                    hi,
                    1e-12,
                    "inverse survival",
                )
            }
            Body::StandardNormal => {
                let guess = if log_q < -1.0 {
                    (-2.0 * log_q).sqrt()
                } else {
                    0.0
                };
                let mut lo = guess - 2.0;
                while log_normal_sf(lo) < log_q {
                    lo -= 2.0;
                }
                let mut hi = guess + 2.0;
                while log_normal_sf(hi) > log_q {
                    hi += 2.0;
                }
                newton_decreasing(
                    |x| (log_normal_sf(x) - log_q, crate::special::d_log_normal_sf(x)),
                    lo,
                    hi,
                    1e-12,
                    "inverse survival",
                )
            }
        }
    }

    /// One variate by inverse transform.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let u: f64 = rng.sample(Open01);
        self.inverse_log_survival(u.ln())
    }

    /// `n` i.i.d. variates.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }
}

fn tail_expr(alpha: f64, sv: &SlowlyVarying, p: f64, x: f64) -> f64 {
    sv.ln_eval(x) + alpha * x.ln() - x * x / (2.0 * p * p)
}

fn tail_slope(alpha: f64, sv: &SlowlyVarying, p: f64, x: f64) -> f64 {
    alpha / x - x / (p * p) + sv.d_ln(x)
}

/// Largest grid point in `[from, ∞)` where the tail log-slope is ≥ 0, if any.
fn last_nondecreasing(alpha: f64, sv: &SlowlyVarying, p: f64, from: f64) -> Option<f64> {
    let to = 64.0 * from.max(p).max(alpha.abs().sqrt() * p);
    let ratio = (to / from).powf(1.0 / MONOTONE_GRID as f64);
    let mut x = from;
    let mut last = None;
    for _ in 0..=MONOTONE_GRID {
        if !(tail_slope(alpha, sv, p, x) < 0.0) {
            last = Some(x);
        }
        x *= ratio;
    }
    last
}

/// Smallest x ≥ max(2, √max(α,0) + 1) where the tail expression is below
/// one half and decreasing from there on.
fn default_onset(alpha: f64, sv: &SlowlyVarying, p: f64) -> Result<f64> {
    let floor = 2f64.max(alpha.max(0.0).sqrt() + 1.0);
    let start = match last_nondecreasing(alpha, sv, p, floor) {
        Some(bad) => bad * 1.01,
        None => floor,
    };
    let level = ONSET_LEVEL.ln();
    if tail_expr(alpha, sv, p, start) < level {
        return Ok(start);
    }
    let hi = expand_upper(
        |x| tail_expr(alpha, sv, p, x) - level,
        2.0 * start,
        "onset bracket",
    )?;
    newton_decreasing(
        |x| {
            (
                tail_expr(alpha, sv, p, x) - level,
                tail_slope(alpha, sv, p, x),
            )
        },
        start,
        hi,
        1e-13,
        "tail onset",
    )
}
