//! Tail of a sum by numerical convolution: P(L + Y > x) = ∫ S_L(x − y) f_Y(y) dy
//! over a truncation window, with the two cut-off pieces bounded by exact
//! survival values.

use serde::{Deserialize, Serialize};

use super::law::{SurvivalLaw, Tabulated, Weighted};
use crate::asymptotics::TailEstimate;
use crate::distributions::{GaussianLikeRisk, Portfolio};
use crate::error::{Result, TailError};
use crate::quad::integrate;
use crate::special::log_add_exp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    /// Starting truncation constant c of the window [a·x, b·x].
    pub truncation_c: f64,
    /// c is widened geometrically up to this value until the remainder
    /// certificate holds.
    pub max_truncation_c: f64,
    pub grid_points_per_doubling: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-9,
            truncation_c: 1.1,
            max_truncation_c: 64.0,
            grid_points_per_doubling: 64,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1e-2) {
            return Err(TailError::param(
                "rel_tol",
                format!("must lie in (0, 1e-2), got {}", self.rel_tol),
            ));
        }
        if !(self.truncation_c > 1.0 && self.truncation_c.is_finite()) {
            return Err(TailError::param(
                "truncation_c",
                format!("must be > 1, got {}", self.truncation_c),
            ));
        }
        if !(self.max_truncation_c >= self.truncation_c && self.max_truncation_c.is_finite()) {
            return Err(TailError::param(
                "max_truncation_c",
                "must be finite and >= truncation_c",
            ));
        }
        if self.grid_points_per_doubling < 8 {
            return Err(TailError::param("grid_points_per_doubling", "must be >= 8"));
        }
        Ok(())
    }
}

const WIDEN: f64 = 1.25;
const PEAK_SCAN: usize = 256;
const INITIAL_PIECES: usize = 16;

#[derive(Debug, Clone, Copy)]
struct Convolved {
    log_value: f64,
    log_remainder: f64,
    c: f64,
    evaluations: usize,
}

fn convolve<L: SurvivalLaw>(
    left: &L,
    right: &Weighted<'_>,
    x: f64,
    cfg: &QuadratureConfig,
) -> Result<Convolved> {
    let (pl, pr) = (left.scale(), right.scale());
    let p = pl.hypot(pr);
    let xe = x.max(p);
    let support_low = right.support_low();
    let g = |y: f64| left.log_sf(x - y) + right.log_pdf(y);
    let mut kinks: Vec<f64> = right.kinks();
    kinks.extend(left.kinks().iter().map(|k| x - k));

    let mut c = cfg.truncation_c;
    let mut evaluations = 0;
    let mut last_gap = f64::NAN;
    while c <= cfg.max_truncation_c * (1.0 + 1e-12) {
        let a = 1.0 - c * pl / p;
        let b = c * pr / p;
        let lo = (a * xe).max(right.effective_low());
        let hi = b * xe;
        if hi <= lo {
            c *= WIDEN;
            continue;
        }
        // scale the integrand by its largest sampled value
        let mut peak = f64::NEG_INFINITY;
        let mut arg = lo;
        for k in 0..=PEAK_SCAN {
            let y = lo + (hi - lo) * k as f64 / PEAK_SCAN as f64;
            let v = g(y);
            if v > peak {
                peak = v;
                arg = y;
            }
        }
        for &k in &kinks {
            if k > lo && k < hi {
                peak = peak.max(g(k));
            }
        }
        evaluations += PEAK_SCAN + 1;
        if peak == f64::NEG_INFINITY {
            return Err(TailError::Oracle(format!(
                "integrand underflows everywhere at x = {x}"
            )));
        }
        let mut breaks = kinks.clone();
        breaks.push(arg);
        breaks
            .extend((1..INITIAL_PIECES).map(|k| lo + (hi - lo) * k as f64 / INITIAL_PIECES as f64));
        let integral = integrate(
            |y| (g(y) - peak).exp(),
            lo,
            hi,
            &breaks,
            0.25 * cfg.rel_tol,
            0.0,
        )?;
        evaluations += integral.evaluations;
        let log_value = peak + integral.value.ln();

        let upper = right.log_sf(hi);
        let lower = if lo > support_low {
            right.log_cdf(lo) + left.log_sf(x - lo)
        } else {
            f64::NEG_INFINITY
        };
        let log_remainder = log_add_exp(upper, lower);
        last_gap = log_remainder - log_value;
        if last_gap <= cfg.rel_tol.ln() {
            return Ok(Convolved {
                log_value,
                log_remainder,
                c,
                evaluations,
            });
        }
        c *= WIDEN;
    }
    Err(TailError::BudgetExhausted(format!(
        "truncation remainder at x = {x} stays at {:.3e} of the central value up to c = {}",
        last_gap.exp(),
        cfg.max_truncation_c
    )))
}

fn into_estimate(conv: Convolved, x: f64) -> TailEstimate {
    TailEstimate::quadrature(conv.log_value)
        .with_meta("x", x)
        .with_meta("truncation_c", conv.c)
        .with_meta("log_remainder_bound", conv.log_remainder)
        .with_meta("evaluations", conv.evaluations as u64)
}

/// P(X₁ + X₂ > x) for independent risks by adaptive quadrature of
/// Ψ̄₁(x − y)·f₂(y) on the window [a·x, b·x], a = 1 − c·p₁/p, b = c·p₂/p.
pub fn convolve_pair(
    risk1: &GaussianLikeRisk,
    risk2: &GaussianLikeRisk,
    x: f64,
    cfg: &QuadratureConfig,
) -> Result<TailEstimate> {
    cfg.validate()?;
    check_x(x)?;
    let conv = convolve(
        &Weighted::new(1.0, risk1),
        &Weighted::new(1.0, risk2),
        x,
        cfg,
    )?;
    Ok(into_estimate(conv, x))
}

fn check_x(x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(TailError::OutOfDomain(format!(
            "convolution level must be > 0, got {x}"
        )))
    }
}

pub const MAX_QUADRATURE_TERMS: usize = 6;

/// Grid: uniform with step ln2/k below 1, geometric with k points per doubling above.
fn hybrid_grid(lo: f64, hi: f64, per_doubling: usize) -> Vec<f64> {
    let step = std::f64::consts::LN_2 / per_doubling as f64;
    let ratio = 2f64.powf(1.0 / per_doubling as f64);
    let mut z = Vec::new();
    let mut t = lo;
    while t < 1.0 && t < hi {
        z.push(t);
        t += step;
    }
    let mut t = if lo >= 1.0 { lo } else { 1.0 };
    while t < hi {
        z.push(t);
        t *= ratio;
    }
    z.push(hi);
    z
}

/// P(Q_n > x) by successive convolution. Partial sums Q_2..Q_{n−1} are
/// tabulated as log-survival on a hybrid grid; the last step is evaluated
/// at x directly. The discretization error is estimated by repeating the
/// last step on a table with every other node; grids are refined until it
/// is below 10·rel_tol.
pub fn convolve_portfolio(
    portfolio: &Portfolio,
    x: f64,
    cfg: &QuadratureConfig,
) -> Result<TailEstimate> {
    cfg.validate()?;
    check_x(x)?;
    let n = portfolio.len();
    if n > MAX_QUADRATURE_TERMS {
        return Err(TailError::OutOfDomain(format!(
            "quadrature oracle supports at most {MAX_QUADRATURE_TERMS} terms, got {n}"
        )));
    }
    let parts: Vec<Weighted<'_>> = portfolio
        .entries()
        .iter()
        .map(|e| Weighted::new(e.weight, &e.risk))
        .collect();
    if n == 1 {
        return Ok(TailEstimate::quadrature(parts[0].log_sf(x)).with_meta("x", x));
    }
    if n == 2 {
        return Ok(into_estimate(convolve(&parts[0], &parts[1], x, cfg)?, x));
    }
    let tol = 10.0 * cfg.rel_tol;
    let mut per_doubling = cfg.grid_points_per_doubling;
    loop {
        let table = tabulate(&parts, x, per_doubling, cfg)?;
        let last = &parts[n - 1];
        let full = convolve(&table, last, x, cfg)?;
        let coarse = convolve(&table.thinned(), last, x, cfg)?;
        let disc = (full.log_value - coarse.log_value).abs();
        if disc <= tol || per_doubling >= MAX_REFINEMENT * cfg.grid_points_per_doubling {
            if disc > tol {
                return Err(TailError::BudgetExhausted(format!(
                    "discretization error {disc:.3e} above {tol:.3e} at {per_doubling} points per doubling"
                )));
            }
            return Ok(into_estimate(full, x)
                .with_meta("discretization_log_error", disc)
                .with_meta("grid_points_per_doubling", per_doubling as u64)
                .with_meta("grid_points", table.len() as u64));
        }
        per_doubling *= 2;
    }
}

/// Grids are refined by doubling up to this factor over the configured density.
const MAX_REFINEMENT: usize = 16;

/// Log-survival of Q_{n−1} tabulated over the range the last step can reach.
fn tabulate(
    parts: &[Weighted<'_>],
    x: f64,
    per_doubling: usize,
    cfg: &QuadratureConfig,
) -> Result<Tabulated> {
    let n = parts.len();
    let lows: Vec<f64> = parts.iter().map(|p| p.effective_low()).collect();
    let mut table: Option<Tabulated> = None;
    let mut scale_sq = parts[0].scale().powi(2);
    for k in 1..n - 1 {
        scale_sq += parts[k].scale().powi(2);
        let z_lo: f64 = lows[..=k].iter().sum();
        let z_hi: f64 = x - lows[k + 1..].iter().sum::<f64>() + 1.0;
        let grid = hybrid_grid(z_lo, z_hi, per_doubling);
        let values = grid
            .iter()
            .map(|&z| {
                let v = match &table {
                    None => convolve(&parts[0], &parts[k], z, cfg),
                    Some(t) => convolve(t, &parts[k], z, cfg),
                }?;
                Ok(v.log_value.min(0.0))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(TailError::Oracle(format!(
                "tabulated survival of the partial sum underflows at z = {}",
                grid[bad]
            )));
        }
        table = Some(Tabulated::new(grid, values, scale_sq.sqrt()));
    }
    Ok(table.expect("n >= 3 builds a table"))
}
