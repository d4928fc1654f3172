//! Monte Carlo oracles. Work is split into a fixed number of chunks, each
//! driven by its own ChaCha8 stream, and reduced in chunk order so results do
//! not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use super::tilt::{tilt_for_mean, TiltedLaw};
use crate::asymptotics::{joint_exponents, normalize_weights, PortfolioPair, TailEstimate};
use crate::distributions::{BoundedScale, Portfolio, ScaledPortfolio};
use crate::error::{Result, TailError};
use crate::roots::newton_decreasing;
use crate::special::log_normal_sf;

/// Normal quantile used for the reported half-widths.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_samples: u64,
    pub seed: u64,
    pub n_chunks: u32,
    /// Portfolio-direction tilt θ; solved from the mean-matching equation when absent.
    pub tilt: Option<f64>,
    /// Fail when the CI half-width on the log exceeds this.
    pub max_ci_log_halfwidth: Option<f64>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_samples: 1_000_000,
            seed: 0,
            n_chunks: 64,
            tilt: None,
            max_ci_log_halfwidth: None,
        }
    }
}

impl McConfig {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        McConfig {
            n_samples,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1000 {
            return Err(TailError::param(
                "n_samples",
                format!("must be >= 1000, got {}", self.n_samples),
            ));
        }
        if self.n_chunks == 0 || u64::from(self.n_chunks) > self.n_samples {
            return Err(TailError::param(
                "n_chunks",
                format!("must lie in [1, n_samples], got {}", self.n_chunks),
            ));
        }
        if let Some(t) = self.tilt {
            if !t.is_finite() {
                return Err(TailError::param("tilt", format!("must be finite, got {t}")));
            }
        }
        Ok(())
    }

    fn chunk_len(&self, chunk: u32) -> u64 {
        let k = u64::from(self.n_chunks);
        self.n_samples / k + u64::from(u64::from(chunk) < self.n_samples % k)
    }
}

/// Streaming ln Σ e^{v} with a running maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LogSum {
    max: f64,
    sum: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogSum {
    pub fn push(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v <= self.max {
            self.sum += (v - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    pub fn merge(&mut self, other: &LogSum) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max <= self.max {
            self.sum += other.sum * (other.max - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Per-chunk sums of ln w and 2·ln w over the sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Moments {
    first: LogSum,
    second: LogSum,
    hits: u64,
    count: u64,
}

impl Moments {
    fn push(&mut self, log_w: f64) {
        self.count += 1;
        if log_w > f64::NEG_INFINITY {
            self.hits += 1;
            self.first.push(log_w);
            self.second.push(2.0 * log_w);
        }
    }

    fn merge(&mut self, other: &Moments) {
        self.first.merge(&other.first);
        self.second.merge(&other.second);
        self.hits += other.hits;
        self.count += other.count;
    }

    /// ln of the sample mean and the delta-method half-width on the log.
    fn finish(&self) -> Result<(f64, f64)> {
        if self.hits == 0 {
            return Err(TailError::NoHits {
                samples: self.count,
            });
        }
        let n = self.count as f64;
        let log_mean = self.first.value() - n.ln();
        // Σw²·n/(Σw)² − 1 = n·(sample variance)/mean² up to the n/(n−1) factor
        let ratio = (self.second.value() - 2.0 * self.first.value() + n.ln()).exp();
        let rel_var = ((ratio - 1.0) / (n - 1.0)).max(0.0);
        Ok((log_mean, Z95 * rel_var.sqrt()))
    }
}

fn run_chunks<T, F>(cfg: &McConfig, work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> Result<T> + Sync,
{
    (0..cfg.n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(u64::from(chunk));
            work(&mut rng, cfg.chunk_len(chunk))
        })
        .collect()
}

fn estimate_moments<F>(cfg: &McConfig, draw: F) -> Result<Moments>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let chunks = run_chunks(cfg, |rng, len| {
        let mut m = Moments::default();
        for _ in 0..len {
            m.push(draw(rng)?);
        }
        Ok(m)
    })?;
    let mut total = Moments::default();
    for c in &chunks {
        total.merge(c);
    }
    Ok(total)
}

fn monte_carlo(cfg: &McConfig, m: &Moments) -> Result<TailEstimate> {
    let (log_mean, half) = m.finish()?;
    if let Some(limit) = cfg.max_ci_log_halfwidth {
        if half > limit {
            return Err(TailError::BudgetExhausted(format!(
                "CI half-width {half:.3e} on the log exceeds {limit:.3e} after {} samples",
                cfg.n_samples
            )));
        }
    }
    Ok(TailEstimate::monte_carlo(log_mean, half)
        .with_meta("n_samples", cfg.n_samples)
        .with_meta("hits", m.hits)
        .with_meta("seed", cfg.seed)
        .with_meta("n_chunks", cfg.n_chunks))
}

/// The portfolio-direction tilt θ with Σλ_i·E_θ[X_i] = u.
pub fn portfolio_tilt(portfolio: &Portfolio, u: f64) -> Result<f64> {
    let lambda = portfolio.lambda_norm();
    if portfolio
        .entries()
        .iter()
        .all(|e| e.risk.is_standard_normal())
    {
        return Ok(u / (lambda * lambda));
    }
    let eval = |theta: f64| -> Result<(f64, f64)> {
        let mut mean = 0.0;
        let mut var = 0.0;
        for e in portfolio.entries() {
            let m = super::tilt::moments(&e.risk, theta * e.weight)?;
            mean += e.weight * m.mean;
            var += e.weight * e.weight * m.var;
        }
        Ok((u - mean, -var))
    };
    let guess = u / (lambda * lambda);
    let mut lo = 0.0;
    if eval(lo)?.0 < 0.0 {
        return Err(TailError::OutOfDomain(format!(
            "u = {u} lies below the portfolio mean"
        )));
    }
    let mut hi = 2.0 * guess.max(1.0);
    let mut steps = 0;
    while eval(hi)?.0 > 0.0 {
        lo = hi;
        hi *= 2.0;
        steps += 1;
        if steps > 60 {
            return Err(TailError::NonConvergence {
                what: "portfolio tilt bracket",
                iterations: steps,
            });
        }
    }
    newton_decreasing(
        |t| eval(t).unwrap_or((f64::NAN, f64::NAN)),
        lo,
        hi,
        1e-12,
        "portfolio tilt",
    )
}

/// Importance-sampling estimate of P(Σλ_iX_i > u) with every X_i drawn from
/// its tilt dF ∝ e^{θλ_i x} dF_i.
pub fn mc_tail(portfolio: &Portfolio, u: f64, cfg: &McConfig) -> Result<TailEstimate> {
    cfg.validate()?;
    if !u.is_finite() {
        return Err(TailError::OutOfDomain(format!("u must be finite, got {u}")));
    }
    let theta = match cfg.tilt {
        Some(t) => t,
        None => portfolio_tilt(portfolio, u)?,
    };
    let laws: Vec<(f64, TiltedLaw)> = portfolio
        .entries()
        .iter()
        .map(|e| Ok((e.weight, TiltedLaw::new(&e.risk, theta * e.weight)?)))
        .collect::<Result<_>>()?;
    let log_mgf: f64 = laws.iter().map(|(_, l)| l.moments.log_mgf).sum();
    let m = estimate_moments(cfg, |rng| {
        let mut q = 0.0;
        for (w, law) in &laws {
            q += w * law.sample(rng)?;
        }
        Ok(if q > u {
            log_mgf - theta * q
        } else {
            f64::NEG_INFINITY
        })
    })?;
    let acceptance = laws.iter().map(|(_, l)| l.acceptance()).fold(1.0, f64::min);
    Ok(monte_carlo(cfg, &m)?
        .with_meta("u", u)
        .with_meta("theta", theta)
        .with_meta("min_acceptance", acceptance))
}

/// Importance-sampling estimate of P(Q_n > t, W_n > t*), each coordinate
/// tilted to mean δ_i, the corner point of the joint exponent bracket at
/// z = max(t/‖λ‖, t*/‖λ*‖). Coordinates carried by neither portfolio are
/// left out.
pub fn mc_joint(pair: &PortfolioPair, t: f64, t_star: f64, cfg: &McConfig) -> Result<TailEstimate> {
    cfg.validate()?;
    if !(t.is_finite() && t_star.is_finite() && t > 0.0 && t_star > 0.0) {
        return Err(TailError::OutOfDomain(format!(
            "levels must be > 0, got ({t}, {t_star})"
        )));
    }
    let z = (t / pair.lambda_norm()).max(t_star / pair.lambda_star_norm());
    let bracket = joint_exponents(pair, z)?;
    let mut coords = Vec::new();
    for (i, risk) in pair.risks().iter().enumerate() {
        if bracket.delta[i] > 0.0 {
            let s = tilt_for_mean(risk, bracket.delta[i])?;
            coords.push((
                pair.lambda()[i],
                pair.lambda_star()[i],
                TiltedLaw::new(risk, s)?,
            ));
        }
    }
    let m = estimate_moments(cfg, |rng| {
        let (mut q, mut w, mut lr) = (0.0, 0.0, 0.0);
        for (a, b, law) in &coords {
            let x = law.sample(rng)?;
            q += a * x;
            w += b * x;
            lr += law.log_likelihood_ratio(x);
        }
        Ok(if q > t && w > t_star {
            lr
        } else {
            f64::NEG_INFINITY
        })
    })?;
    Ok(monte_carlo(cfg, &m)?
        .with_meta("t", t)
        .with_meta("t_star", t_star)
        .with_meta("z", z)
        .with_meta("rho", bracket.rho))
}

fn binomial_estimate(hits: u64, n: u64, level: f64) -> Result<TailEstimate> {
    if hits == 0 {
        return Err(TailError::NoHits { samples: n });
    }
    let (lower, upper) = clopper_pearson(hits, n, level);
    let p = hits as f64 / n as f64;
    let half = Z95 * ((1.0 - p) / hits as f64).sqrt();
    Ok(TailEstimate::monte_carlo(p.ln(), half)
        .with_meta("hits", hits)
        .with_meta("n_samples", n)
        .with_meta("cp_level", level)
        .with_meta("cp_lower", lower)
        .with_meta("cp_upper", upper))
}

/// Exact two-sided Clopper–Pearson interval for a binomial proportion.
pub fn clopper_pearson(hits: u64, n: u64, level: f64) -> (f64, f64) {
    let alpha = 1.0 - level;
    let (k, n) = (hits as f64, n as f64);
    let lower = if hits == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0)
            .expect("positive shapes")
            .inverse_cdf(alpha / 2.0)
    };
    let upper = if hits as f64 == n {
        1.0
    } else {
        Beta::new(k + 1.0, n - k)
            .expect("positive shapes")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (lower, upper)
}

/// Plain Monte Carlo of P(Σλ_iS_i > u) and P(ΠS_i^{λ_i} > u) on the same
/// draws, weights rescaled to sum to one.
pub fn mc_prodsum(
    scales: &[BoundedScale],
    lambdas: &[f64],
    u: f64,
    cfg: &McConfig,
) -> Result<(TailEstimate, TailEstimate)> {
    cfg.validate()?;
    if scales.len() != lambdas.len() || scales.is_empty() {
        return Err(TailError::param(
            "lambda",
            format!("{} weights for {} scales", lambdas.len(), scales.len()),
        ));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(TailError::OutOfDomain(format!(
            "u must lie in (0, 1), got {u}"
        )));
    }
    for s in scales {
        s.validate()?;
    }
    let (weights, total) = normalize_weights(lambdas)?;
    let ln_u = u.ln();
    let counts = run_chunks(cfg, |rng, len| {
        let (mut sum_hits, mut prod_hits) = (0u64, 0u64);
        for _ in 0..len {
            let (mut sum, mut log_prod) = (0.0, 0.0);
            for (s, w) in scales.iter().zip(&weights) {
                let v = s.sample(rng);
                sum += w * v;
                log_prod += w * v.ln();
            }
            sum_hits += u64::from(sum > u);
            prod_hits += u64::from(log_prod > ln_u);
        }
        Ok((sum_hits, prod_hits))
    })?;
    let (sum_hits, prod_hits) = counts
        .iter()
        .fold((0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1));
    let tag = |e: TailEstimate, event: &str| {
        e.with_meta("u", u)
            .with_meta("weight_sum", total)
            .with_meta("seed", cfg.seed)
            .with_meta("event", event)
    };
    Ok((
        tag(binomial_estimate(sum_hits, cfg.n_samples, 0.95)?, "sum"),
        tag(
            binomial_estimate(prod_hits, cfg.n_samples, 0.95)?,
            "product",
        ),
    ))
}

/// Conditional Monte Carlo of P(Σλ_i√S_iX_i > u) = E[Ψ(u/√V_n)], V_n = Σλ_i²S_i.
pub fn mc_scaled_tail(sp: &ScaledPortfolio, u: f64, cfg: &McConfig) -> Result<TailEstimate> {
    cfg.validate()?;
    if !(u.is_finite() && u > 0.0) {
        return Err(TailError::OutOfDomain(format!("u must be > 0, got {u}")));
    }
    let m = estimate_moments(cfg, |rng| {
        let v = sp.v(&sp.sample_scales(rng));
        Ok(if v > 0.0 {
            log_normal_sf(u / v.sqrt())
        } else {
            f64::NEG_INFINITY
        })
    })?;
    Ok(monte_carlo(cfg, &m)?.with_meta("u", u))
}

/// Naive two-coordinate estimate of the same probability: draws S and X and
/// counts exceedances. Only used to measure the conditional estimator's gain.
pub fn mc_scaled_tail_naive(sp: &ScaledPortfolio, u: f64, cfg: &McConfig) -> Result<TailEstimate> {
    cfg.validate()?;
    let weights = sp.weights();
    let m = estimate_moments(cfg, |rng| {
        let s = sp.sample_scales(rng);
        let q: f64 = weights
            .iter()
            .zip(&s)
            .map(|(w, s)| {
                let x: f64 = rng.sample(rand_distr::StandardNormal);
                w * s.sqrt() * x
            })
            .sum();
        Ok(if q > u { 0.0 } else { f64::NEG_INFINITY })
    })?;
    Ok(monte_carlo(cfg, &m)?.with_meta("u", u))
}
