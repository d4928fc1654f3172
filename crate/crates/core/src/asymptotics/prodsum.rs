//! Sums and weighted geometric means of bounded scales near the endpoint,
//! and the randomly scaled Gaussian portfolio built on them.

use super::closed_form::into_estimate;
use super::TailEstimate;
use crate::distributions::{BoundedScale, ScaledPortfolio};
use crate::error::{ensure_positive, Result, TailError};
use crate::special::{ln_gamma, log_normal_sf};

/// Weights rescaled to sum to one, with the original sum.
pub(crate) fn normalize_weights(lambdas: &[f64]) -> Result<(Vec<f64>, f64)> {
    for &l in lambdas {
        ensure_positive("lambda", l)?;
    }
    let total: f64 = lambdas.iter().sum();
    Ok((lambdas.iter().map(|l| l / total).collect(), total))
}

/// ln of Π_i[λ_i^{−γ_i} Γ(γ_i+1) P(S_i > u)] / Γ(Σγ_i + 1) for weights
/// summing to one.
pub(crate) fn log_prodsum(scales: &[BoundedScale], weights: &[f64], u: f64) -> f64 {
    let gamma_sum: f64 = scales.iter().map(|s| s.gamma()).sum();
    let terms: f64 = scales
        .iter()
        .zip(weights)
        .map(|(s, &w)| {
            let g = s.gamma();
            -g * w.ln() + ln_gamma(g + 1.0) + s.log_survival(u)
        })
        .sum();
    terms - ln_gamma(gamma_sum + 1.0)
}

/// Common asymptotic value of P(Σλ_iS_i > u) and P(ΠS_i^{λ_i} > u) as u ↑ 1.
///
/// Weights not summing to one are rescaled; the factor is kept in the
/// `weight_sum` meta entry.
pub fn prodsum_tail(
    scales: &[BoundedScale],
    lambdas: &[f64],
    u: f64,
) -> Result<(TailEstimate, TailEstimate)> {
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
    let log_value = log_prodsum(scales, &weights, u);
    let est = TailEstimate::closed_form(log_value)
        .with_meta("u", u)
        .with_meta("weight_sum", total);
    Ok((
        est.clone().with_meta("event", "sum"),
        est.with_meta("event", "product"),
    ))
}

/// Γ(Σγ_i+1)·P(Ṽ_n > 1 − 2(λ/u)²)·Ψ(u/λ) with the Ṽ_n tail taken from the
/// product/sum asymptotics on weights λ_i²/λ².
pub fn scaled_tail(sp: &ScaledPortfolio, u: f64) -> Result<TailEstimate> {
    let lambda = sp.lambda_norm();
    if !(u.is_finite() && u > lambda * std::f64::consts::SQRT_2) {
        return Err(TailError::OutOfDomain(format!(
            "scaled tail needs u > λ√2 = {}, got {u}",
            lambda * std::f64::consts::SQRT_2
        )));
    }
    let level = 1.0 - 2.0 * (lambda / u).powi(2);
    let weights: Vec<f64> = sp
        .weights()
        .iter()
        .map(|w| w * w / (lambda * lambda))
        .collect();
    let log_v = log_prodsum(&sp.scales(), &weights, level);
    let log_prob = ln_gamma(sp.gamma_sum() + 1.0) + log_v + log_normal_sf(u / lambda);
    Ok(into_estimate(log_prob, u)?.with_meta("v_level", level))
}
