//! Closed-form tail asymptotics for weighted sums of Gaussian-like risks.
//!
//! All slowly varying factors are evaluated at the aggregate argument `u`.

use super::TailEstimate;
use crate::distributions::{GaussianLikeRisk, Portfolio};
use crate::error::{Result, TailError};
use crate::special::LN_SQRT_2PI;

fn check_level(u: f64) -> Result<()> {
    if u.is_finite() && u > 1.0 {
        Ok(())
    } else {
        Err(TailError::OutOfDomain(format!(
            "tail level u must be > 1, got {u}"
        )))
    }
}

fn check_unit_scales(portfolio: &Portfolio) -> Result<()> {
    match portfolio.entries().iter().position(|e| e.risk.p() != 1.0) {
        None => Ok(()),
        Some(i) => Err(TailError::param(
            "p",
            format!(
                "entry {i} has p = {}; the n-term formula needs unit-scale risks",
                portfolio.entries()[i].risk.p()
            ),
        )),
    }
}

pub(crate) fn into_estimate(log_prob: f64, u: f64) -> Result<TailEstimate> {
    if log_prob > 0.0 {
        return Err(TailError::OutOfDomain(format!(
            "asymptotic expression exceeds 1 at u = {u} (log = {log_prob}); u is below the tail regime"
        )));
    }
    Ok(TailEstimate::closed_form(log_prob).with_meta("u", u))
}

/// ln of (√2π)^{n−1} Π[λ_j^{α_j+1} L_j(u)] u^{α+n−1} / λ^{2α+2n−1} · exp(−u²/(2λ²)).
pub fn log_tail_qn(portfolio: &Portfolio, u: f64) -> Result<f64> {
    check_level(u)?;
    check_unit_scales(portfolio)?;
    let n = portfolio.len() as f64;
    let lambda = portfolio.lambda_norm();
    let alpha = portfolio.alpha_sum();
    let factors: f64 = portfolio
        .entries()
        .iter()
        .map(|e| (e.risk.alpha() + 1.0) * e.weight.ln() + e.risk.sv().ln_eval(u))
        .sum();
    Ok(
        (n - 1.0) * LN_SQRT_2PI + factors + (alpha + n - 1.0) * u.ln()
            - (2.0 * alpha + 2.0 * n - 1.0) * lambda.ln()
            - u * u / (2.0 * lambda * lambda),
    )
}

/// d/du of [`log_tail_qn`].
pub(crate) fn log_tail_qn_slope(portfolio: &Portfolio, u: f64) -> f64 {
    let n = portfolio.len() as f64;
    let lambda = portfolio.lambda_norm();
    let sv: f64 = portfolio
        .entries()
        .iter()
        .map(|e| e.risk.sv().d_ln(u))
        .sum();
    (portfolio.alpha_sum() + n - 1.0) / u + sv - u / (lambda * lambda)
}

/// Closed-form P(Q_n > u) for unit-scale risks.
pub fn tail_qn(portfolio: &Portfolio, u: f64) -> Result<TailEstimate> {
    into_estimate(log_tail_qn(portfolio, u)?, u)
}

/// Tail parameters of a summand: P(Y > u) ≈ exp(ln_l)·u^alpha·exp(−u²/(2p²)),
/// with `ln_l` already evaluated at the aggregate argument.
#[derive(Debug, Clone, Copy)]
struct TailTriple {
    alpha: f64,
    ln_l: f64,
    p: f64,
}

impl TailTriple {
    fn of_risk(risk: &GaussianLikeRisk, u: f64) -> Self {
        TailTriple {
            alpha: risk.alpha(),
            ln_l: risk.sv().ln_eval(u),
            p: risk.p(),
        }
    }

    /// λX for a unit-scale X: L picks up λ^{−α} and p becomes λ.
    fn of_weighted(weight: f64, risk: &GaussianLikeRisk, u: f64) -> Self {
        TailTriple {
            alpha: risk.alpha(),
            ln_l: risk.sv().ln_eval(u) - risk.alpha() * weight.ln(),
            p: weight * risk.p(),
        }
    }

    /// Tail of the independent sum of two summands.
    fn convolve(self, other: TailTriple) -> TailTriple {
        let p_sq = self.p * self.p + other.p * other.p;
        let ln_p = 0.5 * p_sq.ln();
        TailTriple {
            alpha: self.alpha + other.alpha + 1.0,
            ln_l: LN_SQRT_2PI
                + (2.0 * self.alpha + 1.0) * self.p.ln()
                + (2.0 * other.alpha + 1.0) * other.p.ln()
                - (2.0 * self.alpha + 2.0 * other.alpha + 3.0) * ln_p
                + self.ln_l
                + other.ln_l,
            p: p_sq.sqrt(),
        }
    }

    fn log_tail(self, u: f64) -> f64 {
        self.ln_l + self.alpha * u.ln() - u * u / (2.0 * self.p * self.p)
    }
}

/// ln of √(2π)·p₁^{2α₁+1}p₂^{2α₂+1}L₁(u)L₂(u)u^{α₁+α₂+1}/p^{2α₁+2α₂+3}·exp(−u²/(2p²)),
/// p = √(p₁²+p₂²): the tail of X₁ + X₂.
pub fn log_tail_pair(risk1: &GaussianLikeRisk, risk2: &GaussianLikeRisk, u: f64) -> Result<f64> {
    check_level(u)?;
    Ok(TailTriple::of_risk(risk1, u)
        .convolve(TailTriple::of_risk(risk2, u))
        .log_tail(u))
}

pub fn tail_pair(
    risk1: &GaussianLikeRisk,
    risk2: &GaussianLikeRisk,
    u: f64,
) -> Result<TailEstimate> {
    into_estimate(log_tail_pair(risk1, risk2, u)?, u)
}

/// The n-term tail obtained by folding the two-term formula left to right
/// over the weighted summands.
pub fn log_tail_qn_iterated(portfolio: &Portfolio, u: f64) -> Result<f64> {
    check_level(u)?;
    check_unit_scales(portfolio)?;
    let mut entries = portfolio.entries().iter();
    let first = entries.next().expect("non-empty portfolio");
    let acc = entries.fold(
        TailTriple::of_weighted(first.weight, &first.risk, u),
        |acc, e| acc.convolve(TailTriple::of_weighted(e.weight, &e.risk, u)),
    );
    Ok(acc.log_tail(u))
}

pub fn tail_qn_iterated(portfolio: &Portfolio, u: f64) -> Result<TailEstimate> {
    into_estimate(log_tail_qn_iterated(portfolio, u)?, u)
}
