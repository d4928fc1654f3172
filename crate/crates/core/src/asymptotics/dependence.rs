//! Joint extremes of two portfolios over the same risks: the correlation-like
//! coefficient ϱ, the weak tail dependence coefficient and its finite-level
//! version, and the exponent bracket for the joint exceedance.

use serde::{Deserialize, Serialize};

use super::closed_form::log_tail_qn;
use super::quantile::quantile;
use crate::distributions::{GaussianLikeRisk, Portfolio};
use crate::error::{ensure_finite, Result, TailError};

/// Two weight vectors (λ, λ*) over one shared list of risks. Entries may be
/// zero but neither vector may vanish entirely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioPair {
    lambda: Vec<f64>,
    lambda_star: Vec<f64>,
    risks: Vec<GaussianLikeRisk>,
}

impl PortfolioPair {
    pub fn new(
        lambda: Vec<f64>,
        lambda_star: Vec<f64>,
        risks: Vec<GaussianLikeRisk>,
    ) -> Result<Self> {
        if lambda.len() != risks.len() || lambda_star.len() != risks.len() || risks.is_empty() {
            return Err(TailError::param(
                "lambda_star",
                format!(
                    "weight vectors of length {} and {} for {} risks",
                    lambda.len(),
                    lambda_star.len(),
                    risks.len()
                ),
            ));
        }
        for (name, v) in [("lambda", &lambda), ("lambda_star", &lambda_star)] {
            for &w in v.iter() {
                ensure_finite(name, w)?;
                if w < 0.0 {
                    return Err(TailError::param(
                        name,
                        format!("weights must be >= 0, got {w}"),
                    ));
                }
            }
            if v.iter().all(|&w| w == 0.0) {
                return Err(TailError::param(name, "weight vector is zero"));
            }
        }
        Ok(PortfolioPair {
            lambda,
            lambda_star,
            risks,
        })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn lambda_star(&self) -> &[f64] {
        &self.lambda_star
    }

    pub fn risks(&self) -> &[GaussianLikeRisk] {
        &self.risks
    }

    pub fn lambda_norm(&self) -> f64 {
        norm(&self.lambda)
    }

    pub fn lambda_star_norm(&self) -> f64 {
        norm(&self.lambda_star)
    }

    /// Both weight vectors scaled to unit Euclidean norm.
    pub fn normalized(&self) -> (Vec<f64>, Vec<f64>) {
        let a = self.lambda_norm();
        let b = self.lambda_star_norm();
        (
            self.lambda.iter().map(|w| w / a).collect(),
            self.lambda_star.iter().map(|w| w / b).collect(),
        )
    }

    fn sub_portfolio(&self, weights: &[f64]) -> Result<Portfolio> {
        let (w, r): (Vec<f64>, Vec<GaussianLikeRisk>) = weights
            .iter()
            .zip(&self.risks)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, r)| (*w, r.clone()))
            .unzip();
        Portfolio::from_parts(&w, &r)
    }

    /// Q_n over the risks with positive λ_i.
    pub fn q_portfolio(&self) -> Result<Portfolio> {
        self.sub_portfolio(&self.lambda)
    }

    /// W_n over the risks with positive λ_i*.
    pub fn w_portfolio(&self) -> Result<Portfolio> {
        self.sub_portfolio(&self.lambda_star)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|w| w * w).sum::<f64>().sqrt()
}

/// ϱ = Σλ_iλ_i* / √(Σλ_i² Σ(λ_i*)²).
pub fn rho(pair: &PortfolioPair) -> f64 {
    let dot: f64 = pair
        .lambda
        .iter()
        .zip(&pair.lambda_star)
        .map(|(a, b)| a * b)
        .sum();
    (dot / (pair.lambda_norm() * pair.lambda_star_norm())).clamp(0.0, 1.0)
}

fn distinct_rho(pair: &PortfolioPair) -> Result<f64> {
    let r = rho(pair);
    if r >= 1.0 - 1e-12 {
        Err(TailError::IdenticalPortfolios { rho: r })
    } else {
        Ok(r)
    }
}

/// Limiting weak tail dependence coefficient χ̄(Q_n, W_n) = ϱ.
pub fn chi_bar_asymptotic(pair: &PortfolioPair) -> Result<f64> {
    distinct_rho(pair)
}

/// ‖aλ + (1−a)λ*‖² for the normalized weights.
pub fn combination_norm_sq(pair: &PortfolioPair, a: f64) -> f64 {
    let (l, ls) = pair.normalized();
    l.iter()
        .zip(&ls)
        .map(|(x, y)| (a * x + (1.0 - a) * y).powi(2))
        .sum()
}

/// Exponent bracket for ln P(Q_n > ·, W_n > ·) at normalized level `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointExponents {
    pub rho: f64,
    /// −z²/(1+ϱ), from the best combination a = b = ½ with ‖·‖² = (1+ϱ)/2.
    pub upper_log_bound: f64,
    /// Σ_i ln P(X_i > δ_i) over the risks with λ_i + λ_i* > 0.
    pub lower_log_bound: f64,
    /// Corner point δ_i = (λ_i + λ_i*)·z/(1+ϱ) of the normalized weights.
    pub delta: Vec<f64>,
}

pub fn joint_exponents(pair: &PortfolioPair, z: f64) -> Result<JointExponents> {
    if !(z.is_finite() && z > 0.0) {
        return Err(TailError::OutOfDomain(format!(
            "joint level z must be > 0, got {z}"
        )));
    }
    let r = distinct_rho(pair)?;
    let (l, ls) = pair.normalized();
    let delta: Vec<f64> = l
        .iter()
        .zip(&ls)
        .map(|(a, b)| (a + b) * z / (1.0 + r))
        .collect();
    let lower = delta
        .iter()
        .zip(&pair.risks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(d, risk)| risk.log_survival(*d))
        .sum();
    Ok(JointExponents {
        rho: r,
        upper_log_bound: -z * z / (1.0 + r),
        lower_log_bound: lower,
        delta,
    })
}

/// [ln P(Q > t) + ln P(W > t*)] / ln P(Q > t, W > t*) − 1.
pub fn chi_bar_from_logs(log_q: f64, log_w: f64, log_joint: f64) -> Result<f64> {
    if !(log_joint < 0.0) {
        return Err(TailError::OutOfDomain(format!(
            "joint log-probability must be < 0, got {log_joint}"
        )));
    }
    Ok((log_q + log_w) / log_joint - 1.0)
}

/// Finite-level weak tail dependence at return period `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiBarU {
    pub u: f64,
    pub t_u: f64,
    pub t_u_star: f64,
    /// max(t_u/‖λ‖, t_u*/‖λ*‖).
    pub z_u: f64,
    pub log_q: f64,
    pub log_w: f64,
    pub log_joint: f64,
    pub chi_bar: f64,
    /// χ̄_u with the joint log at the lower end of the bracket.
    pub chi_bar_lower: f64,
    /// χ̄_u with the joint log at the upper end of the bracket.
    pub chi_bar_upper: f64,
    pub bracket: JointExponents,
}

/// Levels t_u, t_u* with closed-form marginal exceedance 1/u, and the
/// normalized corner level z_u.
pub fn marginal_levels(pair: &PortfolioPair, u: f64) -> Result<(f64, f64, f64)> {
    let t = quantile(&pair.q_portfolio()?, 1.0 / u)?;
    let t_star = quantile(&pair.w_portfolio()?, 1.0 / u)?;
    let z = (t / pair.lambda_norm()).max(t_star / pair.lambda_star_norm());
    Ok((t, t_star, z))
}

/// χ̄_u with marginals from the closed form at t_u = quantile_Q(1/u),
/// t_u* = quantile_W(1/u). The joint log-probability is `joint_log` when
/// given (e.g. from an importance-sampling oracle), else the midpoint of the
/// exponent bracket.
pub fn chi_bar_u(pair: &PortfolioPair, u: f64, joint_log: Option<f64>) -> Result<ChiBarU> {
    if !(u > 100.0) {
        return Err(TailError::OutOfDomain(format!(
            "return period u must be > 100, got {u}"
        )));
    }
    distinct_rho(pair)?;
    let (t, t_star, z) = marginal_levels(pair, u)?;
    let log_q = log_tail_qn(&pair.q_portfolio()?, t)?;
    let log_w = log_tail_qn(&pair.w_portfolio()?, t_star)?;
    let bracket = joint_exponents(pair, z)?;
    let log_joint = joint_log.unwrap_or(0.5 * (bracket.lower_log_bound + bracket.upper_log_bound));
    Ok(ChiBarU {
        u,
        t_u: t,
        t_u_star: t_star,
        z_u: z,
        log_q,
        log_w,
        log_joint,
        chi_bar: chi_bar_from_logs(log_q, log_w, log_joint)?,
        chi_bar_lower: chi_bar_from_logs(log_q, log_w, bracket.lower_log_bound)?,
        chi_bar_upper: chi_bar_from_logs(log_q, log_w, bracket.upper_log_bound)?,
        bracket,
    })
}
