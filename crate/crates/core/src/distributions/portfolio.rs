use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BoundedScale, GaussianLikeRisk};
use crate::error::{ensure_positive, Result, TailError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioEntry {
    pub weight: f64,
    pub risk: GaussianLikeRisk,
}

/// Q_n = Σ λ_i X_i over independent Gaussian-like risks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    entries: Vec<PortfolioEntry>,
    lambda_norm: f64,
    alpha_sum: f64,
}

impl Portfolio {
    pub fn new(entries: Vec<PortfolioEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(TailError::param(
                "entries",
                "portfolio needs at least one entry",
            ));
        }
        for e in &entries {
            ensure_positive("weight", e.weight)?;
        }
        let lambda_norm = norm(entries.iter().map(|e| e.weight));
        let alpha_sum = entries.iter().map(|e| e.risk.alpha()).sum();
        Ok(Portfolio {
            entries,
            lambda_norm,
            alpha_sum,
        })
    }

    pub fn from_parts(weights: &[f64], risks: &[GaussianLikeRisk]) -> Result<Self> {
        if weights.len() != risks.len() {
            return Err(TailError::param(
                "weights",
                format!("{} weights for {} risks", weights.len(), risks.len()),
            ));
        }
        Self::new(
            weights
                .iter()
                .zip(risks)
                .map(|(&weight, risk)| PortfolioEntry {
                    weight,
                    risk: risk.clone(),
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[PortfolioEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// λ = (Σλ_i²)^{1/2}.
    pub fn lambda_norm(&self) -> f64 {
        self.lambda_norm
    }

    /// α = Σα_i.
    pub fn alpha_sum(&self) -> f64 {
        self.alpha_sum
    }

    pub fn weights(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.weight).collect()
    }

    /// Draw one realization of Q_n.
    pub fn sample_total<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let mut total = 0.0;
        for e in &self.entries {
            total += e.weight * e.risk.sample_one(rng)?;
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledEntry {
    pub weight: f64,
    pub scale: BoundedScale,
}

/// Q_n* = Σ λ_i √S_i X_i with standard normal X_i, independent of the S_i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledPortfolio {
    entries: Vec<ScaledEntry>,
    lambda_norm: f64,
}

impl ScaledPortfolio {
    pub fn new(entries: Vec<ScaledEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(TailError::param(
                "entries",
                "portfolio needs at least one entry",
            ));
        }
        for e in &entries {
            ensure_positive("weight", e.weight)?;
            e.scale.validate()?;
        }
        let lambda_norm = norm(entries.iter().map(|e| e.weight));
        Ok(ScaledPortfolio {
            entries,
            lambda_norm,
        })
    }

    pub fn from_parts(weights: &[f64], scales: &[BoundedScale]) -> Result<Self> {
        if weights.len() != scales.len() {
            return Err(TailError::param(
                "weights",
                format!("{} weights for {} scales", weights.len(), scales.len()),
            ));
        }
        Self::new(
            weights
                .iter()
                .zip(scales)
                .map(|(&weight, &scale)| ScaledEntry { weight, scale })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[ScaledEntry] {
        &self.entries
    }

    pub fn lambda_norm(&self) -> f64 {
        self.lambda_norm
    }

    pub fn weights(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.weight).collect()
    }

    pub fn scales(&self) -> Vec<BoundedScale> {
        self.entries.iter().map(|e| e.scale).collect()
    }

    pub fn gamma_sum(&self) -> f64 {
        self.entries.iter().map(|e| e.scale.gamma()).sum()
    }

    /// V_n = Σ λ_i² S_i for the given scale draws.
    pub fn v(&self, s: &[f64]) -> f64 {
        self.entries
            .iter()
            .zip(s)
            .map(|(e, si)| e.weight * e.weight * si)
            .sum()
    }

    /// Ṽ_n = V_n / λ².
    pub fn v_tilde(&self, s: &[f64]) -> f64 {
        self.v(s) / (self.lambda_norm * self.lambda_norm)
    }

    /// V_n* = Π S_i^{λ_i}.
    pub fn v_star(&self, s: &[f64]) -> f64 {
        self.entries
            .iter()
            .zip(s)
            .map(|(e, si)| si.powf(e.weight))
            .product()
    }

    pub fn sample_scales<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.entries.iter().map(|e| e.scale.sample(rng)).collect()
    }
}

fn norm(values: impl Iterator<Item = f64>) -> f64 {
    values.map(|v| v * v).sum::<f64>().sqrt()
}
