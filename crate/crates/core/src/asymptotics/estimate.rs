use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Which route produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

/// A probability carried in natural-log space.
///
/// `ci_log_halfwidth` is present exactly when `method` is `MonteCarlo`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub log_prob: f64,
    pub method: Method,
    pub ci_log_halfwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl TailEstimate {
    pub fn closed_form(log_prob: f64) -> Self {
        TailEstimate {
            log_prob,
            method: Method::ClosedForm,
            ci_log_halfwidth: None,
            meta: BTreeMap::new(),
        }
    }

    pub fn quadrature(log_prob: f64) -> Self {
        TailEstimate {
            method: Method::Quadrature,
            ..Self::closed_form(log_prob)
        }
    }

    pub fn monte_carlo(log_prob: f64, ci_log_halfwidth: f64) -> Self {
        TailEstimate {
            log_prob,
            method: Method::MonteCarlo,
            ci_log_halfwidth: Some(ci_log_halfwidth),
            meta: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub fn prob(&self) -> f64 {
        self.log_prob.exp()
    }

    /// exp(self − other), computed in log space.
    pub fn ratio_to(&self, other: &TailEstimate) -> f64 {
        (self.log_prob - other.log_prob).exp()
    }

    /// Whether `log_value` lies within `k` confidence half-widths of this estimate.
    pub fn covers(&self, log_value: f64, k: f64) -> bool {
        match self.ci_log_halfwidth {
            Some(h) => (self.log_prob - log_value).abs() <= k * h,
            None => self.log_prob == log_value,
        }
    }
}
