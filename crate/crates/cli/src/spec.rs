//! Portfolio specification files (TOML).

use gaussian_tails::asymptotics::PortfolioPair;
use gaussian_tails::oracle::{McConfig, QuadratureConfig};
use gaussian_tails::{BoundedScale, GaussianLikeRisk, Portfolio, ScaledPortfolio, SlowlyVarying};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub spec_version: u32,
    #[serde(default)]
    pub risks: Vec<RiskSpec>,
    pub lambda: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<BoundedScale>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub oracle: OracleBudget,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    #[default]
    GaussianLike,
    StandardNormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskSpec {
    #[serde(default)]
    pub law: Law,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sv: Option<SlowlyVarying>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_onset: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleBudget {
    pub samples: u64,
    pub chunks: u32,
    pub max_ci_log_halfwidth: Option<f64>,
    pub rel_tol: f64,
    pub truncation_c: f64,
    pub max_truncation_c: f64,
    pub grid_points_per_doubling: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        let mc = McConfig::default();
        let q = QuadratureConfig::default();
        OracleBudget {
            samples: mc.n_samples,
            chunks: mc.n_chunks,
            max_ci_log_halfwidth: None,
            rel_tol: q.rel_tol,
            truncation_c: q.truncation_c,
            max_truncation_c: q.max_truncation_c,
            grid_points_per_doubling: q.grid_points_per_doubling,
        }
    }
}

impl OracleBudget {
    pub fn mc(&self, seed: u64) -> McConfig {
        McConfig {
            n_samples: self.samples,
            seed,
            n_chunks: self.chunks,
            tilt: None,
            max_ci_log_halfwidth: self.max_ci_log_halfwidth,
        }
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            rel_tol: self.rel_tol,
            truncation_c: self.truncation_c,
            max_truncation_c: self.max_truncation_c,
            grid_points_per_doubling: self.grid_points_per_doubling,
        }
    }
}

impl SpecFile {
    /// Parses and checks a spec document; errors carry a line or field path.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let spec: SpecFile = toml::from_str(text).map_err(|e| CliError::Spec(e.to_string()))?;
        let raw: toml::Value = toml::from_str(text).map_err(|e| CliError::Spec(e.to_string()))?;
        check_finite(&raw, "")?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.spec_version != SPEC_VERSION {
            return Err(CliError::field(
                "spec_version",
                format!(
                    "unsupported version {} (expected {SPEC_VERSION})",
                    self.spec_version
                ),
            ));
        }
        let n = if self.risks.is_empty() {
            self.scales.as_ref().map_or(0, Vec::len)
        } else {
            self.risks.len()
        };
        if n == 0 {
            return Err(CliError::field("risks", "no risks and no scales given"));
        }
        if self.lambda.len() != n {
            return Err(CliError::field(
                "lambda",
                format!("{} weights for {n} entries", self.lambda.len()),
            ));
        }
        if let Some(ls) = &self.lambda_star {
            if ls.len() != n {
                return Err(CliError::field(
                    "lambda_star",
                    format!("{} weights for {n} entries", ls.len()),
                ));
            }
        }
        if let Some(s) = &self.scales {
            if s.len() != n {
                return Err(CliError::field(
                    "scales",
                    format!("{} scales for {n} entries", s.len()),
                ));
            }
            for (i, sc) in s.iter().enumerate() {
                sc.validate()
                    .map_err(|e| CliError::field(format!("scales[{i}]"), e.to_string()))?;
            }
        }
        if let Some(p) = &self.p_grid {
            if let Some(i) = p.iter().position(|&x| !(x > 0.0 && x < 1.0)) {
                return Err(CliError::field(
                    format!("p_grid[{i}]"),
                    format!("must lie in (0, 1), got {}", p[i]),
                ));
            }
        }
        for (i, _) in self.risks.iter().enumerate() {
            self.risk(i)?;
        }
        self.oracle
            .mc(self.seed)
            .validate()
            .map_err(|e| CliError::field("oracle", e.to_string()))?;
        self.oracle
            .quadrature()
            .validate()
            .map_err(|e| CliError::field("oracle", e.to_string()))?;
        Ok(())
    }

    fn risk(&self, i: usize) -> Result<GaussianLikeRisk, CliError> {
        let r = &self.risks[i];
        let path = |f: &str| format!("risks[{i}].{f}");
        match r.law {
            Law::StandardNormal => {
                for (name, set) in [
                    ("alpha", r.alpha.is_some()),
                    ("sv", r.sv.is_some()),
                    ("p", r.p.is_some()),
                    ("x_onset", r.x_onset.is_some()),
                ] {
                    if set {
                        return Err(CliError::field(
                            path(name),
                            "not allowed with law = \"standard_normal\"",
                        ));
                    }
                }
                Ok(GaussianLikeRisk::standard_normal())
            }
            Law::GaussianLike => {
                let alpha = r
                    .alpha
                    .ok_or_else(|| CliError::field(path("alpha"), "missing"))?;
                let sv = r.sv.clone().unwrap_or(SlowlyVarying::Constant { c: 1.0 });
                let p = r.p.unwrap_or(1.0);
                let built = match r.x_onset {
                    Some(x) => GaussianLikeRisk::with_onset(alpha, sv, p, x),
                    None => GaussianLikeRisk::new(alpha, sv, p),
                };
                built
                    .map_err(|e| CliError::field(path(core_field(&e).unwrap_or("")), e.to_string()))
            }
        }
    }

    pub fn risks(&self) -> Result<Vec<GaussianLikeRisk>, CliError> {
        (0..self.risks.len()).map(|i| self.risk(i)).collect()
    }

    pub fn portfolio(&self) -> Result<Portfolio, CliError> {
        if self.risks.is_empty() {
            return Err(CliError::field(
                "risks",
                "this command needs a list of risks",
            ));
        }
        Portfolio::from_parts(&self.lambda, &self.risks()?)
            .map_err(|e| CliError::field("lambda", e.to_string()))
    }

    pub fn pair(&self) -> Result<PortfolioPair, CliError> {
        let ls = self.lambda_star.clone().ok_or_else(|| {
            CliError::field("lambda_star", "missing; needed for a portfolio pair")
        })?;
        PortfolioPair::new(self.lambda.clone(), ls, self.risks()?)
            .map_err(|e| CliError::field("lambda_star", e.to_string()))
    }

    pub fn scale_list(&self) -> Result<Vec<BoundedScale>, CliError> {
        self.scales
            .clone()
            .ok_or_else(|| CliError::field("scales", "missing; needed for this command"))
    }

    pub fn scaled_portfolio(&self) -> Result<ScaledPortfolio, CliError> {
        ScaledPortfolio::from_parts(&self.lambda, &self.scale_list()?)
            .map_err(|e| CliError::field("lambda", e.to_string()))
    }
}

fn core_field(e: &gaussian_tails::TailError) -> Option<&'static str> {
    match e {
        gaussian_tails::TailError::InvalidParameter { name, .. } => Some(name),
        _ => None,
    }
}

fn check_finite(v: &toml::Value, path: &str) -> Result<(), CliError> {
    match v {
        toml::Value::Float(x) if !x.is_finite() => Err(CliError::field(
            path.to_string(),
            format!("must be finite, got {x}"),
        )),
        toml::Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                check_finite(item, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        toml::Value::Table(t) => {
            for (k, item) in t {
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                check_finite(item, &p)?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
spec_version = 1
lambda = [1.0, 0.5]

[[risks]]
law = "standard_normal"

[[risks]]
alpha = -2.0
sv = { kind = "log_power", c = 1.0, beta = 0.5 }
"#;

    #[test]
    fn parses_and_builds() {
        let s = SpecFile::parse(BASE).unwrap();
        let p = s.portfolio().unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.entries()[0].risk.is_standard_normal());
        assert_eq!(s.oracle.samples, 1_000_000);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_kinds() {
        let e = SpecFile::parse(&format!("{BASE}\nextra = 1\n")).unwrap_err();
        assert!(e.to_string().contains("extra"), "{e}");
        let e = SpecFile::parse(&BASE.replace("log_power", "log_pow")).unwrap_err();
        assert!(
            e.to_string().contains("sv") && e.to_string().contains("log_pow"),
            "{e}"
        );
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn rejects_non_finite_and_misplaced_fields() {
        let e = SpecFile::parse(&BASE.replace("beta = 0.5", "beta = nan")).unwrap_err();
        assert!(e.to_string().contains("risks[1].sv.beta"), "{e}");
        let e = SpecFile::parse(&BASE.replace(
            "law = \"standard_normal\"",
            "law = \"standard_normal\"\np = 2.0",
        ))
        .unwrap_err();
        assert!(e.to_string().contains("risks[0].p"), "{e}");
        let e =
            SpecFile::parse(&BASE.replace("alpha = -2.0", "alpha = -2.0\np = -1.0")).unwrap_err();
        assert!(e.to_string().contains("risks[1].p"), "{e}");
    }

    #[test]
    fn length_mismatch_names_field() {
        let e = SpecFile::parse(&BASE.replace("[1.0, 0.5]", "[1.0]")).unwrap_err();
        assert!(e.to_string().contains("lambda"), "{e}");
    }
}
