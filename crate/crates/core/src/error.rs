use thiserror::Error;

/// Errors raised by model construction, closed-form evaluation and the oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TailError {
    /// A parameter violates a model invariant (non-positive weight, non-finite value, ...).
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The argument lies outside the region where the requested formula is defined.
    #[error("argument out of domain: {0}")]
    OutOfDomain(String),

    /// The two portfolios of a pair coincide (rho = 1).
    #[error("portfolios must differ: rho = {rho} (asymptotic independence needs rho < 1)")]
    IdenticalPortfolios { rho: f64 },

    /// An iterative solver exhausted its budget.
    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
    },

    /// An oracle refinement loop hit its configured ceiling before meeting its tolerance.
    #[error("convergence budget exhausted: {0}")]
    BudgetExhausted(String),

    /// A Monte Carlo run recorded no exceedance at all.
    #[error("no hits in {samples} samples; the level is too extreme for this budget")]
    NoHits { samples: u64 },

    /// A numerical oracle could not certify its result.
    #[error("oracle failure: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, TailError>;

impl TailError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        TailError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(TailError::param(
            name,
            format!("must be finite, got {value}"),
        ))
    }
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(TailError::param(name, format!("must be > 0, got {value}")))
    }
}
