//! Tail asymptotics for weighted sums of Gaussian-like risks and for
//! randomly scaled Gaussian portfolios, with quadrature and importance
//! sampling oracles for checking them at very small probabilities.
//!
//! Probabilities are carried as natural logarithms throughout.

// `!(x < y)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod distributions;
mod error;
pub mod oracle;
pub mod quad;
mod roots;
pub mod special;

pub use asymptotics::{Method, TailEstimate};
pub use distributions::{
    Body, BoundedScale, GaussianLikeRisk, Portfolio, PortfolioEntry, ScaledEntry, ScaledPortfolio,
    SlowlyVarying,
};
pub use error::{Result, TailError};
