//! Evaluable and samplable models: Gaussian-like risks, bounded scale
//! factors, and the portfolios built from them.

mod portfolio;
mod risk;
mod scale;
mod slowly_varying;

pub use portfolio::{Portfolio, PortfolioEntry, ScaledEntry, ScaledPortfolio};
pub use risk::{Body, GaussianLikeRisk};
pub use scale::BoundedScale;
pub use slowly_varying::SlowlyVarying;
