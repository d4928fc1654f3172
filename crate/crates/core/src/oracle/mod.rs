//! Independent numerical ground truth: adaptive-quadrature convolution and
//! exponentially tilted Monte Carlo.

mod convolution;
mod law;
mod mc;
mod tilt;

pub use convolution::{convolve_pair, convolve_portfolio, QuadratureConfig, MAX_QUADRATURE_TERMS};
pub use mc::{
    clopper_pearson, mc_joint, mc_prodsum, mc_scaled_tail, mc_scaled_tail_naive, mc_tail,
    portfolio_tilt, McConfig,
};
