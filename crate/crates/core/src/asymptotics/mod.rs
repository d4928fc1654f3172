//! Closed-form tail asymptotics, evaluated in log space.

mod closed_form;
mod dependence;
mod estimate;
mod prodsum;
mod quantile;

pub use closed_form::{
    log_tail_pair, log_tail_qn, log_tail_qn_iterated, tail_pair, tail_qn, tail_qn_iterated,
};
pub use dependence::{
    chi_bar_asymptotic, chi_bar_from_logs, chi_bar_u, combination_norm_sq, joint_exponents,
    marginal_levels, rho, ChiBarU, JointExponents, PortfolioPair,
};
pub use estimate::{Method, TailEstimate};
pub use prodsum::{prodsum_tail, scaled_tail};
pub use quantile::quantile;

pub(crate) use prodsum::normalize_weights;
