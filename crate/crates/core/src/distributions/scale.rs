use rand::distr::{Distribution, Open01};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Result, TailError};

/// A scale factor supported on [0, 1] whose survival is regularly varying
/// with index `gamma` at the endpoint 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundedScale {
    /// P(S > 1 − t) = t^gamma on [0, 1]; gamma = 0 is the point mass at 1.
    PowerEndpoint { gamma: f64 },
    /// Beta(a, gamma).
    Beta { a: f64, gamma: f64 },
}

impl BoundedScale {
    pub fn power_endpoint(gamma: f64) -> Result<Self> {
        let s = BoundedScale::PowerEndpoint { gamma };
        s.validate()?;
        Ok(s)
    }

    pub fn beta(a: f64, gamma: f64) -> Result<Self> {
        let s = BoundedScale::Beta { a, gamma };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BoundedScale::PowerEndpoint { gamma } => {
                ensure_finite("gamma", gamma)?;
                if gamma < 0.0 {
                    return Err(TailError::param(
                        "gamma",
                        format!("must be >= 0, got {gamma}"),
                    ));
                }
                Ok(())
            }
            BoundedScale::Beta { a, gamma } => {
                ensure_positive("a", a)?;
                ensure_positive("gamma", gamma)
            }
        }
    }

    /// Endpoint index γ.
    pub fn gamma(&self) -> f64 {
        match *self {
            BoundedScale::PowerEndpoint { gamma } | BoundedScale::Beta { gamma, .. } => gamma,
        }
    }

    /// ln P(S > u).
    pub fn log_survival(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 0.0;
        }
        match *self {
            BoundedScale::PowerEndpoint { gamma } => {
                if u >= 1.0 {
                    f64::NEG_INFINITY
                } else if gamma == 0.0 {
                    0.0
                } else {
                    gamma * (-u).ln_1p()
                }
            }
            BoundedScale::Beta { a, gamma } => {
                if u >= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    // 1 − I_u(a, γ) = I_{1−u}(γ, a), no cancellation near 1
                    statrs::function::beta::beta_reg(gamma, a, 1.0 - u).ln()
                }
            }
        }
    }

    pub fn survival(&self, u: f64) -> f64 {
        self.log_survival(u).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            BoundedScale::PowerEndpoint { gamma } => {
                if gamma == 0.0 {
                    1.0
                } else {
                    let u: f64 = rng.sample(Open01);
                    1.0 - u.powf(1.0 / gamma)
                }
            }
            BoundedScale::Beta { a, gamma } => rand_distr::Beta::new(a, gamma)
                .expect("validated parameters")
                .sample(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn power_law_value() {
        let s = BoundedScale::power_endpoint(2.0).unwrap();
        assert!((s.survival(0.9) - 0.01).abs() < 1e-15);
        assert_eq!(s.survival(1.0), 0.0);
    }

    #[test]
    fn power_endpoint_ratio_is_exact() {
        let s = BoundedScale::power_endpoint(0.5).unwrap();
        for &x in &[2.0, 10.0, 1e3] {
            for &t in &[0.25, 0.5, 1.0] {
                let r = s.survival(1.0 - t / x) / s.survival(1.0 - 1.0 / x);
                assert!((r - t.sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_gamma_zero() {
        let s = BoundedScale::power_endpoint(0.0).unwrap();
        assert_eq!(s.survival(0.999), 1.0);
        assert_eq!(s.sample(&mut ChaCha8Rng::seed_from_u64(1)), 1.0);
    }

    #[test]
    fn beta_two_one_closed_form() {
        let s = BoundedScale::beta(2.0, 1.0).unwrap();
        for &u in &[0.0, 0.3, 0.9, 0.999] {
            assert!((s.survival(u) - (1.0 - u * u)).abs() < 1e-13);
        }
    }

    #[test]
    fn beta_regular_variation_at_endpoint() {
        let s = BoundedScale::beta(2.5, 1.5).unwrap();
        let t: f64 = 3.0;
        let dev: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&x| (s.survival(1.0 - t / x) / s.survival(1.0 - 1.0 / x) - t.powf(1.5)).abs())
            .collect();
        assert!(dev[1] < dev[0] && dev[2] < dev[1] && dev[2] < 1e-2);
    }

    #[test]
    fn sampler_matches_survival() {
        let s = BoundedScale::power_endpoint(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 200_000;
        let hits = (0..n).filter(|_| s.sample(&mut rng) > 0.99).count() as f64 / n as f64;
        let p = s.survival(0.99);
        assert!((hits - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BoundedScale::power_endpoint(-1.0).is_err());
        assert!(BoundedScale::beta(0.0, 1.0).is_err());
    }
}
