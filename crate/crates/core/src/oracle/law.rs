//! One-dimensional laws the convolution works with: weighted risks with an
//! analytic density, and tabulated survival functions of partial sums.

use crate::distributions::GaussianLikeRisk;
use crate::special::log1m_exp;

/// Effective lower end for the normal body, in units of the scale.
const NORMAL_FLOOR: f64 = 40.0;

pub(crate) trait SurvivalLaw {
    fn log_sf(&self, x: f64) -> f64;
    /// Gaussian scale p of the tail.
    fn scale(&self) -> f64;
    /// Points where the survival function is not smooth.
    fn kinks(&self) -> Vec<f64>;
}

/// λX for a risk X.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Weighted<'a> {
    pub weight: f64,
    pub risk: &'a GaussianLikeRisk,
}

impl<'a> Weighted<'a> {
    pub fn new(weight: f64, risk: &'a GaussianLikeRisk) -> Self {
        Weighted { weight, risk }
    }

    pub fn log_pdf(&self, y: f64) -> f64 {
        self.risk.log_density(y / self.weight) - self.weight.ln()
    }

    pub fn log_cdf(&self, y: f64) -> f64 {
        log1m_exp(self.log_sf(y))
    }

    /// Lower end of the support, −∞ for the normal body.
    pub fn support_low(&self) -> f64 {
        self.weight * self.risk.lower_endpoint()
    }

    /// Lower end below which the mass is negligible (finite).
    pub fn effective_low(&self) -> f64 {
        let low = self.support_low();
        if low.is_finite() {
            low
        } else {
            -NORMAL_FLOOR * self.weight * self.risk.p()
        }
    }
}

impl SurvivalLaw for Weighted<'_> {
    fn log_sf(&self, y: f64) -> f64 {
        self.risk.log_survival(y / self.weight)
    }

    fn scale(&self) -> f64 {
        self.weight * self.risk.p()
    }

    fn kinks(&self) -> Vec<f64> {
        self.risk
            .breakpoints()
            .iter()
            .map(|b| b * self.weight)
            .collect()
    }
}

/// Log-survival tabulated on a grid, interpolated through the residual
/// r(z) = ln S(z) + z²/(2σ²) with a monotone cubic, and clamped so the result
/// is non-increasing.
#[derive(Debug, Clone)]
pub(crate) struct Tabulated {
    z: Vec<f64>,
    log_s: Vec<f64>,
    residual: Pchip,
    inv_two_sigma_sq: f64,
    scale: f64,
}

impl Tabulated {
    pub fn new(z: Vec<f64>, mut log_s: Vec<f64>, scale: f64) -> Self {
        for i in 1..log_s.len() {
            log_s[i] = log_s[i].min(log_s[i - 1]);
        }
        let inv = 1.0 / (2.0 * scale * scale);
        let r: Vec<f64> = z.iter().zip(&log_s).map(|(z, l)| l + z * z * inv).collect();
        Tabulated {
            residual: Pchip::new(z.clone(), r),
            z,
            log_s,
            inv_two_sigma_sq: inv,
            scale,
        }
    }

    /// The same table on every other node (the last node is always kept).
    pub fn thinned(&self) -> Self {
        let n = self.z.len();
        let keep: Vec<usize> = (0..n).filter(|i| i % 2 == 0 || *i == n - 1).collect();
        Tabulated::new(
            keep.iter().map(|&i| self.z[i]).collect(),
            keep.iter().map(|&i| self.log_s[i]).collect(),
            self.scale,
        )
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }
}

impl SurvivalLaw for Tabulated {
    fn log_sf(&self, x: f64) -> f64 {
        let n = self.z.len();
        if x <= self.z[0] {
            return self.log_s[0];
        }
        if x >= self.z[n - 1] {
            return self.residual.eval(x) - x * x * self.inv_two_sigma_sq;
        }
        let i = self.z.partition_point(|&z| z <= x) - 1;
        let v = self.residual.eval(x) - x * x * self.inv_two_sigma_sq;
        v.min(self.log_s[i]).max(self.log_s[i + 1])
    }

    fn scale(&self) -> f64 {
        self.scale
    }

    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Fritsch–Carlson monotone piecewise cubic Hermite interpolant, linearly
/// extended past the end nodes.
#[derive(Debug, Clone)]
pub(crate) struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n, "pchip needs two or more nodes");
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        d[0] = end_slope(
            h[0],
            h.get(1).copied().unwrap_or(h[0]),
            delta[0],
            delta.get(1).copied().unwrap_or(delta[0]),
        );
        d[n - 1] = end_slope(
            h[n - 2],
            if n > 2 { h[n - 3] } else { h[n - 2] },
            delta[n - 2],
            if n > 2 { delta[n - 3] } else { delta[n - 2] },
        );
        Pchip { x, y, d }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0] + self.d[0] * (t - self.x[0]);
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1] + self.d[n - 1] * (t - self.x[n - 1]);
        }
        let i = self.x.partition_point(|&x| x <= t) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

/// Three-point end derivative, limited to keep the end interval monotone.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}
