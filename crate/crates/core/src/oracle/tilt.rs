//! Exponentially tilted marginals dF_s ∝ e^{s·x} dF and their samplers.

use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::distributions::GaussianLikeRisk;
use crate::error::{Result, TailError};
use crate::quad::integrate;
use crate::roots::newton_decreasing;

const MIN_ACCEPTANCE: f64 = 1e-3;
const ENVELOPE_MARGIN: f64 = 1.02;
const ENVELOPE_GRID: usize = 4000;
const MAX_PROPOSALS: usize = 1_000_000;
/// Tilted mass beyond the mode + this many scales is ignored.
const SPAN: f64 = 40.0;

/// ln M(s), mean and variance of the tilted law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TiltMoments {
    pub log_mgf: f64,
    pub mean: f64,
    pub var: f64,
}

fn log_tilted(risk: &GaussianLikeRisk, s: f64, x: f64) -> f64 {
    s * x + risk.log_density(x)
}

fn range(risk: &GaussianLikeRisk, s: f64) -> (f64, f64) {
    let p = risk.p();
    let lo = risk.lower_endpoint();
    let centre = (s * p * p).max(risk.x_onset());
    let hi = centre + SPAN * p;
    if lo.is_finite() {
        (lo, hi)
    } else {
        ((s * p * p).min(0.0) - SPAN * p, hi)
    }
}

pub(crate) fn moments(risk: &GaussianLikeRisk, s: f64) -> Result<TiltMoments> {
    if risk.is_standard_normal() {
        return Ok(TiltMoments {
            log_mgf: 0.5 * s * s,
            mean: s,
            var: 1.0,
        });
    }
    let (lo, hi) = range(risk, s);
    let mut mode = lo;
    let mut peak = f64::NEG_INFINITY;
    for k in 0..=400 {
        let x = lo + (hi - lo) * k as f64 / 400.0;
        let v = log_tilted(risk, s, x);
        if v > peak {
            peak = v;
            mode = x;
        }
    }
    let mut breaks = risk.breakpoints();
    breaks.push(mode);
    breaks.extend((1..16).map(|k| lo + (hi - lo) * k as f64 / 16.0));
    let w = |x: f64| (log_tilted(risk, s, x) - peak).exp();
    let i0 = integrate(w, lo, hi, &breaks, 1e-12, 0.0)?.value;
    let scale = risk.p();
    let i1 = integrate(
        |x| (x - mode) * w(x),
        lo,
        hi,
        &breaks,
        1e-12,
        1e-14 * i0 * scale,
    )?
    .value;
    let i2 = integrate(|x| (x - mode).powi(2) * w(x), lo, hi, &breaks, 1e-12, 0.0)?.value;
    let shift = i1 / i0;
    Ok(TiltMoments {
        log_mgf: peak + i0.ln(),
        mean: mode + shift,
        var: (i2 / i0 - shift * shift).max(0.0),
    })
}

/// The tilt s with tilted mean `target`.
pub(crate) fn tilt_for_mean(risk: &GaussianLikeRisk, target: f64) -> Result<f64> {
    if risk.is_standard_normal() {
        return Ok(target);
    }
    let mean = |s: f64| moments(risk, s).map(|m| m.mean);
    let f = |s: f64| -> Result<f64> { Ok(target - mean(s)?) };
    let p2 = risk.p() * risk.p();
    let (mut lo, mut hi) = (target / p2 - 1.0, target / p2 + 1.0);
    let mut step = 1.0;
    while f(lo)? < 0.0 {
        step *= 2.0;
        lo -= step;
        if step > 1e8 {
            return Err(TailError::NonConvergence {
                what: "tilt bracket",
                iterations: 27,
            });
        }
    }
    step = 1.0;
    while f(hi)? > 0.0 {
        step *= 2.0;
        hi += step;
        if step > 1e8 {
            return Err(TailError::NonConvergence {
                what: "tilt bracket",
                iterations: 27,
            });
        }
    }
    newton_decreasing(
        |s| match moments(risk, s) {
            Ok(m) => (target - m.mean, -m.var),
            Err(_) => (f64::NAN, f64::NAN),
        },
        lo,
        hi,
        1e-12,
        "mean-matching tilt",
    )
}

/// A sampler for one tilted marginal.
#[derive(Debug, Clone)]
pub(crate) struct TiltedLaw {
    pub s: f64,
    pub moments: TiltMoments,
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Normal,
    Rejection {
        risk: GaussianLikeRisk,
        centre: f64,
        sigma: f64,
        /// ln sup(g/q) including the safety margin.
        log_bound: f64,
    },
}

impl TiltedLaw {
    pub fn new(risk: &GaussianLikeRisk, s: f64) -> Result<Self> {
        let m = moments(risk, s)?;
        if risk.is_standard_normal() {
            return Ok(TiltedLaw {
                s,
                moments: m,
                kind: SamplerKind::Normal,
            });
        }
        let centre = m.mean;
        let sigma = (1.25 * m.var.sqrt()).max(1.1 * risk.p());
        let h = |x: f64| log_ratio(risk, s, m.log_mgf, centre, sigma, x);
        let lo = risk.lower_endpoint();
        let hi = centre + SPAN * sigma;
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        let step = (hi - lo) / ENVELOPE_GRID as f64;
        for k in 0..=ENVELOPE_GRID {
            let v = h(lo + step * k as f64);
            if v > best {
                best = v;
                arg = k;
            }
        }
        let a = lo + step * arg.saturating_sub(1) as f64;
        let b = lo + step * (arg + 1).min(ENVELOPE_GRID) as f64;
        best = best.max(golden_max(&h, a, b));
        // the body is convex in x between its breakpoints, so check its ends
        for bp in risk.breakpoints() {
            best = best.max(h(bp)).max(h(bp - 1e-12 * bp.abs().max(1.0)));
        }
        let log_bound = best + ENVELOPE_MARGIN.ln();
        let acceptance = (-log_bound).exp();
        if acceptance < MIN_ACCEPTANCE {
            return Err(TailError::Oracle(format!(
                "rejection sampler acceptance {acceptance:.2e} below {MIN_ACCEPTANCE:e} at tilt {s}"
            )));
        }
        Ok(TiltedLaw {
            s,
            moments: m,
            kind: SamplerKind::Rejection {
                risk: risk.clone(),
                centre,
                sigma,
                log_bound,
            },
        })
    }

    /// Expected acceptance rate of the rejection step (1 for exact sampling).
    pub fn acceptance(&self) -> f64 {
        match &self.kind {
            SamplerKind::Normal => 1.0,
            SamplerKind::Rejection { log_bound, .. } => (-log_bound).exp(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match &self.kind {
            SamplerKind::Normal => {
                let z: f64 = rng.sample(StandardNormal);
                Ok(self.s + z)
            }
            SamplerKind::Rejection {
                risk,
                centre,
                sigma,
                log_bound,
            } => {
                let low = risk.lower_endpoint();
                for _ in 0..MAX_PROPOSALS {
                    let z: f64 = rng.sample(StandardNormal);
                    let x = centre + sigma * z;
                    if x < low {
                        continue;
                    }
                    let u: f64 = rng.sample(Open01);
                    let h = log_ratio(risk, self.s, self.moments.log_mgf, *centre, *sigma, x);
                    if u.ln() <= h - log_bound {
                        return Ok(x);
                    }
                }
                Err(TailError::Oracle(format!(
                    "no acceptance in {MAX_PROPOSALS} proposals at tilt {}",
                    self.s
                )))
            }
        }
    }

    /// ln dF/dF_s at x.
    pub fn log_likelihood_ratio(&self, x: f64) -> f64 {
        self.moments.log_mgf - self.s * x
    }
}

/// ln(g/q) for the normalized tilted density g and the N(centre, σ²) proposal.
fn log_ratio(
    risk: &GaussianLikeRisk,
    s: f64,
    log_mgf: f64,
    centre: f64,
    sigma: f64,
    x: f64,
) -> f64 {
    let z = (x - centre) / sigma;
    log_tilted(risk, s, x) - log_mgf + 0.5 * z * z + sigma.ln() + crate::special::LN_SQRT_2PI
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-12 * (a.abs() + b.abs()).max(1.0) {
            break;
        }
    }
    fc.max(fd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::SlowlyVarying;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fixture_risk(alpha: f64) -> GaussianLikeRisk {
        GaussianLikeRisk::new(alpha, SlowlyVarying::constant(1.0), 1.0).unwrap()
    }

    #[test]
    fn untilted_moments_are_the_law() {
        let r = fixture_risk(0.0);
        let m = moments(&r, 0.0).unwrap();
        assert!(m.log_mgf.abs() < 1e-10, "{}", m.log_mgf);
        // the mean from the density matches ∫ S(x) dx − x_onset
        let from_sf = integrate(|x| r.survival(x), 0.0, 40.0, &[r.x_onset()], 1e-12, 0.0)
            .unwrap()
            .value
            - integrate(
                |x| 1.0 - r.survival(x),
                r.lower_endpoint(),
                0.0,
                &[],
                1e-12,
                0.0,
            )
            .unwrap()
            .value;
        assert!((m.mean - from_sf).abs() < 1e-9);
    }

    #[test]
    fn mgf_derivative_is_the_mean() {
        let r = fixture_risk(-2.0);
        let h = 1e-4;
        for &s in &[0.5, 4.0, 9.0] {
            let fd = (moments(&r, s + h).unwrap().log_mgf - moments(&r, s - h).unwrap().log_mgf)
                / (2.0 * h);
            assert!((fd - moments(&r, s).unwrap().mean).abs() < 1e-6, "s={s}");
        }
    }

    #[test]
    fn tilt_inverts_the_mean() {
        let r = fixture_risk(-1.0);
        for &target in &[0.3, 5.0, 12.0] {
            let s = tilt_for_mean(&r, target).unwrap();
            assert!((moments(&r, s).unwrap().mean - target).abs() < 1e-9);
        }
        assert_eq!(
            tilt_for_mean(&GaussianLikeRisk::standard_normal(), 3.5).unwrap(),
            3.5
        );
    }

    #[test]
    fn sampler_matches_tilted_moments() {
        let r = fixture_risk(0.0);
        let law = TiltedLaw::new(&r, 6.0).unwrap();
        assert!(law.acceptance() > 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| law.sample(&mut rng).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let se = (law.moments.var / n as f64).sqrt();
        assert!((mean - law.moments.mean).abs() < 4.0 * se);
        assert!((var / law.moments.var - 1.0).abs() < 0.02);
    }

    #[test]
    fn sampler_handles_the_body() {
        // no tilt: the sampler must reproduce the body mass below the onset
        let r = fixture_risk(-2.0);
        let law = TiltedLaw::new(&r, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let below = (0..n)
            .filter(|_| law.sample(&mut rng).unwrap() < r.x_onset())
            .count() as f64
            / n as f64;
        let expected = 1.0 - r.survival(r.x_onset());
        assert!((below - expected).abs() < 4.0 * (expected * (1.0 - expected) / n as f64).sqrt());
    }
}
