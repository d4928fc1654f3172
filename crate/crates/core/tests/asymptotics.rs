use gaussian_tails::asymptotics::*;
use gaussian_tails::oracle::{convolve_pair, QuadratureConfig};
use gaussian_tails::special::log_normal_sf;
use gaussian_tails::{BoundedScale, GaussianLikeRisk, Portfolio, ScaledPortfolio, SlowlyVarying};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn constant_risk(alpha: f64) -> GaussianLikeRisk {
    GaussianLikeRisk::new(alpha, SlowlyVarying::constant(1.0), 1.0).unwrap()
}

fn normal() -> GaussianLikeRisk {
    GaussianLikeRisk::standard_normal()
}

#[test]
fn normal_pair_against_erfc() {
    for &u in &[8.0, 12.0] {
        let est = tail_pair(&normal(), &normal(), u).unwrap();
        let ratio = (est.log_prob - log_normal_sf(u / 2f64.sqrt())).exp();
        assert!((ratio - 1.0).abs() < 0.02, "u={u}: {ratio}");
    }
}

#[test]
fn pair_ratio_to_quadrature_is_monotone() {
    let cfg = QuadratureConfig::default();
    let pairs = [
        (normal(), normal()),
        (constant_risk(-2.0), constant_risk(0.0)),
        (
            GaussianLikeRisk::new(-1.0, SlowlyVarying::log_power(1.0, 0.5), 1.0).unwrap(),
            GaussianLikeRisk::new(0.5, SlowlyVarying::constant(0.4), 1.0).unwrap(),
        ),
    ];
    for (r1, r2) in &pairs {
        let dev: Vec<f64> = [6.0, 8.0, 10.0, 12.0, 16.0]
            .iter()
            .map(|&u| {
                let closed = tail_pair(r1, r2, u).unwrap();
                let quad = convolve_pair(r1, r2, u, &cfg).unwrap();
                (closed.ratio_to(&quad) - 1.0).abs()
            })
            .collect();
        for w in dev.windows(2) {
            assert!(w[1] < w[0], "{:?} / {:?}: {dev:?}", r1.alpha(), r2.alpha());
        }
    }
}

#[test]
fn unequal_scales_converge_after_crossing() {
    // with p = (0.8, 1.3) the ratio passes through 1 between u = 6 and 8,
    // so the deviation is only monotone from u = 8 on
    let r1 = GaussianLikeRisk::new(-1.0, SlowlyVarying::constant(1.0), 0.8).unwrap();
    let r2 = GaussianLikeRisk::new(0.5, SlowlyVarying::constant(0.4), 1.3).unwrap();
    let cfg = QuadratureConfig::default();
    let dev: Vec<f64> = [8.0, 12.0, 16.0, 32.0, 64.0]
        .iter()
        .map(|&u| {
            (tail_pair(&r1, &r2, u)
                .unwrap()
                .ratio_to(&convolve_pair(&r1, &r2, u, &cfg).unwrap())
                - 1.0)
                .abs()
        })
        .collect();
    assert!(dev.windows(2).all(|w| w[1] < w[0]), "{dev:?}");
    assert!(dev[4] < 0.005);
}

#[test]
fn iterated_is_permutation_invariant() {
    let risks = [
        constant_risk(-2.0),
        GaussianLikeRisk::new(1.0, SlowlyVarying::log_power(0.7, 1.2), 1.0).unwrap(),
        constant_risk(0.5),
        GaussianLikeRisk::new(-0.5, SlowlyVarying::constant(3.0), 1.0).unwrap(),
    ];
    let weights = [0.4, 2.2, 1.0, 0.9];
    let a = Portfolio::from_parts(&weights, &risks).unwrap();
    let order = [2, 0, 3, 1];
    let b = Portfolio::from_parts(&order.map(|i| weights[i]), &order.map(|i| risks[i].clone()))
        .unwrap();
    for &u in &[5.0, 20.0] {
        let x = log_tail_qn_iterated(&a, u).unwrap();
        let y = log_tail_qn_iterated(&b, u).unwrap();
        assert!((x - y).abs() <= 1e-10 * x.abs());
    }
}

#[test]
fn prodsum_uniform_geometry() {
    let s = BoundedScale::power_endpoint(1.0).unwrap();
    for &t in &[0.2, 0.05, 0.01] {
        let (sum, prod) = prodsum_tail(&[s, s], &[0.5, 0.5], 1.0 - t).unwrap();
        // P(S₁/2 + S₂/2 > 1 − t) = 2t² for uniform S_i
        assert!((sum.prob() - 2.0 * t * t).abs() < 1e-12 * t * t);
        assert_eq!(sum.log_prob, prod.log_prob);
        assert_eq!(sum.meta["event"], "sum");
    }
}

#[test]
fn scaled_tail_degenerate_and_single() {
    let zero = BoundedScale::power_endpoint(0.0).unwrap();
    let sp = ScaledPortfolio::from_parts(&[1.0, 1.0, 0.5], &[zero; 3]).unwrap();
    let u = 9.0;
    let lambda = 2.25f64.sqrt();
    assert!((scaled_tail(&sp, u).unwrap().log_prob - log_normal_sf(u / lambda)).abs() < 1e-13);

    let one =
        ScaledPortfolio::from_parts(&[1.0], &[BoundedScale::power_endpoint(1.0).unwrap()]).unwrap();
    let est = scaled_tail(&one, 6.0).unwrap();
    let expected = (2.0f64 / 36.0).ln() + log_normal_sf(6.0);
    assert!((est.log_prob - expected).abs() < 1e-13);
}

#[test]
fn quantile_equivalence_trend() {
    let risks = vec![constant_risk(-2.0), constant_risk(-1.0), constant_risk(0.0)];
    let pair = PortfolioPair::new(vec![1.0, 0.5, 2.0], vec![0.3, 1.0, 0.7], risks).unwrap();
    let dev: Vec<f64> = [1e4, 1e6, 1e8]
        .iter()
        .map(|&u| {
            let (t, ts, _) = marginal_levels(&pair, u).unwrap();
            (t * pair.lambda_star_norm() / (ts * pair.lambda_norm()) - 1.0).abs()
        })
        .collect();
    assert!(dev[1] < dev[0] && dev[2] < dev[1], "{dev:?}");
}

#[test]
fn chi_bar_examples() {
    let r = 0.3;
    let pair = PortfolioPair::new(
        vec![1.0, 0.0],
        vec![r, (1.0f64 - r * r).sqrt()],
        vec![normal(), normal()],
    )
    .unwrap();
    assert!((chi_bar_asymptotic(&pair).unwrap() - r).abs() < 1e-15);

    // scale invariance
    let scaled = PortfolioPair::new(
        vec![7.0, 0.0],
        vec![0.5 * r, 0.5 * (1.0f64 - r * r).sqrt()],
        vec![normal(), normal()],
    )
    .unwrap();
    assert!((chi_bar_asymptotic(&scaled).unwrap() - r).abs() < 1e-15);

    // orthogonal normals, u = 1e6, exact product joint
    let orth =
        PortfolioPair::new(vec![1.0, 0.0], vec![0.0, 1.0], vec![normal(), normal()]).unwrap();
    let base = chi_bar_u(&orth, 1e6, None).unwrap();
    let joint = log_normal_sf(base.t_u) + log_normal_sf(base.t_u_star);
    let exact = chi_bar_u(&orth, 1e6, Some(joint)).unwrap();
    assert!(exact.chi_bar.abs() < 0.05);
    assert!(chi_bar_u(&orth, 1e6, Some(0.0)).is_err());
}

#[test]
fn leading_order_chi_bar_approaches_rho() {
    // joint log at −z²/(1+ϱ), marginals at −t²/2 each
    let rho: f64 = 0.5;
    let pair = PortfolioPair::new(
        vec![1.0, 0.0],
        vec![rho, (1.0 - rho * rho).sqrt()],
        vec![normal(), normal()],
    )
    .unwrap();
    let mut prev = f64::INFINITY;
    for &u in &[1e4, 1e8, 1e16, 1e64] {
        let c = chi_bar_u(&pair, u, None).unwrap();
        let lead = chi_bar_from_logs(
            -c.t_u * c.t_u / 2.0,
            -c.t_u_star * c.t_u_star / 2.0,
            c.bracket.upper_log_bound,
        )
        .unwrap();
        let dev = (lead - rho).abs();
        assert!(dev < prev);
        prev = dev;
    }
    assert!(prev < 0.01);
}

#[test]
fn bracket_minimizer_by_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let l: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        let ls: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        let pair = PortfolioPair::new(l, ls, vec![normal(); 4]).unwrap();
        let best = (0..=5000)
            .map(|k| -2.0 + 5.0 * k as f64 / 5000.0)
            .min_by(|a, b| {
                combination_norm_sq(&pair, *a).total_cmp(&combination_norm_sq(&pair, *b))
            })
            .unwrap();
        assert!((best - 0.5).abs() <= 1e-3, "{best}");
        let min = combination_norm_sq(&pair, 0.5);
        assert!((min - (1.0 + rho(&pair)) / 2.0).abs() < 1e-14);
    }
}
