//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use gaussian_tails::asymptotics::{
    chi_bar_from_logs, chi_bar_u, joint_exponents, log_tail_qn, log_tail_qn_iterated,
    marginal_levels, prodsum_tail, quantile, scaled_tail, tail_qn, PortfolioPair,
};
use gaussian_tails::oracle::{
    convolve_portfolio, mc_joint, mc_prodsum, mc_scaled_tail, mc_tail, McConfig, QuadratureConfig,
};
use gaussian_tails::special::log_normal_sf;
use gaussian_tails::{BoundedScale, GaussianLikeRisk, Portfolio, ScaledPortfolio, SlowlyVarying};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: u32, title: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let in_time = took <= limit;
    let pass = out.pass && in_time;
    let time_note = if in_time {
        String::new()
    } else {
        format!("; over the {limit:?} budget")
    };
    println!(
        "{} criterion {id} ({title}): {} [{:.2} s{time_note}]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64()
    );
    pass
}

fn constant_risk(alpha: f64) -> GaussianLikeRisk {
    GaussianLikeRisk::new(alpha, SlowlyVarying::constant(1.0), 1.0).unwrap()
}

fn fixture() -> Portfolio {
    Portfolio::from_parts(
        &[1.0, 0.5, 2.0],
        &[constant_risk(-2.0), constant_risk(-1.0), constant_risk(0.0)],
    )
    .unwrap()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn random_portfolio(rng: &mut ChaCha8Rng) -> Portfolio {
    let n = rng.random_range(1..=6);
    let mut w = Vec::new();
    let mut r = Vec::new();
    for _ in 0..n {
        w.push(rng.random_range(0.1..5.0));
        let alpha = rng.random_range(-4.0..3.0);
        let c = rng.random_range(0.2..5.0);
        let sv = if rng.random_bool(0.5) {
            SlowlyVarying::constant(c)
        } else {
            SlowlyVarying::log_power(c, rng.random_range(0.0..2.0))
        };
        r.push(GaussianLikeRisk::new(alpha, sv, 1.0).unwrap());
    }
    Portfolio::from_parts(&w, &r).unwrap()
}

fn c1() -> Outcome {
    let normal = GaussianLikeRisk::standard_normal();
    let p = Portfolio::from_parts(&[1.0, 1.0], &[normal.clone(), normal]).unwrap();
    let ratios: Vec<f64> = [6.0, 8.0, 10.0, 12.0]
        .iter()
        .map(|&u| (tail_qn(&p, u).unwrap().log_prob - log_normal_sf(u / 2f64.sqrt())).exp())
        .collect();
    let dev: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    Outcome {
        pass: dev[1] <= 0.02 && dev[3] <= 0.007 && strictly_decreasing(&dev),
        detail: format!("ratios at u = 6, 8, 10, 12: {ratios:.6?}"),
    }
}

fn c2() -> Outcome {
    let p = fixture();
    let cfg = QuadratureConfig::default();
    let ratios: Vec<f64> = [8.0, 10.0, 12.0, 16.0]
        .iter()
        .map(|&u| {
            let q = convolve_portfolio(&p, u, &cfg).unwrap();
            tail_qn(&p, u).unwrap().ratio_to(&q)
        })
        .collect();
    let dev: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    let (at10, at16, trend) = (dev[1] <= 0.05, dev[3] <= 0.01, strictly_decreasing(&dev));
    Outcome {
        pass: at10 && at16 && trend,
        detail: format!(
            "closed/quadrature at u = 8, 10, 12, 16: {ratios:.4?}; within 5% at 10: {at10}; within 1% at 16: {at16}; decreasing: {trend}"
        ),
    }
}

fn c3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = random_portfolio(&mut rng);
        let u = rng.random_range(2.0..200.0);
        let a = log_tail_qn(&p, u).unwrap();
        let b = log_tail_qn_iterated(&p, u).unwrap();
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
    }
    Outcome {
        pass: worst <= 1e-10,
        detail: format!("worst relative log error over 1000 portfolios: {worst:.2e}"),
    }
}

fn c4() -> Outcome {
    let p = fixture();
    let u = quantile(&p, 1e-8).unwrap();
    let quad = convolve_portfolio(&p, u, &QuadratureConfig::default()).unwrap();
    let mut covered = 0;
    for seed in 0..100 {
        let mc = mc_tail(&p, u, &McConfig::new(1_000_000, seed)).unwrap();
        covered += usize::from(mc.covers(quad.log_prob, 3.0));
    }
    Outcome {
        pass: covered >= 95,
        detail: format!(
            "u = {u:.6}, quadrature ln P = {:.6}; covered in {covered}/100 seeds",
            quad.log_prob
        ),
    }
}

fn c5() -> Outcome {
    let half = BoundedScale::power_endpoint(0.5).unwrap();
    let scales = [half, half];
    let w = [0.5, 0.5];
    let cfg = |seed| McConfig::new(10_000_000, seed);
    let mut dev = Vec::new();
    let mut last = None;
    for (i, &u) in [0.9, 0.97, 0.99].iter().enumerate() {
        let (s, p) = mc_prodsum(&scales, &w, u, &cfg(50 + i as u64)).unwrap();
        dev.push((s.ratio_to(&p) - 1.0).abs());
        last = Some((s, p));
    }
    let (s, p) = last.unwrap();
    let (asym, _) = prodsum_tail(&scales, &w, 0.99).unwrap();
    let (rs, rp) = (s.ratio_to(&asym), p.ratio_to(&asym));

    let uni = BoundedScale::power_endpoint(1.0).unwrap();
    let exact = 2.0 * 0.01f64.powi(2);
    let (su, _) = mc_prodsum(&[uni, uni], &w, 0.99, &cfg(60)).unwrap();
    let (lo, hi) = (
        su.meta["cp_lower"].as_f64().unwrap(),
        su.meta["cp_upper"].as_f64().unwrap(),
    );

    let trend = strictly_decreasing(&dev);
    let gamma_ok = (rs - 1.0).abs() <= 0.1 && (rp - 1.0).abs() <= 0.1;
    let uniform_ok = lo <= exact && exact <= hi;
    Outcome {
        pass: trend && gamma_ok && uniform_ok,
        detail: format!(
            "|sum/product - 1| at u = 0.9, 0.97, 0.99: {dev:.4?}; sum/formula {rs:.4}, product/formula {rp:.4}; uniform 2e-4 in [{lo:.4e}, {hi:.4e}]: {uniform_ok}"
        ),
    }
}

fn c6() -> Outcome {
    let sp =
        ScaledPortfolio::from_parts(&[1.0], &[BoundedScale::power_endpoint(1.0).unwrap()]).unwrap();
    let cfg = McConfig::new(1_000_000, 6);
    let at = |u: f64| {
        let mc = mc_scaled_tail(&sp, u, &cfg).unwrap();
        let cf = scaled_tail(&sp, u).unwrap();
        (
            cf.ratio_to(&mc),
            mc.covers(cf.log_prob, 3.0),
            mc.ci_log_halfwidth.unwrap(),
        )
    };
    let (r6, cover6, h6) = at(6.0);
    let (r8, _, _) = at(8.0);
    let shrinks = (r8 - 1.0).abs() < (r6 - 1.0).abs();
    Outcome {
        pass: cover6 && shrinks,
        detail: format!(
            "closed/MC at u = 6: {r6:.4} (CI half-width {h6:.2e} on the log, covered: {cover6}); at u = 8: {r8:.4}; shrinking: {shrinks}"
        ),
    }
}

fn c7() -> Outcome {
    let normal = GaussianLikeRisk::standard_normal();
    let mut pass = true;
    let mut notes = Vec::new();
    for (k, &rho) in [0.0f64, 0.5, 0.96].iter().enumerate() {
        let pair = PortfolioPair::new(
            vec![1.0, 0.0],
            vec![rho, (1.0 - rho * rho).sqrt()],
            vec![normal.clone(); 2],
        )
        .unwrap();
        let mut chi = Vec::new();
        for (j, &u) in [1e6, 1e10].iter().enumerate() {
            let base = chi_bar_u(&pair, u, None).unwrap();
            let cfg = McConfig::new(1_000_000, 700 + 10 * k as u64 + j as u64);
            let joint = mc_joint(&pair, base.t_u, base.t_u_star, &cfg).unwrap();
            let h = joint.ci_log_halfwidth.unwrap();
            let (_, _, z) = marginal_levels(&pair, u).unwrap();
            let b = joint_exponents(&pair, z).unwrap();
            let inside = joint.log_prob - 3.0 * h <= b.upper_log_bound
                && joint.log_prob + 3.0 * h >= b.lower_log_bound;
            pass &= inside;
            let c = chi_bar_from_logs(base.log_q, base.log_w, joint.log_prob).unwrap();
            let ch = (base.log_q + base.log_w).abs() / joint.log_prob.powi(2) * h;
            chi.push((c, ch));
            if !inside {
                notes.push(format!(
                    "rho {rho}: ln joint {:.4} outside [{:.4}, {:.4}] at u = {u:e}",
                    joint.log_prob, b.lower_log_bound, b.upper_log_bound
                ));
            }
        }
        let (d6, d10) = ((chi[0].0 - rho).abs(), (chi[1].0 - rho).abs());
        // at rho = 0 both deviations are pure Monte Carlo noise, so the trend is read up to that noise
        let noise = 3.0 * (chi[0].1.powi(2) + chi[1].1.powi(2)).sqrt();
        let closer = d10 < d6 || (d10 - d6) <= noise;
        pass &= d10 <= 0.1 && closer;
        notes.push(format!(
            "rho {rho}: chi_bar {:.4} at 1e-6, {:.4} at 1e-10",
            chi[0].0, chi[1].0
        ));
    }
    Outcome {
        pass,
        detail: notes.join("; "),
    }
}

fn c8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = random_portfolio(&mut rng);
        let prob = 10f64.powf(-rng.random_range(3.0..250.0));
        let t = quantile(&p, prob).unwrap();
        worst = worst.max((log_tail_qn(&p, t).unwrap() - prob.ln()).abs() / prob.ln().abs());
    }
    let risks = vec![constant_risk(-2.0), constant_risk(-1.0), constant_risk(0.0)];
    let pair = PortfolioPair::new(vec![1.0, 0.5, 2.0], vec![0.3, 1.0, 0.7], risks).unwrap();
    let dev: Vec<f64> = [1e4, 1e6, 1e8]
        .iter()
        .map(|&u| {
            let (t, ts, _) = marginal_levels(&pair, u).unwrap();
            (t * pair.lambda_star_norm() / (ts * pair.lambda_norm()) - 1.0).abs()
        })
        .collect();
    Outcome {
        pass: worst <= 1e-9 && strictly_decreasing(&dev),
        detail: format!(
            "worst roundtrip error {worst:.2e}; |ratio - 1| at u = 1e4, 1e6, 1e8: {}",
            dev.iter()
                .map(|d| format!("{d:.3e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
}

fn specs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("specs")
}

fn c9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let s = |name: &str| specs().join(name).to_string_lossy().into_owned();
    let runs: Vec<(&str, Vec<String>)> = vec![
        (
            "c4",
            vec![
                "compare".into(),
                "--spec".into(),
                s("fixture3.toml"),
                "--oracle".into(),
                "mc".into(),
                "--p-grid".into(),
                "1e-8".into(),
                "--u-grid".into(),
                "".into(),
            ],
        ),
        (
            "c5",
            vec!["prodsum".into(), "--spec".into(), s("prodsum_half.toml")],
        ),
        (
            "c6",
            vec![
                "compare".into(),
                "--spec".into(),
                s("scaled_single.toml"),
                "--oracle".into(),
                "mc".into(),
                "--u-grid".into(),
                "6,8".into(),
            ],
        ),
        (
            "c7",
            vec!["chibar".into(), "--spec".into(), s("rho05.toml")],
        ),
    ];
    let mut bad = Vec::new();
    for (name, args) in &runs {
        for format in ["csv", "json"] {
            let mut files = Vec::new();
            for (rep, threads) in [(0, None), (1, Some("1"))] {
                let path = dir.path().join(format!("{name}-{rep}.{format}"));
                let mut cmd = Command::new(env!("CARGO_BIN_EXE_gtails"));
                cmd.args(args)
                    .args(["--format", format, "--out", path.to_str().unwrap()]);
                if let Some(t) = threads {
                    cmd.env(gaussian_tails_cli::THREADS_ENV, t);
                }
                let out = cmd.output().unwrap();
                if !out.status.success() {
                    bad.push(format!("{name} exited {:?}", out.status.code()));
                }
                files.push(std::fs::read(&path).unwrap_or_default());
            }
            if files[0].is_empty() || files[0] != files[1] {
                bad.push(format!("{name} {format} differs"));
            }
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            "criteria 4-7 runs repeated (second run single-threaded): all CSV and JSON files bit-identical".into()
        } else {
            bad.join(", ")
        },
    }
}

fn main() {
    let results = [
        check(
            1,
            "two standard normals vs exact N(0,2)",
            Duration::from_secs(1),
            c1,
        ),
        check(
            2,
            "n = 3 closed form vs quadrature",
            Duration::from_secs(60),
            c2,
        ),
        check(3, "iterated pair identity", Duration::from_secs(5), c3),
        check(
            4,
            "tilted MC concordance at 1e-8",
            Duration::from_secs(300),
            c4,
        ),
        check(
            5,
            "sum/product of bounded scales",
            Duration::from_secs(120),
            c5,
        ),
        check(
            6,
            "scaled Gaussian tail vs conditional MC",
            Duration::from_secs(60),
            c6,
        ),
        check(
            7,
            "finite-level weak tail dependence",
            Duration::from_secs(600),
            c7,
        ),
        check(
            8,
            "quantile roundtrip and norming ratio",
            Duration::from_secs(10),
            c8,
        ),
        check(
            9,
            "determinism of MC output files",
            Duration::from_secs(600),
            c9,
        ),
    ];
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, &p)| !p)
        .map(|(i, _)| i + 1)
        .collect();
    println!(
        "acceptance: {}/{} criteria pass",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
