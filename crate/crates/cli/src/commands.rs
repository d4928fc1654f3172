//! Experiment drivers: each pairs a closed-form operation with its oracle.

use gaussian_tails::asymptotics::{
    chi_bar_from_logs, chi_bar_u, prodsum_tail, quantile, rho, scaled_tail, tail_pair, tail_qn,
    tail_qn_iterated,
};
use gaussian_tails::oracle::{convolve_portfolio, mc_joint, mc_prodsum, mc_scaled_tail, mc_tail};
use gaussian_tails::special::log_normal_sf;
use gaussian_tails::{TailError, TailEstimate};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Context};
use crate::output::{Cell, Table};
use crate::spec::SpecFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Auto,
    Qn,
    Iterated,
    Pair,
    Scaled,
    Prodsum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Quadrature,
    Mc,
    /// Ψ(u/‖λ‖); only for all-standard-normal portfolios.
    Exact,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Auto => "auto",
            Target::Qn => "qn",
            Target::Iterated => "iterated",
            Target::Pair => "pair",
            Target::Scaled => "scaled",
            Target::Prodsum => "prodsum",
        }
    }

    /// Scales without risks → scaled; unit-scale risks → qn; two risks → pair.
    pub fn resolve(self, spec: &SpecFile) -> Result<Target, CliError> {
        if self != Target::Auto {
            return Ok(self);
        }
        if spec.risks.is_empty() {
            return Ok(Target::Scaled);
        }
        let risks = spec.risks()?;
        if risks.iter().all(|r| r.p() == 1.0) {
            Ok(Target::Qn)
        } else if risks.len() == 2 {
            Ok(Target::Pair)
        } else {
            Err(CliError::field(
                "risks",
                "no closed form for more than two risks with p != 1",
            ))
        }
    }
}

impl OracleKind {
    pub fn name(self) -> &'static str {
        match self {
            OracleKind::Quadrature => "quadrature",
            OracleKind::Mc => "mc",
            OracleKind::Exact => "exact",
        }
    }
}

/// A level at which a row is evaluated, with the probability that produced it.
#[derive(Debug, Clone, Copy)]
struct Level {
    u: f64,
    p_target: Option<f64>,
}

fn levels(
    spec: &SpecFile,
    from_p: impl Fn(f64) -> Result<f64, CliError>,
) -> Result<Vec<Level>, CliError> {
    let mut out: Vec<Level> = spec
        .u_grid
        .iter()
        .flatten()
        .map(|&u| Level { u, p_target: None })
        .collect();
    for &p in spec.p_grid.iter().flatten() {
        out.push(Level {
            u: from_p(p)?,
            p_target: Some(p),
        });
    }
    Ok(out)
}

fn portfolio_levels(spec: &SpecFile, target: Target) -> Result<Vec<Level>, CliError> {
    levels(spec, |p| match target {
        Target::Qn | Target::Iterated => {
            quantile(&spec.portfolio()?, p).context(|| format!("quantile at p = {p}"))
        }
        _ => Err(CliError::field(
            "p_grid",
            format!(
                "probability grids are not supported for target `{}`",
                target.name()
            ),
        )),
    })
}

fn closed_form(spec: &SpecFile, target: Target, u: f64) -> Result<TailEstimate, CliError> {
    let at = || format!("closed form at u = {u}");
    match target {
        Target::Qn => tail_qn(&spec.portfolio()?, u).context(at),
        Target::Iterated => tail_qn_iterated(&spec.portfolio()?, u).context(at),
        Target::Pair => {
            let r = spec.risks()?;
            if r.len() != 2 {
                return Err(CliError::field(
                    "risks",
                    format!("target `pair` needs two risks, got {}", r.len()),
                ));
            }
            if spec.lambda != [1.0, 1.0] {
                return Err(CliError::field(
                    "lambda",
                    "target `pair` takes unit weights; fold the weights into p",
                ));
            }
            tail_pair(&r[0], &r[1], u).context(at)
        }
        Target::Scaled => scaled_tail(&spec.scaled_portfolio()?, u).context(at),
        Target::Prodsum => prodsum_tail(&spec.scale_list()?, &spec.lambda, u)
            .map(|(s, _)| s)
            .context(at),
        Target::Auto => unreachable!("resolved before use"),
    }
}

pub fn approx(spec: &SpecFile, target: Target, digest: &str) -> Result<Table, CliError> {
    let target = target.resolve(spec)?;
    let mut t = Table::new(vec![
        "u",
        "p_target",
        "target",
        "method",
        "log_prob",
        "prob",
        "params_digest",
    ]);
    for lv in portfolio_levels(spec, target)? {
        let est = closed_form(spec, target, lv.u)?;
        t.push(vec![
            Cell::Num(lv.u),
            Cell::opt(lv.p_target),
            Cell::Text(target.name().into()),
            Cell::Text(est.method.as_str().into()),
            Cell::Num(est.log_prob),
            Cell::linear(est.log_prob),
            Cell::Text(digest.into()),
        ]);
    }
    Ok(t)
}

fn oracle_value(
    spec: &SpecFile,
    target: Target,
    oracle: OracleKind,
    u: f64,
) -> Result<TailEstimate, CliError> {
    let at = || format!("{} oracle at u = {u}", oracle.name());
    match (oracle, target) {
        (OracleKind::Quadrature, Target::Qn | Target::Iterated | Target::Pair) => {
            convolve_portfolio(&spec.portfolio()?, u, &spec.oracle.quadrature()).context(at)
        }
        (OracleKind::Mc, Target::Qn | Target::Iterated | Target::Pair) => {
            mc_tail(&spec.portfolio()?, u, &spec.oracle.mc(spec.seed)).context(at)
        }
        (OracleKind::Mc, Target::Scaled) => {
            mc_scaled_tail(&spec.scaled_portfolio()?, u, &spec.oracle.mc(spec.seed)).context(at)
        }
        (OracleKind::Exact, Target::Qn | Target::Iterated | Target::Pair) => {
            let p = spec.portfolio()?;
            if !p.entries().iter().all(|e| e.risk.is_standard_normal()) {
                return Err(CliError::field(
                    "risks",
                    "the exact oracle needs law = \"standard_normal\" for every risk",
                ));
            }
            Ok(TailEstimate::quadrature(log_normal_sf(u / p.lambda_norm())).with_meta("u", u))
        }
        _ => Err(CliError::field(
            "oracle",
            format!(
                "oracle `{}` is not available for target `{}`",
                oracle.name(),
                target.name()
            ),
        )),
    }
}

/// Summary of a ratio column: whether |ratio − 1| strictly decreases with u.
pub fn trend(mut points: Vec<(f64, f64)>) -> Option<bool> {
    points.retain(|p| p.1.is_finite());
    if points.len() < 2 {
        return None;
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    Some(points.windows(2).all(|w| w[1].1 < w[0].1))
}

pub struct CompareOutput {
    pub table: Table,
    pub decreasing: Option<bool>,
    pub final_ratio: Option<f64>,
}

pub fn compare(
    spec: &SpecFile,
    target: Target,
    oracle: OracleKind,
    digest: &str,
) -> Result<CompareOutput, CliError> {
    let target = target.resolve(spec)?;
    if target == Target::Prodsum {
        return Err(CliError::field(
            "target",
            "use the `prodsum` command for product/sum comparisons",
        ));
    }
    let mut t = Table::new(vec![
        "u",
        "p_target",
        "log_closed_form",
        "log_oracle",
        "oracle",
        "ratio",
        "ci_log_halfwidth",
        "ratio_lower",
        "ratio_upper",
        "prob_closed_form",
        "prob_oracle",
        "params_digest",
    ]);
    let mut dev = Vec::new();
    let mut final_ratio = None;
    for lv in portfolio_levels(spec, target)? {
        let cf = closed_form(spec, target, lv.u)?;
        let or = oracle_value(spec, target, oracle, lv.u)?;
        let ratio = cf.ratio_to(&or);
        let h = or.ci_log_halfwidth;
        dev.push((lv.u, (ratio - 1.0).abs()));
        final_ratio = Some(ratio);
        t.push(vec![
            Cell::Num(lv.u),
            Cell::opt(lv.p_target),
            Cell::Num(cf.log_prob),
            Cell::Num(or.log_prob),
            Cell::Text(oracle.name().into()),
            Cell::Num(ratio),
            Cell::opt(h),
            Cell::opt(h.map(|h| (cf.log_prob - or.log_prob - h).exp())),
            Cell::opt(h.map(|h| (cf.log_prob - or.log_prob + h).exp())),
            Cell::linear(cf.log_prob),
            Cell::linear(or.log_prob),
            Cell::Text(digest.into()),
        ]);
    }
    Ok(CompareOutput {
        table: t,
        decreasing: trend(dev),
        final_ratio,
    })
}

pub struct ChiBarOutput {
    pub table: Table,
    pub rho: f64,
    pub decreasing: Option<bool>,
}

pub fn chibar(spec: &SpecFile, digest: &str) -> Result<ChiBarOutput, CliError> {
    let pair = spec.pair()?;
    let r = rho(&pair);
    if r >= 1.0 - 1e-12 {
        return Err(CliError::Core {
            context: "lambda_star: both portfolios are supposed to be different".into(),
            source: TailError::IdenticalPortfolios { rho: r },
        });
    }
    let mut t = Table::new(vec![
        "u",
        "p_marginal",
        "t_u",
        "t_u_star",
        "rho",
        "log_q",
        "log_w",
        "log_joint_mc",
        "ci_log_halfwidth",
        "chi_bar_u_mc",
        "chi_bar_ci_halfwidth",
        "chi_bar_lower",
        "chi_bar_upper",
        "params_digest",
    ]);
    let mut dev = Vec::new();
    for lv in levels(spec, |p| Ok(1.0 / p))? {
        let at = || format!("chi-bar at u = {}", lv.u);
        let base = chi_bar_u(&pair, lv.u, None).context(at)?;
        let joint =
            mc_joint(&pair, base.t_u, base.t_u_star, &spec.oracle.mc(spec.seed)).context(at)?;
        let chi = chi_bar_from_logs(base.log_q, base.log_w, joint.log_prob).context(at)?;
        let h = joint.ci_log_halfwidth.unwrap_or(0.0);
        let chi_h = (base.log_q + base.log_w).abs() / joint.log_prob.powi(2) * h;
        dev.push((lv.u, (chi - r).abs()));
        t.push(vec![
            Cell::Num(lv.u),
            Cell::Num(lv.p_target.unwrap_or(1.0 / lv.u)),
            Cell::Num(base.t_u),
            Cell::Num(base.t_u_star),
            Cell::Num(r),
            Cell::Num(base.log_q),
            Cell::Num(base.log_w),
            Cell::Num(joint.log_prob),
            Cell::Num(h),
            Cell::Num(chi),
            Cell::Num(chi_h),
            Cell::Num(base.chi_bar_lower),
            Cell::Num(base.chi_bar_upper),
            Cell::Text(digest.into()),
        ]);
    }
    Ok(ChiBarOutput {
        table: t,
        rho: r,
        decreasing: trend(dev),
    })
}

pub struct ProdsumOutput {
    pub table: Table,
    pub censored: usize,
    pub decreasing: Option<bool>,
}

pub fn prodsum(spec: &SpecFile, digest: &str) -> Result<ProdsumOutput, CliError> {
    let scales = spec.scale_list()?;
    let mut t = Table::new(vec![
        "u",
        "log_sum_mc",
        "sum_ci_log_halfwidth",
        "sum_cp_lower",
        "sum_cp_upper",
        "log_product_mc",
        "product_ci_log_halfwidth",
        "product_cp_lower",
        "product_cp_upper",
        "log_asymptotic",
        "ratio_sum_product",
        "ratio_sum_asymptotic",
        "ratio_product_asymptotic",
        "censored",
        "params_digest",
    ]);
    let mut censored = 0;
    let mut dev = Vec::new();
    if spec.p_grid.as_ref().is_some_and(|p| !p.is_empty()) {
        return Err(CliError::field(
            "p_grid",
            "the prodsum command takes a u_grid in (0, 1)",
        ));
    }
    for &u in spec.u_grid.iter().flatten() {
        let at = || format!("prodsum at u = {u}");
        let (asym, _) = prodsum_tail(&scales, &spec.lambda, u).context(at)?;
        let cp = |e: &TailEstimate, k: &str| Cell::opt(e.meta.get(k).and_then(|v| v.as_f64()));
        match mc_prodsum(&scales, &spec.lambda, u, &spec.oracle.mc(spec.seed)) {
            Ok((s, p)) => {
                dev.push((u, (s.ratio_to(&p) - 1.0).abs()));
                t.push(vec![
                    Cell::Num(u),
                    Cell::Num(s.log_prob),
                    Cell::opt(s.ci_log_halfwidth),
                    cp(&s, "cp_lower"),
                    cp(&s, "cp_upper"),
                    Cell::Num(p.log_prob),
                    Cell::opt(p.ci_log_halfwidth),
                    cp(&p, "cp_lower"),
                    cp(&p, "cp_upper"),
                    Cell::Num(asym.log_prob),
                    Cell::Num(s.ratio_to(&p)),
                    Cell::Num(s.ratio_to(&asym)),
                    Cell::Num(p.ratio_to(&asym)),
                    Cell::Bool(false),
                    Cell::Text(digest.into()),
                ]);
            }
            Err(TailError::NoHits { .. }) => {
                censored += 1;
                let mut row = vec![Cell::Num(u)];
                row.extend(std::iter::repeat_n(Cell::Empty, 8));
                row.push(Cell::Num(asym.log_prob));
                row.extend(std::iter::repeat_n(Cell::Empty, 3));
                row.push(Cell::Bool(true));
                row.push(Cell::Text(digest.into()));
                t.push(row);
            }
            Err(e) => return Err(e).context(at),
        }
    }
    Ok(ProdsumOutput {
        table: t,
        censored,
        decreasing: trend(dev),
    })
}
