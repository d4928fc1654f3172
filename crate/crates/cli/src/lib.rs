//! `gtails`: closed-form tail approximations next to their numerical oracles.

pub mod commands;
pub mod error;
pub mod output;
pub mod spec;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::{OracleKind, Target};
pub use error::CliError;
pub use output::{Format, RunParams, Table};
pub use spec::SpecFile;

/// Environment variable holding the default worker count for oracle runs.
pub const THREADS_ENV: &str = "GTAILS_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "gtails",
    version,
    about = "Tail asymptotics for portfolios of Gaussian-like risks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form tail probabilities over the grid.
    Approx {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "auto")]
        target: Target,
    },
    /// Closed form against an oracle, with ratio columns.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "auto")]
        target: Target,
        #[arg(long, value_enum, default_value = "quadrature")]
        oracle: OracleKind,
    },
    /// Finite-level weak tail dependence of a portfolio pair.
    Chibar {
        #[command(flatten)]
        common: Common,
    },
    /// Sum and product of bounded scales against their common asymptotics.
    Prodsum {
        #[command(flatten)]
        common: Common,
    },
    /// Rerun the experiment recorded in an emitted table.
    Replay {
        table: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML spec file.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Monte Carlo chunk count (fixes the random streams).
    #[arg(long)]
    pub chunks: Option<u32>,
    /// Comma-separated levels; overrides the spec's u_grid. An empty string gives an empty grid.
    #[arg(long, value_parser = parse_grid)]
    pub u_grid: Option<Grid>,
    /// Comma-separated probabilities; overrides the spec's p_grid.
    #[arg(long, value_parser = parse_grid)]
    pub p_grid: Option<Grid>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(format!("`{t}` is not a finite number")),
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Grid)
}

/// What a finished run hands back to the caller.
#[derive(Debug)]
pub struct Report {
    pub table: Table,
    pub params: RunParams,
    pub summary: String,
    pub warnings: Vec<String>,
}

fn load_spec(common: &Common) -> Result<SpecFile, CliError> {
    let text = fs::read_to_string(&common.spec)
        .map_err(|e| CliError::Spec(format!("{}: {e}", common.spec.display())))?;
    let mut spec = SpecFile::parse(&text).map_err(|e| match e {
        CliError::Spec(m) => CliError::Spec(format!("{}: {m}", common.spec.display())),
        other => other,
    })?;
    if let Some(s) = common.seed {
        spec.seed = s;
    }
    if let Some(n) = common.samples {
        spec.oracle.samples = n;
    }
    if let Some(c) = common.chunks {
        spec.oracle.chunks = c;
    }
    if let Some(g) = &common.u_grid {
        spec.u_grid = Some(g.0.clone());
    }
    if let Some(g) = &common.p_grid {
        spec.p_grid = Some(g.0.clone());
    }
    spec.validate()?;
    Ok(spec)
}

/// Runs a fully resolved experiment.
pub fn execute(params: &RunParams) -> Result<Report, CliError> {
    let digest = params.digest();
    let spec = &params.spec;
    let target = |p: &RunParams| -> Result<Target, CliError> {
        match p.target.as_deref() {
            None => Ok(Target::Auto),
            Some(t) => <Target as clap::ValueEnum>::from_str(t, false)
                .map_err(|_| CliError::field("target", format!("unknown target `{t}`"))),
        }
    };
    let yes_no = |d: Option<bool>| match d {
        Some(true) => "yes",
        Some(false) => "no",
        None => "n/a",
    };
    let mut warnings = Vec::new();
    let (table, summary) = match params.command.as_str() {
        "approx" => {
            let t = commands::approx(spec, target(params)?, &digest)?;
            let s = format!("approx: {} rows; params {}", t.rows.len(), &digest[..12]);
            (t, s)
        }
        "compare" => {
            let oracle = params.oracle.as_deref().unwrap_or("quadrature");
            let oracle = <OracleKind as clap::ValueEnum>::from_str(oracle, false)
                .map_err(|_| CliError::field("oracle", format!("unknown oracle `{oracle}`")))?;
            let out = commands::compare(spec, target(params)?, oracle, &digest)?;
            let s = format!(
                "compare: {} rows against {}; |ratio-1| decreasing: {}; final ratio {}",
                out.table.rows.len(),
                oracle.name(),
                yes_no(out.decreasing),
                out.final_ratio.map_or("n/a".into(), |r| format!("{r:.6}")),
            );
            (out.table, s)
        }
        "chibar" => {
            let out = commands::chibar(spec, &digest)?;
            let s = format!(
                "chibar: {} rows; rho = {:.6}; |chi_bar_u - rho| decreasing: {}",
                out.table.rows.len(),
                out.rho,
                yes_no(out.decreasing)
            );
            (out.table, s)
        }
        "prodsum" => {
            let out = commands::prodsum(spec, &digest)?;
            if out.censored > 0 {
                warnings.push(format!(
                    "warning: {} rows censored (no Monte Carlo hits); raise --samples",
                    out.censored
                ));
            }
            let s = format!(
                "prodsum: {} rows, {} censored; |sum/product - 1| decreasing: {}",
                out.table.rows.len(),
                out.censored,
                yes_no(out.decreasing)
            );
            (out.table, s)
        }
        other => {
            return Err(CliError::field(
                "command",
                format!("unknown command `{other}`"),
            ))
        }
    };
    Ok(Report {
        table,
        params: params.clone(),
        summary,
        warnings,
    })
}

/// Writes a report to `out` (or stdout); CSV files get a params sidecar.
pub fn emit(report: &Report, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => report.table.write_csv(&mut buf)?,
        Format::Json => report.table.write_json(&report.params, &mut buf)?,
    }
    match out {
        Some(path) => {
            fs::write(path, &buf)?;
            if format == Format::Csv {
                fs::write(output::sidecar_path(path), output::sidecar(&report.params))?;
            }
        }
        None => std::io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

/// Parses nothing itself: runs an already parsed command line.
pub fn run(cli: Cli) -> Result<Report, CliError> {
    let (params, format, out) = match cli.command {
        Command::Approx { common, target } => (
            RunParams {
                command: "approx".into(),
                target: Some(target.name().into()),
                oracle: None,
                spec: load_spec(&common)?,
            },
            common.format,
            common.out,
        ),
        Command::Compare {
            common,
            target,
            oracle,
        } => (
            RunParams {
                command: "compare".into(),
                target: Some(target.name().into()),
                oracle: Some(oracle.name().into()),
                spec: load_spec(&common)?,
            },
            common.format,
            common.out,
        ),
        Command::Chibar { common } => (
            RunParams {
                command: "chibar".into(),
                target: None,
                oracle: None,
                spec: load_spec(&common)?,
            },
            common.format,
            common.out,
        ),
        Command::Prodsum { common } => (
            RunParams {
                command: "prodsum".into(),
                target: None,
                oracle: None,
                spec: load_spec(&common)?,
            },
            common.format,
            common.out,
        ),
        Command::Replay { table, out, format } => {
            let params = output::read_params(&table)?;
            params.spec.validate()?;
            (params, format, out)
        }
    };
    let report = execute(&params)?;
    emit(&report, format, out.as_deref())?;
    Ok(report)
}
