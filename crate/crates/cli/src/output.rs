//! Tables and their CSV / JSON-lines emission.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::spec::SpecFile;

/// Smallest probability also emitted on the linear scale.
pub const LINEAR_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::Num)
    }

    /// exp(log_p) when it is representable without loss of meaning.
    pub fn linear(log_p: f64) -> Cell {
        let p = log_p.exp();
        if p >= LINEAR_FLOOR {
            Cell::Num(p)
        } else {
            Cell::Empty
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Num(x) => non_finite(*x).to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(x) => json!(non_finite(*x)),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

fn non_finite(x: f64) -> &'static str {
    if x.is_nan() {
        "nan"
    } else if x > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

/// Everything needed to rerun a table: the command, its switches and the
/// fully resolved spec (flag overrides already folded in).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunParams {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
    pub spec: SpecFile,
}

impl RunParams {
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("params serialize")
    }

    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))
                .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// One header object (params, digest, columns) followed by one object per row.
    pub fn write_json<W: Write>(&self, params: &RunParams, mut out: W) -> Result<(), CliError> {
        let header = json!({
            "params": params,
            "params_digest": params.digest(),
            "columns": self.columns,
        });
        writeln!(out, "{header}")?;
        for row in &self.rows {
            let obj: Map<String, Value> = self
                .columns
                .iter()
                .zip(row)
                .map(|(c, v)| (c.to_string(), v.json()))
                .collect();
            writeln!(out, "{}", Value::Object(obj))?;
        }
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// Reads back the run parameters of an emitted table: the header line of a
/// JSON-lines file, or the `.params.json` sidecar of a CSV file.
pub fn read_params(path: &std::path::Path) -> Result<RunParams, CliError> {
    let text = std::fs::read_to_string(path)?;
    let first = text.lines().next().unwrap_or_default();
    let header: Value = match serde_json::from_str(first) {
        Ok(v) => v,
        Err(_) => {
            let side = sidecar_path(path);
            let s = std::fs::read_to_string(&side).map_err(|e| {
                CliError::Replay(format!(
                    "{} is not JSON lines and has no readable sidecar {}: {e}",
                    path.display(),
                    side.display()
                ))
            })?;
            serde_json::from_str(&s)
                .map_err(|e| CliError::Replay(format!("{}: {e}", side.display())))?
        }
    };
    let params: RunParams =
        serde_json::from_value(header.get("params").cloned().unwrap_or(Value::Null))
            .map_err(|e| CliError::Replay(format!("params block: {e}")))?;
    let digest = header
        .get("params_digest")
        .and_then(Value::as_str)
        .unwrap_or_default();
    if digest != params.digest() {
        return Err(CliError::Replay(format!(
            "params digest mismatch: file says {digest}, content hashes to {}",
            params.digest()
        )));
    }
    Ok(params)
}

pub fn sidecar_path(path: &std::path::Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".params.json");
    s.into()
}

pub fn sidecar(params: &RunParams) -> String {
    json!({"params": params, "params_digest": params.digest()}).to_string()
}
