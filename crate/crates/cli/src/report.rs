//! CSV reports with fixed per-schema column orders, their JSON sidecars, and
//! a reader for both.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Column order of every report schema.
pub const SCHEMAS: &[(&str, &[&str])] = &[
    ("shell", &["x", "y", "z"]),
    ("weyl", &["n", "m", "j", "value"]),
    ("variance", &["n", "r", "rho", "method", "M", "value", "error_estimate"]),
    (
        "average",
        &["x", "h", "delta", "c", "rho", "sigma", "r", "method", "M", "value", "ratio", "terms"],
    ),
    ("conjecture", &["n", "count", "r", "sigma", "method", "ratio"]),
    ("theta-coeff", &["m", "j", "n", "a", "b"]),
    ("theta-l2", &["m", "j", "norm_sq"]),
    ("rankin-selberg", &["m", "j", "s", "N", "lhs", "rhs", "relative_difference"]),
    ("kloosterman", &["a", "b", "c", "two_k", "re", "im", "abs", "margin"]),
    ("petersson", &["m", "j", "n", "c_max", "lhs", "rhs", "tail", "margin"]),
    ("lseries", &["m", "j", "s", "N", "value", "tail_bound", "tail_estimate", "lambda"]),
    ("fx", &["x", "m", "complete_sum", "value"]),
    ("residue", &["m", "j", "x", "raw", "normalized"]),
];

pub fn schema_columns(id: &str) -> Option<&'static [&'static str]> {
    SCHEMAS.iter().find(|(name, _)| *name == id).map(|(_, cols)| *cols)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub schema: &'static str,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(schema: &'static str) -> Self {
        Self { schema, rows: Vec::new() }
    }

    pub fn columns(&self) -> &'static [&'static str] {
        schema_columns(self.schema).expect("report schema is registered")
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns().len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(self.columns()).map_err(io_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io_err)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Metadata written next to every CSV report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema: String,
    pub columns: Vec<String>,
    pub rows: usize,
    pub command: String,
    pub command_line: Vec<String>,
    pub parameters: std::collections::BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub workers: usize,
    pub version: String,
    pub wall_time_seconds: f64,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn emit_report(report: &Report, sidecar: &Sidecar, path: &Path) -> Result<(), CliError> {
    if report.rows.is_empty() {
        return Err(CliError::Validation("no results to report".into()));
    }
    let bytes = report.to_csv()?;
    let write = |p: &Path, data: &[u8]| -> Result<(), CliError> {
        let mut f = File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        f.write_all(data).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
    };
    write(path, &bytes)?;
    let json = serde_json::to_vec_pretty(sidecar).map_err(|e| CliError::Io(e.to_string()))?;
    write(&sidecar_path(path), &json)
}

/// A parsed report: the header checked against the schema, rows as text.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    pub schema: String,
    pub rows: Vec<Vec<String>>,
}

impl ParsedReport {
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = schema_columns(&self.schema)?.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }
}

/// Reads a CSV report, checking its header against `schema`.
pub fn read_report(path: &Path, schema: &str) -> Result<ParsedReport, CliError> {
    let cols = schema_columns(schema).ok_or_else(|| CliError::Validation(format!("unknown schema {schema}")))?;
    let mut r = csv::Reader::from_path(path).map_err(io_err)?;
    let header: Vec<String> = r.headers().map_err(io_err)?.iter().map(str::to_string).collect();
    if header != cols {
        return Err(CliError::Validation(format!("header {header:?} does not match schema {schema}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(io_err)?;
        if rec.len() != cols.len() {
            return Err(CliError::Validation("ragged row".into()));
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(ParsedReport { schema: schema.to_string(), rows })
}

/// Reads and checks a sidecar against its CSV's schema.
pub fn read_sidecar(path: &Path) -> Result<Sidecar, CliError> {
    let text = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let s: Sidecar = serde_json::from_slice(&text).map_err(|e| CliError::Validation(e.to_string()))?;
    match schema_columns(&s.schema) {
        Some(cols) if cols.iter().map(|c| c.to_string()).eq(s.columns.iter().cloned()) => Ok(s),
        _ => Err(CliError::Validation(format!("sidecar columns do not match schema {}", s.schema))),
    }
}
