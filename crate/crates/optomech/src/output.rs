//! Result files: metadata header, CSV/JSON bodies and atomic writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use optomech_core::calibration::Calibration;

use crate::error::CliError;

pub const TOOL: &str = "optomech";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub calibration: CalibrationMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationMeta {
    pub c_m: f64,
    pub c_o: f64,
}

impl From<Calibration> for CalibrationMeta {
    fn from(c: Calibration) -> Self {
        CalibrationMeta { c_m: c.c_m, c_o: c.c_o }
    }
}

impl Metadata {
    pub fn csv_header(&self) -> String {
        format!(
            "# tool: {} {}\n# command: {}\n# config_sha256: {}\n# seed: {}\n# calibration: c_m={} c_o={}\n",
            self.tool, self.version, self.command, self.config_sha256, self.seed, self.calibration.c_m, self.calibration.c_o
        )
    }
}

/// SHA-256 of the canonical scenario JSON followed by every command-line
/// override that changes the result.
pub fn config_hash<T: Serialize>(scenario: &T, overrides: &[(&str, String)]) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(scenario).expect("scenario serializes"));
    for (k, v) in overrides {
        h.update(b"\n");
        h.update(k.as_bytes());
        h.update(b"=");
        h.update(v.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Column-oriented numeric or text table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(x) => x.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) => Value::Null,
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, meta: &Metadata) -> Vec<u8> {
        let mut out = meta.csv_header().into_bytes();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text)).expect("in-memory write");
        }
        out.extend(w.into_inner().expect("in-memory flush"));
        out
    }

    pub fn to_json_value(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect()))
            .collect();
        Value::Array(rows)
    }

    /// Fixed-width text for the terminal.
    pub fn aligned(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(short).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|c| cells.iter().map(|r| r[c].len()).chain([self.columns[c].len()]).max().unwrap_or(0))
            .collect();
        let line = |items: Vec<&str>| -> String {
            items.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect::<Vec<_>>().join("  ") + "\n"
        };
        let mut out = line(self.columns.iter().map(String::as_str).collect());
        for r in &cells {
            out += &line(r.iter().map(String::as_str).collect());
        }
        out
    }
}

fn short(c: &Cell) -> String {
    match c {
        Cell::Num(x) => format!("{x:.6e}"),
        other => other.text(),
    }
}

pub fn json_document(meta: &Metadata, result: Value) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(&json!({ "metadata": meta, "result": result })).expect("json");
    v.push(b'\n');
    v
}

/// Writes through a temporary file in the destination directory, then
/// renames, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let err = |source| CliError::Output { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    tmp.as_file().sync_all().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}
