//! Reports, manifests, exit codes and the JSON/CSV writers.

use std::fmt;
use std::io::Write;
use std::path::Path;

use repval_core::error::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::Format;

pub const EXIT_FAILED_CHECK: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;
pub const EXIT_INVALID_INPUT: u8 = 4;

/// Why a run stopped without a report.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Budget(String),
    InvalidInput(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Budget(_) => EXIT_BUDGET,
            Failure::InvalidInput(_) => EXIT_INVALID_INPUT,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Budget(m) => write!(f, "{m}"),
            Failure::InvalidInput(m) => write!(f, "invalid input: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Budget { .. } => Failure::Budget(e.to_string()),
            Error::Unsupported(_) => Failure::Usage(e.to_string()),
            _ => Failure::InvalidInput(e.to_string()),
        }
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

/// Rows for `--format csv`.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Table {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// What a command produced, before the manifest is attached.
pub struct Report {
    pub body: Value,
    pub table: Option<Table>,
    /// Set when the run completed but a checked property failed.
    pub failed_check: bool,
}

impl Report {
    pub fn new(body: impl Serialize) -> Report {
        Report { body: serde_json::to_value(body).expect("reports serialize"), table: None, failed_check: false }
    }

    pub fn with_table(mut self, table: Table) -> Report {
        self.table = Some(table);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: Value,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub timing: Timing,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub threads: usize,
}

/// The body with a `manifest` key added; non-object bodies move under `result`.
pub fn attach_manifest(body: Value, manifest: &RunManifest) -> Value {
    let manifest = serde_json::to_value(manifest).expect("manifest serializes");
    match body {
        Value::Object(mut fields) => {
            fields.insert("manifest".into(), manifest);
            Value::Object(fields)
        }
        other => json!({ "manifest": manifest, "result": other }),
    }
}

pub fn render(report: Report, manifest: &RunManifest, format: Format) -> Outcome<String> {
    match format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&attach_manifest(report.body, manifest)).expect("json values serialize");
            text.push('\n');
            Ok(text)
        }
        Format::Csv => {
            let table = report.table.ok_or_else(|| Failure::Usage(format!("`{}` has no tabular form; use --format json", manifest.command)))?;
            let mut out = format!("# manifest: {}\n", serde_json::to_string(manifest).expect("manifest serializes"));
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.header).map_err(|e| Failure::Usage(e.to_string()))?;
            for row in &table.rows {
                w.write_record(row).map_err(|e| Failure::Usage(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Failure::Usage(e.to_string()))?;
            out.push_str(&String::from_utf8(bytes).expect("csv of utf-8 fields"));
            Ok(out)
        }
    }
}

pub fn emit(text: &str, out: Option<&Path>) -> Outcome<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            // A closed pipe is not worth a diagnostic.
            let _ = stdout.write_all(text.as_bytes());
            Ok(())
        }
    }
}

/// Shortest decimal that round-trips, for CSV cells.
pub fn num(x: f64) -> String {
    format!("{x}")
}
