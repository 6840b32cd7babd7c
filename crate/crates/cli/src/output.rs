use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig, SCHEMA_VERSION};
use crate::error::CliError;

/// Rows for the CSV form; the JSON form carries `results` instead.
#[derive(Debug, Default, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub passed: bool,
    pub header: Value,
    pub results: Value,
    pub table: Table,
}

#[derive(Serialize)]
struct Document<'a> {
    schema_version: u32,
    command: crate::config::CommandKind,
    passed: bool,
    config: &'a RunConfig,
    header: &'a Value,
    results: &'a Value,
}

/// Shortest round-trip text for a float.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn render(cfg: &RunConfig, outcome: &Outcome) -> Result<Vec<u8>, CliError> {
    match cfg.format {
        Format::Json => {
            let doc = Document {
                schema_version: SCHEMA_VERSION,
                command: cfg.command,
                passed: outcome.passed,
                config: cfg,
                header: &outcome.header,
                results: &outcome.results,
            };
            let mut out = serde_json::to_vec_pretty(&doc)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut out = Vec::new();
            let echo = json!({
                "schema_version": SCHEMA_VERSION,
                "passed": outcome.passed,
                "config": cfg,
                "header": outcome.header,
            });
            writeln!(out, "# {}", serde_json::to_string(&echo)?).map_err(|e| CliError::Io("csv".into(), e))?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&outcome.table.columns)?;
            for row in &outcome.table.rows {
                w.write_record(row)?;
            }
            w.into_inner().map_err(|e| CliError::Io("csv".into(), e.into_error()))
        }
    }
}

pub fn write(cfg: &RunConfig, outcome: &Outcome) -> Result<(), CliError> {
    let bytes = render(cfg, outcome)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::Io(path.display().to_string(), e)),
        None => std::io::stdout().write_all(&bytes).map_err(|e| CliError::Io("stdout".into(), e)),
    }
}
