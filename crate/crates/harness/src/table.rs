//! Result rows and their CSV/JSON emission.

use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: [&str; 7] = ["sweep_var", "sweep_value", "arch", "metric", "value", "trials", "stderr"];

/// Values of the `status` metric.
pub mod status {
    pub const CONVERGED: f64 = 0.0;
    pub const MAX_ITERATIONS: f64 = 1.0;
    pub const DEGRADED: f64 = 2.0;
    pub const INFEASIBLE: f64 = 3.0;
    pub const ERROR: f64 = 4.0;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub sweep_var: String,
    pub sweep_value: f64,
    pub arch: String,
    pub metric: String,
    pub value: f64,
    pub trials: usize,
    pub stderr: f64,
}

impl Row {
    /// A deterministic quantity: no trials, zero standard error.
    pub fn exact(sweep_var: &str, sweep_value: f64, arch: &str, metric: &str, value: f64) -> Self {
        Self {
            sweep_var: sweep_var.into(),
            sweep_value,
            arch: arch.into(),
            metric: metric.into(),
            value,
            trials: 0,
            stderr: 0.0,
        }
    }

    pub fn monte_carlo(sweep_var: &str, sweep_value: f64, arch: &str, metric: &str, value: f64, trials: usize, stderr: f64) -> Self {
        Self { trials, stderr, ..Self::exact(sweep_var, sweep_value, arch, metric, value) }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub schema: u32,
    pub rows: Vec<Row>,
}

#[derive(Debug)]
pub enum TableError {
    Io { path: String, source: std::io::Error },
    Csv(String),
    Json(String),
}

impl std::fmt::Display for TableError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TableError::Io { path, source } => write!(f, "{path}: {source}"),
            TableError::Csv(m) => write!(f, "csv: {m}"),
            TableError::Json(m) => write!(f, "json: {m}"),
        }
    }
}

impl std::error::Error for TableError {}

/// Twelve significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}

fn arch_rank(a: &str) -> usize {
    ["digital", "fully", "partially"].iter().position(|x| *x == a).unwrap_or(3)
}

impl ResultTable {
    pub fn new() -> Self {
        Self { schema: SCHEMA_VERSION, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = Row>) {
        self.rows.extend(rows);
    }

    /// Canonical order: sweep value, architecture, metric.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.sweep_var
                .cmp(&b.sweep_var)
                .then(a.sweep_value.total_cmp(&b.sweep_value))
                .then(arch_rank(&a.arch).cmp(&arch_rank(&b.arch)))
                .then(a.arch.cmp(&b.arch))
                .then(a.metric.cmp(&b.metric))
        });
    }

    pub fn get(&self, sweep_value: f64, arch: &str, metric: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.sweep_value == sweep_value && r.arch == arch && r.metric == metric)
    }

    /// `(sweep_value, value)` of one metric and architecture, by sweep value.
    pub fn series(&self, arch: &str, metric: &str) -> Vec<(f64, f64)> {
        let mut s: Vec<(f64, f64)> =
            self.rows.iter().filter(|r| r.arch == arch && r.metric == metric).map(|r| (r.sweep_value, r.value)).collect();
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        s
    }

    pub fn to_csv(&self) -> Result<String, TableError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).map_err(|e| TableError::Csv(e.to_string()))?;
        for r in &self.rows {
            w.write_record([
                r.sweep_var.clone(),
                fmt_f64(r.sweep_value),
                r.arch.clone(),
                r.metric.clone(),
                fmt_f64(r.value),
                r.trials.to_string(),
                fmt_f64(r.stderr),
            ])
            .map_err(|e| TableError::Csv(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| TableError::Csv(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| TableError::Csv(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self, TableError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| TableError::Csv(e.to_string()))?;
        if header.iter().ne(CSV_HEADER) {
            return Err(TableError::Csv(format!("unexpected header {header:?}")));
        }
        let mut t = Self::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| TableError::Csv(e.to_string()))?;
            let num = |i: usize| rec[i].parse::<f64>().map_err(|e| TableError::Csv(format!("column {}: {e}", CSV_HEADER[i])));
            t.push(Row {
                sweep_var: rec[0].to_string(),
                sweep_value: num(1)?,
                arch: rec[2].to_string(),
                metric: rec[3].to_string(),
                value: num(4)?,
                trials: rec[5].parse().map_err(|e| TableError::Csv(format!("column trials: {e}")))?,
                stderr: num(6)?,
            });
        }
        Ok(t)
    }

    /// Non-finite numbers become `null`.
    pub fn to_json(&self) -> Result<String, TableError> {
        serde_json::to_string_pretty(self).map_err(|e| TableError::Json(e.to_string()))
    }

    pub fn write(&self, path: &Path, format: crate::config::Format) -> Result<(), TableError> {
        let text = match format {
            crate::config::Format::Csv => self.to_csv()?,
            crate::config::Format::Json => self.to_json()?,
        };
        std::fs::write(path, text).map_err(|source| TableError::Io { path: path.display().to_string(), source })
    }
}
