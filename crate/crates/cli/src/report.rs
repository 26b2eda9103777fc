//! Result bundles: metric map, named checks, tables, and their CSV/JSON
//! serialization.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dipolesim_core::observables::RoughnessSeries;
use serde::Serialize;

use crate::config::{ExperimentConfig, Expectation, Format};
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Column values as floats, for tests and readers.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[j] {
                    Cell::Int(v) => *v as f64,
                    Cell::Float(v) => *v,
                    Cell::Text(_) => f64::NAN,
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance rule, e.g. `<= 1e-12`.
    pub rule: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            rule: format!("<= {limit:e}"),
            passed: value <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            rule: format!(">= {limit}"),
            passed: value >= limit,
        }
    }

    pub fn near(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            rule: format!("{target} ± {tol}"),
            passed: (value - target).abs() <= tol,
        }
    }

    /// A negative control: passes when the injected violation is seen.
    pub fn flagged(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            rule: format!("> {threshold:e} (control)"),
            passed: value > threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub details: serde_json::Value,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            metrics: BTreeMap::new(),
            checks: Vec::new(),
            tables: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.insert(name.into(), value);
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Turns `analysis.expect` rules into checks. A rule on a metric the
    /// command did not produce is a config error.
    pub fn apply_expectations(&mut self, rules: &[Expectation]) -> Result<(), CliError> {
        for (i, rule) in rules.iter().enumerate() {
            let value = *self.metrics.get(&rule.metric).ok_or_else(|| {
                let known: Vec<&str> = self.metrics.keys().map(String::as_str).collect();
                CliError::Config(format!(
                    "analysis.expect[{i}].metric: `{}` is not reported by {} (known: {})",
                    rule.metric,
                    self.command,
                    known.join(", ")
                ))
            })?;
            if let (Some(t), Some(tol)) = (rule.target, rule.tolerance) {
                self.checks.push(Check::near(rule.metric.clone(), value, t, tol));
            }
            if let Some(m) = rule.min {
                self.checks.push(Check::at_least(format!("{} min", rule.metric), value, m));
            }
            if let Some(m) = rule.max {
                let passed = value <= m;
                self.checks.push(Check {
                    name: format!("{} max", rule.metric),
                    value,
                    rule: format!("<= {m}"),
                    passed,
                });
            }
        }
        Ok(())
    }

    fn header(&self, cfg: &ExperimentConfig, what: &str) -> String {
        format!(
            "# dipolesim {what} schema v{SCHEMA_VERSION}\n# version: {}\n# command: {}\n# master_seed: {}\n# config: {}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            cfg.ensemble.master_seed,
            cfg.echo()
        )
    }

    pub fn to_csv(&self, table: &Table, cfg: &ExperimentConfig) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.into_error()))?)
            .expect("csv output is utf-8");
        Ok(self.header(cfg, &table.name) + &body)
    }

    pub fn to_json(&self, cfg: &ExperimentConfig) -> String {
        let doc = serde_json::json!({
            "schema": format!("dipolesim/summary/v{SCHEMA_VERSION}"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "master_seed": cfg.ensemble.master_seed,
            "config": cfg,
            "metrics": self.metrics,
            "checks": self.checks,
            "passed": self.passed(),
            "details": self.details,
        });
        serde_json::to_string_pretty(&doc).expect("summary serializes") + "\n"
    }

    /// Writes `<table>.csv` files and `summary.json` into `dir`.
    pub fn write(
        &self,
        cfg: &ExperimentConfig,
        dir: &Path,
        formats: &[Format],
    ) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        if formats.contains(&Format::Csv) {
            for t in &self.tables {
                let path = dir.join(format!("{}.csv", t.name));
                fs::write(&path, self.to_csv(t, cfg)?)?;
                written.push(path);
            }
        }
        if formats.contains(&Format::Json) {
            let path = dir.join("summary.json");
            fs::write(&path, self.to_json(cfg))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Roughness table layout shared by `simulate` and `collapse`.
pub const ROUGHNESS_COLUMNS: [&str; 7] = [
    "system_size",
    "time",
    "w_mean",
    "w_stderr",
    "w2_mean",
    "w2_stderr",
    "n_effective",
];

/// Reads the roughness series back from a `roughness.csv`.
pub fn read_roughness_csv(path: &Path) -> Result<Vec<RoughnessSeries>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Config(format!("{}: missing column `{name}`", path.display()))
        })
    };
    let (js, jt, jw, je) = (col("system_size")?, col("time")?, col("w_mean")?, col("w_stderr")?);
    let mut by_size: BTreeMap<usize, (Vec<f64>, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| {
            CliError::Config(format!("{}: row {}: bad {what}", path.display(), line + 1))
        };
        let l: usize = rec[js].parse().map_err(|_| bad("system_size"))?;
        let f = |j: usize, what: &str| rec[j].parse::<f64>().map_err(|_| bad(what));
        let entry = by_size.entry(l).or_default();
        entry.0.push(f(jt, "time")?);
        entry.1.push(f(jw, "w_mean")?);
        entry.2.push(f(je, "w_stderr")?);
    }
    by_size
        .into_iter()
        .map(|(l, (t, w, e))| RoughnessSeries::new(l, t, w, e).map_err(CliError::from))
        .collect()
}
