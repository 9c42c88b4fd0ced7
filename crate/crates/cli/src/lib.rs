//! Batch experiment runner for `treetrace`: JSON configs in, CSV tables and
//! JSON metadata sidecars out.

pub mod config;
pub mod corpus;
pub mod experiments;
pub mod table;

use config::{Check, ExperimentConfig};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};
use table::{emit_plot_data, ResultTable, TableError};
use thiserror::Error;

pub use experiments::RunError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),

    #[error(transparent)]
    Run(#[from] RunError),

    #[error("writing {path}: {source}")]
    Output { path: PathBuf, source: TableError },

    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("thread pool: {0}")]
    Threads(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub stat: String,
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    pub passed: bool,
}

fn evaluate(check: &Check, summary: &BTreeMap<String, f64>) -> CheckOutcome {
    let value = summary.get(&check.stat).copied().filter(|v| !v.is_nan());
    let passed = value.is_some_and(|v| check.min.map_or(true, |m| v >= m) && check.max.map_or(true, |m| v <= m));
    CheckOutcome { stat: check.stat.clone(), value, min: check.min, max: check.max, passed }
}

/// JSON sidecar written next to every result table.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata<'a> {
    pub name: &'a str,
    pub kind: &'a str,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub threads: usize,
    /// Seconds since the Unix epoch; the only field that differs between
    /// identical invocations.
    pub timestamp: u64,
    pub columns: &'a [String],
    pub rows: usize,
    pub summary: &'a BTreeMap<String, f64>,
    pub checks: &'a [CheckOutcome],
    pub config: &'a ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: ResultTable,
    pub checks: Vec<CheckOutcome>,
    pub csv: PathBuf,
    pub sidecar: PathBuf,
    pub plot: Option<PathBuf>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs `config` on a pool of `threads` workers (0 picks the default) and
/// writes `<name>.csv`, `<name>.json` and, if requested, `<name>.plot.csv`
/// into `out`.
pub fn run(config: &ExperimentConfig, out: &Path, threads: usize) -> Result<RunOutput, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Threads(e.to_string()))?;
    let table = pool.install(|| experiments::run(config))?;
    let checks: Vec<CheckOutcome> = config.checks.iter().map(|c| evaluate(c, &table.summary)).collect();

    std::fs::create_dir_all(out).map_err(|source| CliError::Io { path: out.into(), source })?;
    let csv = out.join(format!("{}.csv", config.name));
    let file = File::create(&csv).map_err(|source| CliError::Io { path: csv.clone(), source })?;
    table
        .write_csv(BufWriter::new(file))
        .map_err(|source| CliError::Output { path: csv.clone(), source })?;

    let plot = match &config.plot {
        Some(plot) => {
            let path = out.join(format!("{}.plot.csv", config.name));
            let file = File::create(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            emit_plot_data(&table, &plot.x, &plot.y, plot.log10, BufWriter::new(file))
                .map_err(|source| CliError::Output { path: path.clone(), source })?;
            Some(path)
        }
        None => None,
    };

    let meta = Metadata {
        name: &config.name,
        kind: config.kind.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        threads: pool.current_num_threads(),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        columns: &table.columns,
        rows: table.rows.len(),
        summary: &table.summary,
        checks: &checks,
        config,
    };
    let sidecar = out.join(format!("{}.json", config.name));
    let mut text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    text.push('\n');
    std::fs::write(&sidecar, text).map_err(|source| CliError::Io { path: sidecar.clone(), source })?;

    Ok(RunOutput { table, checks, csv, sidecar, plot })
}
