use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::LabError;

pub const VERSION: &str = concat!("livsic-lab ", env!("CARGO_PKG_VERSION"));

/// One named outcome of an experiment. `ok = false` marks a failed bound
/// check (lemma suites) or an unexpected classification (sweep).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub verdict: String,
    pub ok: bool,
}

impl Verdict {
    pub fn new(name: impl Into<String>, verdict: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), verdict: verdict.into(), ok }
    }
}

/// Rows of a CSV file; cells are formatted by the experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Trace {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, LabError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let numeric = |e: csv::Error| LabError::Numeric(format!("csv: {e}"));
        w.write_record(&self.header).map_err(numeric)?;
        for r in &self.rows {
            w.write_record(r).map_err(numeric)?;
        }
        let bytes = w.into_inner().map_err(|e| LabError::Numeric(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| LabError::Numeric(e.to_string()))
    }
}

/// Shortest round-trip formatting, matching the JSON reports.
pub fn cell(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        String::new()
    }
}

pub fn opt_cell(x: Option<f64>) -> String {
    x.map(cell).unwrap_or_default()
}

/// Everything an experiment produces.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub results: Value,
    pub verdicts: Vec<Verdict>,
    pub traces: Vec<Trace>,
}

impl Outcome {
    pub fn violations(&self) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| !v.ok).collect()
    }
}

/// Serialized report. Wall time is kept out of it so reruns compare
/// byte for byte; it is written next to the report instead.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport<'a> {
    pub version: &'static str,
    pub experiment: &'static str,
    pub config: &'a ExperimentConfig,
    pub results: &'a Value,
    pub verdicts: &'a [Verdict],
    pub traces: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
struct Timing {
    version: &'static str,
    experiment: &'static str,
    wall_time_s: f64,
    workers: usize,
}

pub fn trace_file(t: &Trace) -> String {
    format!("{}.csv", t.name)
}

pub fn render(cfg: &ExperimentConfig, outcome: &Outcome) -> Result<String, LabError> {
    let report = RunReport {
        version: VERSION,
        experiment: cfg.experiment().name(),
        config: cfg,
        results: &outcome.results,
        verdicts: &outcome.verdicts,
        traces: outcome.traces.iter().map(trace_file).collect(),
    };
    let mut s = serde_json::to_string_pretty(&report).map_err(|e| LabError::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn write(path: PathBuf, contents: &str) -> Result<(), LabError> {
    fs::write(&path, contents).map_err(|source| LabError::Io { path: path.display().to_string(), source })
}

/// Writes `report.json`, one CSV per trace and `timing.json` into `dir`.
pub fn write_all(dir: &Path, cfg: &ExperimentConfig, outcome: &Outcome, wall_time_s: f64, workers: usize) -> Result<PathBuf, LabError> {
    fs::create_dir_all(dir).map_err(|source| LabError::Io { path: dir.display().to_string(), source })?;
    let report = dir.join("report.json");
    write(report.clone(), &render(cfg, outcome)?)?;
    for t in &outcome.traces {
        write(dir.join(trace_file(t)), &t.to_csv()?)?;
    }
    let timing = Timing { version: VERSION, experiment: cfg.experiment().name(), wall_time_s, workers };
    write(dir.join("timing.json"), &serde_json::to_string_pretty(&timing).map_err(|e| LabError::Numeric(e.to_string()))?)?;
    Ok(report)
}
