//! Experiment harness over `livsic-core`: JSON configs in, JSON reports and
//! CSV traces out.

pub mod config;
pub mod error;
pub mod experiments;
pub mod pool;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

pub use config::{Experiment, ExperimentConfig};
pub use error::LabError;
pub use pool::Pool;
pub use report::{Outcome, Verdict};

use config::Experiment as E;

/// Result of a finished run; `code` is the process exit status.
pub struct Finished {
    pub outcome: Outcome,
    pub report: Option<PathBuf>,
    pub code: i32,
}

/// Failed verdicts turn into exit code 4 for the experiments whose verdicts
/// are bound checks.
pub fn exit_code(experiment: Experiment, outcome: &Outcome) -> i32 {
    let checked = matches!(experiment, E::LemmaTests | E::MainTheoremSweep);
    if checked && !outcome.violations().is_empty() {
        4
    } else {
        0
    }
}

/// Runs a resolved config on `workers` threads and writes its outputs when
/// the config names an output directory.
pub fn execute(cfg: &ExperimentConfig, workers: usize) -> Result<Finished, LabError> {
    let start = Instant::now();
    let pool = Pool::new(workers, cfg.seed)?;
    let outcome = experiments::run(cfg, &pool)?;
    let wall = start.elapsed().as_secs_f64();
    let report = match &cfg.out {
        Some(dir) => Some(report::write_all(dir, cfg, &outcome, wall, pool.workers())?),
        None => None,
    };
    let code = exit_code(cfg.experiment(), &outcome);
    Ok(Finished { outcome, report, code })
}
