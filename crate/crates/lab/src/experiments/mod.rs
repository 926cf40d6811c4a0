mod lemmas;
mod poc;
mod shadow;
mod solve;
mod spectrum;
mod sweep;

use std::sync::Arc;

use livsic_core::base::BaseSystem;
use livsic_core::cocycle::{Cocycle, CocycleSpec};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::LabError;
use crate::pool::Pool;
use crate::report::Outcome;

pub use lemmas::{localization_families, run_suite, SuiteResult};
pub use shadow::{shadow_trial, ShadowTrial};

pub(crate) fn base(cfg: &ExperimentConfig) -> Result<Arc<BaseSystem>, LabError> {
    BaseSystem::from_config(&cfg.base).map(Arc::new).map_err(|e| LabError::config("base", e.to_string()))
}

pub(crate) fn cocycle_from(base: &Arc<BaseSystem>, spec: &CocycleSpec, path: &str) -> Result<Cocycle<f64>, LabError> {
    let family = spec.build::<f64>().map_err(|e| LabError::config(path, e.to_string()))?;
    Cocycle::new(base.clone(), family).map_err(|e| LabError::config(path, e.to_string()))
}

pub(crate) fn cocycle(cfg: &ExperimentConfig) -> Result<Cocycle<f64>, LabError> {
    let spec = cfg.cocycle.as_ref().ok_or_else(|| LabError::config("cocycle", "missing"))?;
    cocycle_from(&base(cfg)?, spec, "cocycle")
}

pub(crate) fn json<T: serde::Serialize>(v: &T) -> Result<serde_json::Value, LabError> {
    serde_json::to_value(v).map_err(|e| LabError::Numeric(e.to_string()))
}

/// Runs the configured experiment on `pool`. The config must be resolved.
pub fn run(cfg: &ExperimentConfig, pool: &Pool) -> Result<Outcome, LabError> {
    match cfg.experiment() {
        Experiment::PocCheck => poc::run(cfg),
        Experiment::Spectrum => spectrum::run(cfg, pool),
        Experiment::Solve => solve::run_solve(cfg, pool),
        Experiment::Classify => solve::run_classify(cfg, pool),
        Experiment::Shadow => shadow::run(cfg, pool),
        Experiment::LemmaTests => lemmas::run(cfg, pool),
        Experiment::MainTheoremSweep => sweep::run(cfg, pool),
    }
}
