use livsic_core::cocycle::CocycleSpec;
use livsic_core::livsic::classify;
use serde::Serialize;
use serde_json::json;

use super::{base, cocycle_from};
use crate::config::ExperimentConfig;
use crate::error::LabError;
use crate::pool::Pool;
use crate::report::{cell, Outcome, Trace, Verdict};

#[derive(Serialize)]
struct Row {
    amplitude: f64,
    verdict: &'static str,
    marginal: bool,
    expected: &'static str,
    max_poc_c1: f64,
    max_periodic_exponent: f64,
    max_fibered_exponent: f64,
    verification_c0: Option<f64>,
}

/// Shear template whose `a0` is swept; defaults to a pure constant shear.
fn template(cfg: &ExperimentConfig) -> Result<CocycleSpec, LabError> {
    match &cfg.cocycle {
        None => Ok(CocycleSpec::Shear { a0: 0.0, amplitude: 0.0, harmonic: [1, 0] }),
        Some(s @ CocycleSpec::Shear { .. }) => Ok(s.clone()),
        Some(_) => Err(LabError::config("cocycle.family", "the sweep varies a shear cocycle")),
    }
}

pub fn run(cfg: &ExperimentConfig, pool: &Pool) -> Result<Outcome, LabError> {
    let b = base(cfg)?;
    let tpl = template(cfg)?;
    let p = &cfg.params;
    let rows = pool.trials(p.amplitudes.len(), |i, rng| {
        let a = p.amplitudes[i];
        let spec = match &tpl {
            CocycleSpec::Shear { amplitude, harmonic, .. } => CocycleSpec::Shear { a0: a, amplitude: *amplitude, harmonic: *harmonic },
            _ => unreachable!(),
        };
        let c = cocycle_from(&b, &spec, &format!("params.amplitudes[{i}]"))?;
        let out = classify(&c, &p.tolerances, &p.solve, rng)?;
        let r = &out.report;
        // the constant part is the closed-form obstruction; a fluctuating
        // part alone leaves the expectation open
        let expected = match &spec {
            CocycleSpec::Shear { amplitude, .. } if *amplitude != 0.0 && a == 0.0 => "",
            _ if a == 0.0 => "coboundary",
            _ => "obstruction",
        };
        Ok(Row {
            amplitude: a,
            verdict: r.verdict,
            marginal: r.marginal,
            expected,
            max_poc_c1: r.residuals.max_poc_c1,
            max_periodic_exponent: r.residuals.max_periodic_exponent,
            max_fibered_exponent: r.residuals.max_fibered_exponent,
            verification_c0: r.residuals.verification.as_ref().map(|v| v.c0),
        })
    })?;
    let mut trace = Trace::new("sweep", &["amplitude", "verdict", "marginal", "max_poc_c1", "max_periodic_exponent", "max_fibered_exponent"]);
    let mut verdicts = Vec::new();
    for r in &rows {
        trace.push(vec![
            cell(r.amplitude),
            r.verdict.to_string(),
            r.marginal.to_string(),
            cell(r.max_poc_c1),
            cell(r.max_periodic_exponent),
            cell(r.max_fibered_exponent),
        ]);
        let ok = r.expected.is_empty() || r.expected == r.verdict;
        verdicts.push(Verdict::new(format!("a = {}", cell(r.amplitude)), r.verdict, ok));
    }
    let agree = rows.iter().zip(&verdicts).filter(|(_, v)| v.ok).count();
    Ok(Outcome {
        results: json!({ "rows": super::json(&rows)?, "agreement": agree, "points": rows.len() }),
        verdicts,
        traces: vec![trace],
    })
}
