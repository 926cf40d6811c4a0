use livsic_core::livsic::{self, classify, verify_at, CoboundaryResidual};
use serde_json::json;

use super::cocycle;
use crate::config::ExperimentConfig;
use crate::error::LabError;
use crate::pool::Pool;
use crate::report::{cell, Outcome, Trace, Verdict};

pub fn run_solve(cfg: &ExperimentConfig, pool: &Pool) -> Result<Outcome, LabError> {
    let c = cocycle(cfg)?;
    let p = &cfg.params;
    let tol = &p.tolerances;
    let u = livsic::solve(&c, tol, &p.solve, &mut pool.aux_rng(0))?;
    // one verification point per trial stream
    let per_point: Vec<CoboundaryResidual> = pool.trials(tol.test_points, |_, rng| {
        let x = c.base().random_point(rng);
        Ok(verify_at(&u, &c, &[x])?)
    })?;
    let mut trace = Trace::new("verification", &["point", "x0", "x1", "gap", "c0", "c1"]);
    let (mut c0, mut c1) = (0.0f64, 0.0f64);
    for (i, r) in per_point.iter().enumerate() {
        if !(r.c0.is_finite() && r.c1.is_finite()) {
            return Err(LabError::Numeric(format!("non-finite verification residual at point {i}")));
        }
        trace.push(vec![i.to_string(), cell(r.worst_point[0]), cell(r.worst_point[1]), cell(r.worst_gap), cell(r.c0), cell(r.c1)]);
        c0 = c0.max(r.c0);
        c1 = c1.max(r.c1);
    }
    let vtol = tol.verify_for(p.solve.density, u.holder_estimate.beta);
    let ok = c0 <= vtol;
    let verdict = if ok {
        format!("verified: d_C0 residual {c0:e} ≤ {vtol:e}")
    } else {
        format!("not verified: d_C0 residual {c0:e} > {vtol:e}")
    };
    Ok(Outcome {
        results: json!({
            "table_length": u.table_len(),
            "density": p.solve.density,
            "holder": super::json(&u.holder_estimate)?,
            "residual_c0": c0,
            "residual_c1": c1,
            "verify_tolerance": vtol,
            "test_points": per_point.len(),
        }),
        verdicts: vec![Verdict::new("verification", verdict, ok)],
        traces: vec![trace],
    })
}

pub fn run_classify(cfg: &ExperimentConfig, pool: &Pool) -> Result<Outcome, LabError> {
    let c = cocycle(cfg)?;
    let p = &cfg.params;
    let out = classify(&c, &p.tolerances, &p.solve, &mut pool.aux_rng(0))?;
    let r = &out.report;
    let mut trace = Trace::new("witnesses", &["period", "x0", "x1", "poc_c0", "poc_c1", "max_exponent", "score"]);
    for w in &r.witnesses {
        trace.push(vec![
            w.period.to_string(),
            cell(w.point[0]),
            cell(w.point[1]),
            cell(w.poc_c0),
            cell(w.poc_c1),
            cell(w.max_exponent),
            cell(w.score),
        ]);
    }
    let text = if r.marginal { format!("{} (marginal)", r.verdict) } else { r.verdict.to_string() };
    Ok(Outcome { results: super::json(r)?, verdicts: vec![Verdict::new("classification", text, true)], traces: vec![trace] })
}
