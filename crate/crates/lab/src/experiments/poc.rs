use serde::Serialize;
use serde_json::json;

use super::cocycle;
use crate::config::ExperimentConfig;
use crate::error::LabError;
use crate::report::{cell, Outcome, Trace, Verdict};

#[derive(Serialize)]
struct PeriodRow {
    period: usize,
    orbits: usize,
    max_c0: f64,
    max_c1: f64,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, LabError> {
    let c = cocycle(cfg)?;
    let base = c.base();
    let p = &cfg.params;
    let mut trace = Trace::new("orbits", &["period", "index", "x0", "x1", "c0", "c1"]);
    let mut rows = Vec::new();
    let (mut worst, mut worst_period) = (0.0f64, 0);
    for n in 1..=p.p_max {
        let orbits = base.primitive_orbits(n, p.tolerances.orbit_cap)?;
        let mut row = PeriodRow { period: n, orbits: orbits.len(), max_c0: 0.0, max_c1: 0.0 };
        for (i, o) in orbits.iter().enumerate() {
            let r = c.poc_residual(o)?;
            if !(r.c0.is_finite() && r.c1.is_finite()) {
                return Err(LabError::Numeric(format!("non-finite residual at period {n}")));
            }
            let f = base.features(&o.point);
            trace.push(vec![n.to_string(), i.to_string(), cell(f[0]), cell(f[1]), cell(r.c0), cell(r.c1)]);
            row.max_c0 = row.max_c0.max(r.c0);
            row.max_c1 = row.max_c1.max(r.c1);
        }
        if row.max_c1 > worst {
            worst = row.max_c1;
            worst_period = n;
        }
        rows.push(row);
    }
    let ok = worst <= p.poc_tol;
    let verdict = if ok {
        format!("all residuals ≤ {:e}", p.poc_tol)
    } else {
        format!("residual {worst:e} above {:e} at period {worst_period}", p.poc_tol)
    };
    Ok(Outcome {
        results: json!({ "periods": super::json(&rows)?, "max_residual": worst, "orbits": trace.rows.len() }),
        verdicts: vec![Verdict::new("poc", verdict, ok)],
        traces: vec![trace],
    })
}
