use livsic_core::cocycle::SkewPoint;
use livsic_core::fiber::FiberPoint;
use livsic_core::spectral::{spectrum_from_trace, LyapunovSpectrum, SpectralError};
use rand::Rng as _;
use serde::Serialize;
use serde_json::json;

use super::cocycle;
use crate::config::ExperimentConfig;
use crate::error::LabError;
use crate::pool::Pool;
use crate::report::{cell, Outcome, Trace, Verdict};

#[derive(Serialize)]
struct Start {
    base: [f64; 2],
    fiber: [f64; 2],
    /// `(1/n) log σ_i`, descending.
    raw: Vec<f64>,
    /// `None` when the estimate has not settled at `n`.
    spectrum: Option<LyapunovSpectrum>,
    #[serde(skip)]
    curve: Vec<(usize, Vec<f64>)>,
}

pub fn run(cfg: &ExperimentConfig, pool: &Pool) -> Result<Outcome, LabError> {
    let c = cocycle(cfg)?;
    let p = &cfg.params;
    let n = p.n;
    let q = c.dim();
    let marks: Vec<usize> = (1..=p.checkpoints).map(|j| (n * j / p.checkpoints).max(1)).collect();
    let starts = pool.trials(p.trials, |_, rng| {
        let x = c.base().random_point(rng);
        let fiber = if q == 1 { FiberPoint::circle(rng.gen()) } else { FiberPoint::torus(rng.gen(), rng.gen()) };
        let z = SkewPoint { base: x, fiber };
        let trace = c.derivative_cocycle(&z, n, 10)?;
        let raw: Vec<f64> = trace.log_svals[n - 1].iter().map(|l| l / n as f64).collect();
        if raw.iter().any(|l| !l.is_finite()) {
            return Err(LabError::Numeric("non-finite exponent".into()));
        }
        let spectrum = match spectrum_from_trace(&trace, n, p.exponent_tol) {
            Ok(s) => Some(s),
            Err(SpectralError::NotConverged { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        let curve = marks.iter().map(|&k| (k, trace.log_svals[k - 1].iter().map(|l| l / k as f64).collect())).collect();
        Ok(Start { base: c.base().features(&z.base), fiber: z.fiber.c, raw, spectrum, curve })
    })?;
    let mut trace = Trace::new("exponents", &["start", "k", "index", "rate"]);
    for (s, st) in starts.iter().enumerate() {
        for (k, rates) in &st.curve {
            for (i, r) in rates.iter().enumerate() {
                trace.push(vec![s.to_string(), k.to_string(), i.to_string(), cell(*r)]);
            }
        }
    }
    let max_abs = starts.iter().flat_map(|s| s.raw.iter()).fold(0.0f64, |m, l| m.max(l.abs()));
    let settled = starts.iter().filter(|s| s.spectrum.is_some()).count();
    let zero = max_abs <= p.exponent_tol;
    let verdicts = vec![
        Verdict::new(
            "exponents",
            if zero { format!("all |λ| ≤ {:e}", p.exponent_tol) } else { format!("max |λ| = {max_abs:e}") },
            true,
        ),
        Verdict::new("settled", format!("{settled} of {} starts settled at n = {n}", starts.len()), true),
    ];
    Ok(Outcome {
        results: json!({ "n": n, "max_abs_exponent": max_abs, "starts": super::json(&starts)? }),
        verdicts,
        traces: vec![trace],
    })
}
