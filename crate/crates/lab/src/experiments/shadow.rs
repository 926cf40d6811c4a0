use livsic_core::base::PeriodicOrbit;
use livsic_core::cocycle::{Cocycle, SkewPoint};
use livsic_core::fiber::FiberPoint;
use livsic_core::rng::Rng;
use livsic_core::shadowing::{calibrate_c, estimate_local_constant, fiber_close, FakeSetParams, Mode};
use livsic_core::spectral::exponent_estimate;
use rand::Rng as _;
use serde::Serialize;
use serde_json::json;

use super::cocycle;
use crate::config::{ExperimentConfig, Params};
use crate::error::LabError;
use crate::pool::Pool;
use crate::report::{cell, Outcome, Trace, Verdict};

/// One recurrent event and its fiber closing.
#[derive(Clone, Debug, Serialize)]
pub struct ShadowTrial {
    pub base_start: [f64; 2],
    pub fiber_start: [f64; 2],
    /// Set when the event failed a precondition; the other fields are then empty.
    pub skipped: Option<String>,
    pub mode: Option<Mode>,
    pub base_period: usize,
    /// The closed orbit returns to its first base point.
    pub base_closed: bool,
    /// Largest `d(f(x_i), x_{i+1})` along the closed orbit.
    pub base_step_error: f64,
    pub d0: f64,
    pub kappa: f64,
    pub fitted_rate: Option<f64>,
    pub rate_forward: Option<f64>,
    pub rate_backward: Option<f64>,
    pub bound_constant: f64,
    pub constant_flag: bool,
    #[serde(skip)]
    pub deviations: Vec<f64>,
}

impl ShadowTrial {
    fn skipped(base_start: [f64; 2], fiber_start: [f64; 2], why: String) -> Self {
        Self {
            base_start,
            fiber_start,
            skipped: Some(why),
            mode: None,
            base_period: 0,
            base_closed: false,
            base_step_error: f64::NAN,
            d0: f64::NAN,
            kappa: f64::NAN,
            fitted_rate: None,
            rate_forward: None,
            rate_backward: None,
            bound_constant: f64::NAN,
            constant_flag: false,
            deviations: vec![],
        }
    }

    /// Smallest of the three fitted rates; `None` if any is missing.
    pub fn min_rate(&self) -> Option<f64> {
        Some(self.fitted_rate?.min(self.rate_forward?).min(self.rate_backward?))
    }

    /// Rates meet `κ − tol` in hyperbolic mode; neutral events pass.
    pub fn rates_ok(&self, tol: f64) -> bool {
        match self.mode {
            Some(Mode::Hyperbolic) => self.min_rate().is_some_and(|r| r >= self.kappa - tol),
            Some(Mode::Neutral) => true,
            None => false,
        }
    }
}

/// Recurrent start near a period-`n` orbit, with the fiber coordinate
/// settled by `laps` turns of `Aⁿ` over that orbit.
fn recurrent_start(c: &Cocycle<f64>, p: &Params, rng: &mut Rng) -> Result<(SkewPoint<f64>, PeriodicOrbit), LabError> {
    let base = c.base();
    let x = base.random_point(rng);
    let per = base.close_unchecked(&x, p.closing_n)?.periodic;
    let x0 = base.random_stable_neighbor(&per.point, p.recurrence, rng);
    let g = c.iterate(&per.point, p.closing_n as i64)?;
    let mut y = if c.dim() == 1 { FiberPoint::circle(rng.gen()) } else { FiberPoint::torus(rng.gen(), rng.gen()) };
    for _ in 0..p.laps {
        y = g.eval(&y)?;
    }
    let r = p.recurrence;
    let off = [rng.gen_range(-r..r), if c.dim() == 1 { 0.0 } else { rng.gen_range(-r..r) }];
    let y0 = if c.dim() == 1 { FiberPoint::circle(y.c[0] + off[0]) } else { FiberPoint::torus(y.c[0] + off[0], y.c[1] + off[1]) };
    Ok((SkewPoint { base: x0, fiber: y0 }, per))
}

pub fn shadow_trial(c: &Cocycle<f64>, p: &Params, rng: &mut Rng) -> Result<ShadowTrial, LabError> {
    let base = c.base();
    let n = p.closing_n;
    let (z0, _) = recurrent_start(c, p, rng)?;
    let (bs, fs) = (base.features(&z0.base), z0.fiber.c);
    let attempt = || -> Result<ShadowTrial, LabError> {
        let spec = exponent_estimate(c, &z0, p.n, p.exponent_tol)?;
        let mut orbit = vec![z0.clone()];
        for i in 0..n {
            orbit.push(c.skew_step(&orbit[i], 1)?);
        }
        let k = estimate_local_constant(c, &orbit, 1.0);
        let mut params = FakeSetParams::derive(&spec, base, 1.0, 1.0, k, n)?;
        let mut crng = rng.clone();
        calibrate_c(c, &orbit, &mut params, 100, &mut crng)?;
        let res = fiber_close(c, &z0, n, &params)?;
        let o = &res.closed_orbit;
        let step_err = (0..n).map(|i| base.dist(&base.step(&o[i].base), &o[i + 1].base)).fold(0.0f64, f64::max);
        Ok(ShadowTrial {
            base_start: bs,
            fiber_start: fs,
            skipped: None,
            mode: Some(res.mode),
            base_period: res.base_period,
            base_closed: o[0].base == o[n].base,
            base_step_error: step_err,
            d0: res.d0,
            kappa: res.kappa,
            fitted_rate: res.fitted_rate,
            rate_forward: res.rate_forward,
            rate_backward: res.rate_backward,
            bound_constant: res.bound_constant,
            constant_flag: res.constant_flag,
            deviations: res.deviations,
        })
    };
    match attempt() {
        Err(LabError::Precondition(why)) => Ok(ShadowTrial::skipped(bs, fs, why)),
        other => other,
    }
}

pub fn run(cfg: &ExperimentConfig, pool: &Pool) -> Result<Outcome, LabError> {
    let c = cocycle(cfg)?;
    let p = &cfg.params;
    let trials = pool.trials(p.trials, |_, rng| shadow_trial(&c, p, rng))?;
    let mut trace = Trace::new("deviations", &["event", "i", "deviation"]);
    for (t, tr) in trials.iter().enumerate() {
        for (i, d) in tr.deviations.iter().enumerate() {
            trace.push(vec![t.to_string(), i.to_string(), cell(*d)]);
        }
    }
    let done: Vec<&ShadowTrial> = trials.iter().filter(|t| t.skipped.is_none()).collect();
    let closed = done.iter().filter(|t| t.base_closed).count();
    let rates = done.iter().filter(|t| t.rates_ok(p.closing_rate_tol)).count();
    let neutral = done.iter().filter(|t| t.mode == Some(Mode::Neutral)).count();
    let min_rate = done.iter().filter_map(|t| t.min_rate()).fold(f64::INFINITY, f64::min);
    let verdicts = vec![
        Verdict::new("events", format!("{} of {} events closed, {} skipped", done.len(), trials.len(), trials.len() - done.len()), true),
        Verdict::new("base_closed", format!("{closed} of {} closed orbits return exactly", done.len()), closed == done.len()),
        Verdict::new("rates", format!("{rates} of {} events decay at κ − {} or faster", done.len(), p.closing_rate_tol), rates == done.len()),
        Verdict::new("mode", format!("{neutral} neutral, {} hyperbolic", done.len() - neutral), true),
    ];
    Ok(Outcome {
        results: json!({
            "n": p.closing_n,
            "min_rate": if min_rate.is_finite() { json!(min_rate) } else { json!(null) },
            "events": super::json(&trials)?,
        }),
        verdicts,
        traces: vec![trace],
    })
}
