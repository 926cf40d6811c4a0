use livsic_core::fiber::{FiberDiffeo, FiberPoint};
use livsic_core::linalg::{line_angle, normalize, Mat};
use livsic_core::rng::Rng;
use livsic_core::shadowing::{conjugated_gap_check, localized_gap, loglog_slope, FnMap, Localized, ShadowError};
use livsic_core::spectral::{
    bounded_conjugacy_stability, calibrate_alpha1, calibrate_gamma, cone_invariance_check, flag_construction, lemma_threshold,
    random_bounded, ConeSystem, SpectralError,
};
use rand::Rng as _;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, LemmaParams, Suite};
use crate::error::LabError;
use crate::pool::Pool;
use crate::report::{cell, Outcome, Trace, Verdict};

/// Aggregate of one suite. `worst` is the largest measured/bound ratio
/// (or deviation, for the slopes); a trial violates when it exceeds 1.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub suite: Suite,
    pub trials: usize,
    pub violations: usize,
    pub worst: f64,
    pub summary: Value,
    #[serde(skip)]
    pub rows: Vec<Vec<String>>,
}

impl SuiteResult {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

fn suite_block(s: Suite) -> u64 {
    match s {
        Suite::Conjugacy => 1,
        Suite::Cones => 2,
        Suite::Gap => 3,
        Suite::Localization => 4,
    }
}

/// `A_n = U diag(e^{n(λ_i + w_i)}) V` with `|w_i| < window`.
fn lemma_trace(lambdas: &[f64], window: f64, len: usize, rng: &mut Rng) -> Vec<Mat<f64>> {
    let q = lambdas.len();
    let u = Mat::random_orthogonal(q, rng);
    let v = Mat::random_orthogonal(q, rng);
    (1..=len)
        .map(|n| {
            let d: Vec<f64> = lambdas
                .iter()
                .map(|l| (n as f64 * (l + if window > 0.0 { rng.gen_range(-window..window) } else { 0.0 })).exp())
                .collect();
            &(&u * &Mat::diag(&d)) * &v
        })
        .collect()
}

fn conjugacy(lp: &LemmaParams, trials: usize, pool: &Pool) -> Result<SuiteResult, LabError> {
    let threshold = lemma_threshold(lp.ell, lp.delta);
    if threshold > lp.horizon {
        return Err(LabError::Precondition(format!("threshold {threshold} exceeds the horizon {}", lp.horizon)));
    }
    let reps = pool.trials_on(suite_block(Suite::Conjugacy), trials, |_, rng| {
        let a = lemma_trace(&lp.lambdas, lp.window, lp.horizon, rng);
        Ok(bounded_conjugacy_stability(&a, &lp.lambdas, lp.ell, lp.delta, lp.window, 1, rng)?)
    })?;
    let mut rows = Vec::with_capacity(reps.len());
    let (mut violations, mut sandwich, mut worst, mut margin) = (0, 0, 0.0f64, f64::INFINITY);
    for (t, r) in reps.iter().enumerate() {
        violations += usize::from(!r.holds);
        sandwich += r.sandwich_violations;
        worst = worst.max(r.max_deviation / lp.delta);
        margin = margin.min(r.sandwich_margin);
        rows.push(vec![
            t.to_string(),
            cell(r.max_deviation),
            r.worst_n.map(|n| n.to_string()).unwrap_or_default(),
            r.sandwich_violations.to_string(),
            cell(r.sandwich_margin),
        ]);
    }
    Ok(SuiteResult {
        suite: Suite::Conjugacy,
        trials,
        violations,
        worst,
        summary: json!({ "threshold": threshold, "ell": lp.ell, "delta": lp.delta, "sandwich_violations": sandwich, "sandwich_margin": margin }),
        rows,
    })
}

fn cone_setup(lp: &LemmaParams, pool: &Pool) -> Result<(ConeSystem, Vec<Mat<f64>>), LabError> {
    let mut rng = pool.aux_rng(suite_block(Suite::Cones));
    let k = lp.lambdas.len();
    let mut cones = ConeSystem::new(vec![1; k], lp.lambdas.clone(), lp.delta)?;
    let w = lp.delta / 5.0;
    let a: Vec<Mat<f64>> =
        (0..lp.cone_steps).map(|_| cones.diagonal(&(0..k).map(|_| rng.gen_range(-w..w)).collect::<Vec<_>>())).collect();
    calibrate_gamma(&mut cones, &a, 64, &mut rng)?;
    calibrate_alpha1(&mut cones, &a, 50, 8, &mut rng)?;
    Ok((cones, a))
}

/// Slow eigenvector of a 2×2 matrix with real spectrum.
fn slow_eigenvector(c: &Mat<f64>) -> Vec<f64> {
    let (tr, det) = (c.trace(), c.det());
    let slow = 0.5 * (tr - (tr * tr - 4.0 * det).sqrt());
    if c[(0, 1)].abs() >= c[(1, 0)].abs() {
        normalize(&[c[(0, 1)], slow - c[(0, 0)]])
    } else {
        normalize(&[slow - c[(1, 1)], c[(1, 0)]])
    }
}

fn cones(lp: &LemmaParams, trials: usize, pool: &Pool) -> Result<SuiteResult, LabError> {
    if lp.lambdas.len() != 2 {
        return Err(LabError::Precondition("the cone and flag suite uses two exponents".into()));
    }
    let (cs, a) = cone_setup(lp, pool)?;
    let q = cs.dim();
    struct ConeTrial {
        escape: Option<String>,
        iterated: f64,
        inclusion: f64,
        angle: f64,
        flag_ok: bool,
    }
    let reps = pool.trials_on(suite_block(Suite::Cones), trials, |_, rng| {
        let p: Vec<Mat<f64>> = a
            .iter()
            .map(|_| {
                let m = Mat::random_gaussian(q, q, rng);
                let n = m.norm2();
                m.scale(cs.alpha1 * rng.gen::<f64>().sqrt() / n)
            })
            .collect();
        let (escape, iterated, inclusion) = match cone_invariance_check(&cs, &a, Some(&p), lp.cone_samples, rng) {
            Ok(r) => (None, r.max_iterated, r.max_inclusion),
            Err(e @ SpectralError::ConeEscape { .. }) => (Some(e.to_string()), f64::INFINITY, f64::INFINITY),
            Err(e) => return Err(e.into()),
        };
        let mut c = cs.diagonal(&[0.0, 0.0]);
        c[(0, 1)] += rng.gen_range(-1e-3..1e-3);
        c[(1, 0)] += rng.gen_range(-1e-3..1e-3);
        let seq = vec![c.clone(); lp.flag_horizon];
        let flag = flag_construction(&seq, &cs, lp.flag_horizon)?;
        let angle = line_angle(&flag.subspaces[1].column(0), &slow_eigenvector(&c));
        Ok(ConeTrial { escape, iterated, inclusion, angle, flag_ok: flag.sandwich_ok })
    })?;
    let mut rows = Vec::with_capacity(trials);
    let (mut violations, mut worst, mut max_angle, mut escapes) = (0, 0.0f64, 0.0f64, 0);
    for (t, r) in reps.iter().enumerate() {
        let ok = r.escape.is_none() && r.iterated <= 1.0 && r.angle <= lp.flag_tol && r.flag_ok;
        violations += usize::from(!ok);
        escapes += usize::from(r.escape.is_some());
        worst = worst.max(r.iterated).max(r.angle / lp.flag_tol);
        max_angle = max_angle.max(r.angle);
        rows.push(vec![t.to_string(), cell(r.iterated), cell(r.inclusion), cell(r.angle), r.flag_ok.to_string(), r.escape.clone().unwrap_or_default()]);
    }
    Ok(SuiteResult {
        suite: Suite::Cones,
        trials,
        violations,
        worst,
        summary: json!({
            "kappa": cs.kappa,
            "gamma": cs.gamma,
            "alpha1": cs.alpha1,
            "contraction_rate": (-cs.kappa + cs.delta / 2.0).exp(),
            "boundary_vectors_per_trial": lp.cone_samples.div_ceil(2) * a.len() * (cs.lambdas.len() - 1),
            "escapes": escapes,
            "max_flag_angle": max_angle,
        }),
        rows,
    })
}

fn wave_map(m: Mat<f64>, amp: f64, k: [f64; 2], phase: f64) -> FnMap {
    let m2 = m.clone();
    FnMap::new(
        2,
        move |v| {
            let s = (k[0] * v[0] + k[1] * v[1] + phase).sin();
            let w = m.mul_vec(v);
            vec![w[0] + amp * s, w[1] - 0.5 * amp * s]
        },
        move |v| {
            let c = (k[0] * v[0] + k[1] * v[1] + phase).cos();
            Mat::from_fn(2, 2, |i, j| m2[(i, j)] + if i == 0 { amp } else { -0.5 * amp } * c * k[j])
        },
    )
}

fn gap(lp: &LemmaParams, trials: usize, pool: &Pool) -> Result<SuiteResult, LabError> {
    let pts: Vec<Vec<f64>> = (0..9).flat_map(|i| (0..9).map(move |j| vec![i as f64 / 4.0 - 1.0, j as f64 / 4.0 - 1.0])).collect();
    let reps = pool.trials_on(suite_block(Suite::Gap), trials, |t, rng| {
        let wide = random_bounded(2, lp.ell, rng).scale((lp.eta / 2.0).exp());
        let narrow = random_bounded(2, lp.ell, rng);
        let (a, b) = if t % 2 == 0 { (wide, narrow) } else { (narrow, wide) };
        let m = Mat::random_gaussian(2, 2, rng);
        let g = wave_map(m.clone(), rng.gen_range(0.0..0.1), [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)], rng.gen());
        let h = wave_map(m, rng.gen_range(0.0..0.1), [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)], rng.gen());
        match conjugated_gap_check(&a, &b, &g, &h, lp.ell, lp.eta, &pts) {
            Ok(r) => Ok((r.gap, r.bound)),
            Err(ShadowError::BoundViolated { measured, bound }) => Ok((measured, bound)),
            Err(e) => Err(e.into()),
        }
    })?;
    let mut rows = Vec::with_capacity(trials);
    let (mut violations, mut worst) = (0, 0.0f64);
    for (t, (g, b)) in reps.iter().enumerate() {
        let ok = g < b || *g == 0.0;
        violations += usize::from(!ok);
        if *b > 0.0 {
            worst = worst.max(g / b);
        }
        rows.push(vec![t.to_string(), cell(*g), cell(*b)]);
    }
    Ok(SuiteResult { suite: Suite::Gap, trials, violations, worst, summary: json!({ "ell": lp.ell, "eta": lp.eta }), rows })
}

/// Nonlinear fiber maps and base points for the localization slopes.
pub fn localization_families() -> Vec<(&'static str, FiberDiffeo<f64>, FiberPoint<f64>)> {
    let built = |r: Result<FiberDiffeo<f64>, _>| r.expect("valid generator");
    vec![
        ("circle_shear(0.5)", built(FiberDiffeo::circle_shear(0.5)), FiberPoint::circle(0.3)),
        ("circle_shear(-0.7)", built(FiberDiffeo::circle_shear(-0.7)), FiberPoint::circle(0.8)),
        ("torus_shear(0.3, [1, 0])", built(FiberDiffeo::shear(2, 0.3, [1, 0], 0)), FiberPoint::torus(0.2, 0.4)),
        ("torus_shear(0.6, [0, 1])", built(FiberDiffeo::shear(2, 0.6, [0, 1], 0)), FiberPoint::torus(0.7, 0.25)),
        (
            "torus_shear(0.4) ∘ cat",
            built(FiberDiffeo::shear(2, 0.4, [1, 0], 1)).compose(&built(FiberDiffeo::linear([[2, 1], [1, 1]]))),
            FiberPoint::torus(0.6, 0.1),
        ),
    ]
}

fn localization(lp: &LemmaParams, pool: &Pool) -> Result<SuiteResult, LabError> {
    let fams = localization_families();
    let slopes = pool.trials_on(suite_block(Suite::Localization), fams.len(), |i, _| {
        let (_, g, y) = &fams[i];
        let gaps: Vec<f64> = lp.radii.iter().map(|&r| localized_gap(&Localized::new(g, y, r), 17)).collect();
        if gaps.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(LabError::Numeric(format!("degenerate localized gaps {gaps:?}")));
        }
        Ok((loglog_slope(&lp.radii, &gaps), gaps))
    })?;
    let mut rows = Vec::new();
    let (mut violations, mut worst) = (0, 0.0f64);
    for ((name, _, _), (slope, gaps)) in fams.iter().zip(&slopes) {
        let dev = (slope - lp.beta).abs();
        violations += usize::from(dev > lp.slope_tol);
        worst = worst.max(dev / lp.slope_tol);
        for (r, g) in lp.radii.iter().zip(gaps) {
            rows.push(vec![name.to_string(), cell(*r), cell(*g), cell(*slope)]);
        }
    }
    Ok(SuiteResult {
        suite: Suite::Localization,
        trials: fams.len(),
        violations,
        worst,
        summary: json!({ "beta": lp.beta, "slopes": fams.iter().zip(&slopes).map(|(f, s)| json!({ "family": f.0, "slope": s.0 })).collect::<Vec<_>>() }),
        rows,
    })
}

pub fn run_suite(suite: Suite, lp: &LemmaParams, trials: usize, pool: &Pool) -> Result<SuiteResult, LabError> {
    match suite {
        Suite::Conjugacy => conjugacy(lp, trials, pool),
        Suite::Cones => cones(lp, trials, pool),
        Suite::Gap => gap(lp, trials, pool),
        Suite::Localization => localization(lp, pool),
    }
}

fn header(s: Suite) -> &'static [&'static str] {
    match s {
        Suite::Conjugacy => &["trial", "max_deviation", "worst_n", "sandwich_violations", "sandwich_margin"],
        Suite::Cones => &["trial", "max_iterated", "max_inclusion", "flag_angle", "flag_sandwich", "escape"],
        Suite::Gap => &["trial", "gap", "bound"],
        Suite::Localization => &["family", "r", "gap", "slope"],
    }
}

fn name(s: Suite) -> &'static str {
    match s {
        Suite::Conjugacy => "conjugacy",
        Suite::Cones => "cones",
        Suite::Gap => "gap",
        Suite::Localization => "localization",
    }
}

pub fn run(cfg: &ExperimentConfig, pool: &Pool) -> Result<Outcome, LabError> {
    let lp = &cfg.params.lemma;
    let mut results = Vec::new();
    let mut verdicts = Vec::new();
    let mut traces = Vec::new();
    for &s in &lp.suites {
        let r = run_suite(s, lp, cfg.params.trials, pool)?;
        let text = if r.holds() {
            format!("holds on {} trials (worst ratio {})", r.trials, cell(r.worst))
        } else {
            format!("{} of {} trials violate the bound (worst ratio {})", r.violations, r.trials, cell(r.worst))
        };
        verdicts.push(Verdict::new(name(s), text, r.holds()));
        let mut t = Trace::new(&format!("lemma_{}", name(s)), header(s));
        for row in &r.rows {
            t.push(row.clone());
        }
        traces.push(t);
        results.push(r);
    }
    Ok(Outcome { results: json!({ "suites": super::json(&results)? }), verdicts, traces })
}
