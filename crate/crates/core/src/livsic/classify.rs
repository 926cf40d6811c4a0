use rand::Rng;
use serde::{Deserialize, Serialize};

use super::transfer::{HolderFit, SolveOptions, TransferFunction};
use super::verify::{verify_coboundary, CoboundaryResidual};
use super::LivsicError;
use crate::base::{BaseSystem, PeriodicOrbit};
use crate::cocycle::{Accumulator, Cocycle, SkewPoint};
use crate::fiber::{jac_to_mat, FiberError, FiberPoint};
use crate::scalar::Real;

/// Decision thresholds; every field is echoed in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// On the `d_C¹` periodic orbit residual.
    pub poc: f64,
    /// On `|λ|` for periodic and fibered exponents.
    pub exponent: f64,
    pub exponent_n: usize,
    pub exponent_starts: usize,
    /// On the `d_C⁰` verification residual at density 0.02.
    pub verify: f64,
    pub test_points: usize,
    /// Largest period scanned; `None` is 8 on the torus and 10 on the shift.
    pub p_max: Option<usize>,
    pub orbit_cap: u64,
    pub fiber_starts: usize,
    pub repetitions: usize,
    /// Measurements within a factor `margin` of a tolerance are inconclusive.
    pub margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            poc: 1e-6,
            exponent: 1e-2,
            exponent_n: 10_000,
            exponent_starts: 10,
            verify: 1e-4,
            test_points: 100,
            p_max: None,
            orbit_cap: 100_000,
            fiber_starts: 4,
            repetitions: 1000,
            margin: 4.0,
        }
    }
}

impl Tolerances {
    pub fn p_max_for(&self, base: &BaseSystem) -> usize {
        self.p_max.unwrap_or(match base {
            BaseSystem::Torus(_) => 8,
            BaseSystem::Shift(_) => 10,
        })
    }

    /// `verify · (density/0.02)^β`.
    pub fn verify_for(&self, density: f64, beta: f64) -> f64 {
        self.verify * (density / 0.02).powf(beta)
    }
}

/// `(1/period) log σ_j` of `D A^period(p)` along the repeated orbit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicExponent {
    pub fiber_point: [f64; 2],
    /// Descending.
    pub exponents: Vec<f64>,
    /// Fiber fixed point of `A^period(p)`.
    pub fixed: bool,
    pub repetitions: usize,
}

/// Roots of `g(y) − y − m` for a circle map, by bisection on the lift.
fn circle_fixed_points<T: Real>(g: &crate::fiber::FiberDiffeo<T>, max: usize) -> Result<Vec<T>, FiberError> {
    const SCAN: usize = 512;
    let h = |y: T| -> Result<T, FiberError> { Ok(g.eval_lift([y, T::zero()])?[0] - y) };
    let ys: Vec<T> = (0..=SCAN).map(|k| T::lit(k as f64 / SCAN as f64)).collect();
    let hs = ys.iter().map(|y| h(*y)).collect::<Result<Vec<_>, _>>()?;
    let lo = hs.iter().fold(T::infinity(), |a, b| a.min(*b)).floor().to_i64().unwrap_or(0);
    let hi = hs.iter().fold(T::neg_infinity(), |a, b| a.max(*b)).ceil().to_i64().unwrap_or(0);
    let mut roots = Vec::new();
    for m in lo..=hi {
        let mt = T::lit(m as f64);
        for k in 0..SCAN {
            if roots.len() >= max {
                return Ok(roots);
            }
            let (a, b) = (hs[k] - mt, hs[k + 1] - mt);
            if a == T::zero() {
                roots.push(ys[k]);
            } else if a * b < T::zero() {
                let (mut l, mut r, mut fl) = (ys[k], ys[k + 1], a);
                for _ in 0..200 {
                    let mid = (l + r) / T::lit(2.0);
                    if mid <= l || mid >= r {
                        break;
                    }
                    let fm = h(mid)? - mt;
                    if (fm < T::zero()) == (fl < T::zero()) {
                        l = mid;
                        fl = fm;
                    } else {
                        r = mid;
                    }
                }
                roots.push((l + r) / T::lit(2.0));
            }
        }
    }
    Ok(roots)
}

/// Exponent records at the fiber fixed points (circle fibers) and at
/// `fiber_starts` spread-out fiber points, the latter over `repetitions`
/// turns of the orbit.
pub fn periodic_exponents<T: Real>(
    c: &Cocycle<T>,
    p: &PeriodicOrbit,
    fiber_starts: usize,
    repetitions: usize,
) -> Result<Vec<PeriodicExponent>, FiberError> {
    let q = c.dim();
    let per = p.period as f64;
    let g = c.orbit_product(p);
    let mut out = Vec::new();
    if q == 1 {
        for y in circle_fixed_points(&g, 8)? {
            let (_, j) = g.lift_jac([y, T::zero()])?;
            out.push(PeriodicExponent {
                fiber_point: [y.to_f64_lossy(), 0.0],
                exponents: vec![j[0][0].abs().to_f64_lossy().ln() / per],
                fixed: true,
                repetitions: 1,
            });
        }
    }
    let golden = 0.618_033_988_749_895;
    for s in 0..fiber_starts {
        let t = (s as f64 + 0.5) / fiber_starts as f64;
        let start = FiberPoint::new(q, [T::lit(t), T::lit((t + golden * s as f64).fract())]);
        let mut acc = Accumulator::<T>::new(q, 10);
        let mut y = start.c;
        for _ in 0..repetitions.max(1) {
            let (v, j) = g.lift_jac(y)?;
            acc.push(&jac_to_mat(&j, q));
            y = FiberPoint::new(q, v).c;
        }
        let reps = repetitions.max(1) as f64;
        out.push(PeriodicExponent {
            fiber_point: [start.c[0].to_f64_lossy(), if q == 2 { start.c[1].to_f64_lossy() } else { 0.0 }],
            exponents: acc.log_svals().iter().map(|l| l / (per * reps)).collect(),
            fixed: false,
            repetitions: repetitions.max(1),
        });
    }
    Ok(out)
}

/// POC residual and periodic exponents of one orbit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObstructionWitness {
    #[serde(skip)]
    pub orbit: PeriodicOrbit,
    /// Base features of the orbit point.
    pub point: [f64; 2],
    pub period: usize,
    pub poc_c0: f64,
    pub poc_c1: f64,
    pub periodic_exponents: Vec<PeriodicExponent>,
    pub max_exponent: f64,
    /// `max(poc_c1 / tol_poc, max_exponent / tol_exponent)`.
    pub score: f64,
}

impl ObstructionWitness {
    pub fn examine<T: Real>(c: &Cocycle<T>, p: &PeriodicOrbit, tol: &Tolerances) -> Result<Self, LivsicError> {
        let poc = c.poc_residual(p)?;
        let periodic_exponents = periodic_exponents(c, p, tol.fiber_starts, tol.repetitions)?;
        let max_exponent = periodic_exponents.iter().flat_map(|e| e.exponents.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self {
            orbit: p.clone(),
            point: c.base().features(&p.point),
            period: p.period,
            poc_c0: poc.c0,
            poc_c1: poc.c1,
            score: (poc.c1 / tol.poc).max(max_exponent / tol.exponent),
            periodic_exponents,
            max_exponent,
        })
    }

    /// Recomputes the record from the orbit alone.
    pub fn replay<T: Real>(&self, c: &Cocycle<T>, tol: &Tolerances) -> Result<Self, LivsicError> {
        Self::examine(c, &self.orbit, tol)
    }
}

/// Every primitive orbit of period `≤ p_max`, strongest witness first.
pub fn scan_periodic<T: Real>(c: &Cocycle<T>, tol: &Tolerances) -> Result<Vec<ObstructionWitness>, LivsicError> {
    let base = c.base();
    let mut out = Vec::new();
    for n in 1..=tol.p_max_for(base) {
        for p in base.primitive_orbits(n, tol.orbit_cap)? {
            out.push(ObstructionWitness::examine(c, &p, tol)?);
        }
    }
    out.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(out)
}

/// `(start features, (1/n) log σ_i(∂Fⁿ))` from random starts.
pub fn fibered_exponents<T: Real, R: Rng + ?Sized>(
    c: &Cocycle<T>,
    n: usize,
    starts: usize,
    rng: &mut R,
) -> Result<Vec<([f64; 2], Vec<f64>)>, LivsicError> {
    let base = c.base();
    let q = c.dim();
    let mut out = Vec::with_capacity(starts);
    for _ in 0..starts {
        let x = base.random_point(rng);
        let y = FiberPoint::new(q, [T::lit(rng.gen::<f64>()), T::lit(rng.gen::<f64>())]);
        let trace = c.derivative_cocycle(&SkewPoint { base: x.clone(), fiber: y }, n.max(1), 10)?;
        let raw = trace.log_svals[n.max(1) - 1].iter().map(|l| l / n.max(1) as f64).collect();
        out.push((base.features(&x), raw));
    }
    Ok(out)
}

fn max_abs(v: &[([f64; 2], Vec<f64>)]) -> (f64, [f64; 2]) {
    let mut best = (0.0f64, [0.0; 2]);
    for (x, l) in v {
        for e in l {
            if e.abs() > best.0 {
                best = (e.abs(), *x);
            }
        }
    }
    best
}

/// Transfer function of `c`, after checking the periodic orbit condition up
/// to `p_max` and vanishing fibered exponents.
pub fn solve<T: Real, R: Rng + ?Sized>(
    c: &Cocycle<T>,
    tol: &Tolerances,
    options: &SolveOptions,
    rng: &mut R,
) -> Result<TransferFunction<T>, LivsicError> {
    let base = c.base();
    for n in 1..=tol.p_max_for(base) {
        for p in base.primitive_orbits(n, tol.orbit_cap)? {
            let r = c.poc_residual(&p)?;
            if r.c1 > tol.poc {
                return Err(LivsicError::PocViolated(Box::new(ObstructionWitness::examine(c, &p, tol)?)));
            }
        }
    }
    let fib = fibered_exponents(c, tol.exponent_n, tol.exponent_starts, rng)?;
    let (value, start) = max_abs(&fib);
    if value > tol.exponent {
        return Err(LivsicError::ExponentNonzero { value, tol: tol.exponent, start });
    }
    TransferFunction::build(c, options)
}

#[derive(Clone, Debug, Serialize)]
pub struct Residuals {
    pub max_poc_c0: f64,
    pub max_poc_c1: f64,
    pub max_periodic_exponent: f64,
    pub max_fibered_exponent: f64,
    pub orbits_scanned: usize,
    pub verification: Option<CoboundaryResidual>,
    /// Tolerance the verification residual was held to.
    pub verify_tolerance: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassifyReport {
    /// `"coboundary"` or `"obstruction"`.
    pub verdict: &'static str,
    pub marginal: bool,
    /// Strongest orbit record of each period.
    pub witnesses: Vec<ObstructionWitness>,
    pub tolerances: Tolerances,
    pub residuals: Residuals,
    pub table_length: Option<usize>,
    pub density: f64,
    pub holder: Option<HolderFit>,
    pub note: Option<String>,
}

#[derive(Clone, Debug)]
pub enum Verdict<T> {
    Coboundary(Box<TransferFunction<T>>),
    Obstruction(Box<ObstructionWitness>),
}

#[derive(Clone, Debug)]
pub struct Classification<T> {
    pub verdict: Verdict<T>,
    pub report: ClassifyReport,
}

impl<T> Classification<T> {
    pub fn is_coboundary(&self) -> bool {
        matches!(self.verdict, Verdict::Coboundary(_))
    }
}

/// Coboundary with a verified transfer function, or the strongest periodic
/// witness against it. Never fails: errors end in a marginal obstruction.
pub fn classify<T: Real, R: Rng + ?Sized>(
    c: &Cocycle<T>,
    tol: &Tolerances,
    options: &SolveOptions,
    rng: &mut R,
) -> Result<Classification<T>, LivsicError> {
    let scan = scan_periodic(c, tol)?;
    let fib = fibered_exponents(c, tol.exponent_n, tol.exponent_starts, rng)?;
    let mut residuals = Residuals {
        max_poc_c0: scan.iter().map(|w| w.poc_c0).fold(0.0, f64::max),
        max_poc_c1: scan.iter().map(|w| w.poc_c1).fold(0.0, f64::max),
        max_periodic_exponent: scan.iter().map(|w| w.max_exponent).fold(0.0, f64::max),
        max_fibered_exponent: max_abs(&fib).0,
        orbits_scanned: scan.len(),
        verification: None,
        verify_tolerance: None,
    };
    let ratio = (residuals.max_poc_c1 / tol.poc)
        .max(residuals.max_periodic_exponent / tol.exponent)
        .max(residuals.max_fibered_exponent / tol.exponent);
    let mut report = ClassifyReport {
        verdict: "obstruction",
        marginal: false,
        witnesses: (1..=tol.p_max_for(c.base()))
            .filter_map(|n| scan.iter().find(|w| w.period == n).cloned())
            .collect(),
        tolerances: tol.clone(),
        residuals: residuals.clone(),
        table_length: None,
        density: options.density,
        holder: None,
        note: None,
    };
    let strongest = scan.first().cloned();
    let obstruction = |mut report: ClassifyReport, marginal: bool, note: Option<String>| -> Result<Classification<T>, LivsicError> {
        report.marginal = marginal;
        report.note = note;
        let w = strongest.clone().ok_or_else(|| LivsicError::Numeric("no periodic orbit scanned".into()))?;
        Ok(Classification { verdict: Verdict::Obstruction(Box::new(w)), report })
    };
    if ratio > 1.0 / tol.margin {
        return obstruction(report, ratio <= tol.margin, None);
    }
    let u = match TransferFunction::build(c, options) {
        Ok(u) => u,
        Err(e) => return obstruction(report, true, Some(format!("transfer function not built: {e}"))),
    };
    report.table_length = Some(u.table_len());
    report.holder = Some(u.holder_estimate);
    let v = match verify_coboundary(&u, c, tol.test_points, rng) {
        Ok(v) => v,
        Err(e) => return obstruction(report, true, Some(format!("verification failed: {e}"))),
    };
    let vtol = tol.verify_for(options.density, u.holder_estimate.beta);
    residuals.verification = Some(v.clone());
    residuals.verify_tolerance = Some(vtol);
    report.residuals = residuals;
    if v.c0 > vtol / tol.margin {
        return obstruction(report, true, Some("verification residual inside the inconclusive band".into()));
    }
    report.verdict = "coboundary";
    Ok(Classification { verdict: Verdict::Coboundary(Box::new(u)), report })
}
