use rand::Rng;
use serde::Serialize;

use super::bump::{localized_gap, Localized};
use super::ShadowError;
use crate::base::{BasePoint, BaseSystem};
use crate::cocycle::{Cocycle, SkewPoint};
use crate::fiber::FiberPoint;
use crate::scalar::Real;
use crate::spectral::LyapunovSpectrum;

/// Safety factor applied to the strict inequalities for κ, η and r⁰.
pub const SAFETY: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Hyperbolic,
    Neutral,
}

#[derive(Clone, Debug, Serialize)]
pub struct FakeSetParams {
    pub r0: f64,
    pub c: f64,
    pub c_tilde: f64,
    pub kappa: f64,
    pub eta: f64,
    pub alpha2: f64,
    pub beta: f64,
    pub ell: f64,
    /// Constant in `‖F^r_z(x, ·) − B(z)‖_C¹ ≤ K r^β`.
    pub k_local: f64,
    pub n0: usize,
    pub radii: Vec<f64>,
    pub mode: Mode,
    pub safety: f64,
}

/// Perturbation radius used for the graph lemma at rate `e^{−κ}`.
pub fn default_alpha2(kappa: f64) -> f64 {
    0.25 * (1.0 - (-kappa).exp())
}

impl FakeSetParams {
    /// Defaults from a measured spectrum: `κ = 0.9·½·min(gap, τ)`,
    /// `η = 0.9·min(β²κ, gap/2 − κ, α₂/2)`, `r⁰ = 0.9·min(1/ℓ², (α₂/(8Kℓ²))^{1/β})`.
    /// A spectrum with every exponent inside its tolerance gives neutral mode.
    pub fn derive(
        spectrum: &LyapunovSpectrum,
        base: &BaseSystem,
        beta: f64,
        ell: f64,
        k_local: f64,
        n0: usize,
    ) -> Result<Self, ShadowError> {
        if !(beta > 0.0 && beta <= 1.0) || ell < 1.0 || !(k_local >= 0.0) {
            return Err(ShadowError::Precondition(format!("bad constants β = {beta}, ℓ = {ell}, K = {k_local}")));
        }
        let h = base.hyperbolicity();
        let neutral = spectrum.exponents.iter().all(|l| l.abs() <= spectrum.tol);
        let gap = if neutral { f64::INFINITY } else { spectrum.min_gap() };
        let kappa = SAFETY * 0.5 * gap.min(h.tau);
        let alpha2 = default_alpha2(kappa);
        let mut eta = (beta * beta * kappa).min(alpha2 / 2.0);
        if gap.is_finite() {
            eta = eta.min(gap / 2.0 - kappa);
        }
        eta *= SAFETY;
        let mut r0 = 1.0 / (ell * ell);
        if k_local > 0.0 {
            r0 = r0.min((alpha2 / (8.0 * k_local * ell * ell)).powf(1.0 / beta));
        }
        r0 *= SAFETY;
        let mut p = Self {
            r0,
            c: 1.0,
            c_tilde: (ell * ell / 2.0).max(h.k0),
            kappa,
            eta,
            alpha2,
            beta,
            ell,
            k_local,
            n0,
            radii: vec![],
            mode: if neutral { Mode::Neutral } else { Mode::Hyperbolic },
            safety: SAFETY,
        };
        p.radii = p.radii_for(n0);
        Ok(p)
    }

    /// `r^{(n)} = r⁰ e^{−(η/β²) min(n, N₀ − n)}` for `n = 0..=N₀`.
    pub fn radii_for(&self, n0: usize) -> Vec<f64> {
        (0..=n0).map(|n| self.r0 * (-(self.eta / (self.beta * self.beta)) * n.min(n0 - n) as f64).exp()).collect()
    }

    pub fn with_horizon(mut self, n0: usize) -> Self {
        self.n0 = n0;
        self.radii = self.radii_for(n0);
        self
    }

    /// `K = max(ℓ, 2CC̃)` from the closing argument.
    pub fn closing_constant(&self) -> f64 {
        self.ell.max(2.0 * self.c * self.c_tilde)
    }

    /// `ε₀ = r⁰/K`.
    pub fn epsilon0(&self) -> f64 {
        self.r0 / self.closing_constant()
    }
}

/// Product distance `max(d_M, d_N)`.
pub fn skew_dist<T: Real>(base: &BaseSystem, a: &SkewPoint<T>, b: &SkewPoint<T>) -> f64 {
    base.dist(&a.base, &b.base).max(a.fiber.dist(&b.fiber).to_f64_lossy())
}

/// Largest `d_C¹(g^r, Dg_y)/r^β` over the orbit points and radii
/// `0.1, 0.05, 0.025, 0.0125`.
pub fn estimate_local_constant<T: Real>(c: &Cocycle<T>, orbit: &[SkewPoint<T>], beta: f64) -> f64 {
    let mut k = 0.0f64;
    for (z, next) in orbit.iter().zip(orbit.iter().skip(1)) {
        let g = c.at_with_next(&z.base, &next.base);
        for r in [0.1, 0.05, 0.025, 0.0125] {
            k = k.max(localized_gap(&Localized::new(&g, &z.fiber, r), 17) / r.powf(beta));
        }
    }
    k
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub c: f64,
    pub samples: usize,
    /// Largest `d(F(w), z_{k+1}) / r^{(k+1)}` over the samples.
    pub worst_ratio: f64,
    pub holds: bool,
}

fn random_fiber_near<T: Real, R: Rng + ?Sized>(y: &FiberPoint<T>, r: f64, rng: &mut R) -> FiberPoint<T> {
    let q = y.dim();
    loop {
        let d: Vec<f64> = (0..q).map(|_| rng.gen_range(-r..r)).collect();
        if d.iter().map(|x| x * x).sum::<f64>() <= r * r {
            let c = [y.c[0] + T::lit(d[0]), y.c[1] + T::lit(if q == 2 { d[1] } else { 0.0 })];
            return FiberPoint::new(q, c);
        }
    }
}

/// Samples `F(U(z_k, r^{(k)}/C)) ⊂ U(z_{k+1}, r^{(k+1)})` along `orbit`,
/// whose length must not exceed `radii.len()`.
pub fn local_invariance_check<T: Real, R: Rng + ?Sized>(
    c: &Cocycle<T>,
    orbit: &[SkewPoint<T>],
    params: &FakeSetParams,
    samples: usize,
    rng: &mut R,
) -> Result<InvarianceReport, ShadowError> {
    let radii = params.radii_for(orbit.len().saturating_sub(1));
    let base = c.base();
    let mut worst = 0.0f64;
    for k in 0..orbit.len().saturating_sub(1) {
        let rad = radii[k] / params.c;
        for _ in 0..samples {
            let w = SkewPoint { base: base.random_nearby(&orbit[k].base, rad, rng), fiber: random_fiber_near(&orbit[k].fiber, rad, rng) };
            let fw = c.skew_step(&w, 1)?;
            worst = worst.max(skew_dist(base, &fw, &orbit[k + 1]) / radii[k + 1]);
        }
    }
    Ok(InvarianceReport { c: params.c, samples, worst_ratio: worst, holds: worst < 1.0 })
}

/// Smallest power of two `C` for which the sampled local invariance holds.
pub fn calibrate_c<T: Real, R: Rng + ?Sized>(
    c: &Cocycle<T>,
    orbit: &[SkewPoint<T>],
    params: &mut FakeSetParams,
    samples: usize,
    rng: &mut R,
) -> Result<InvarianceReport, ShadowError> {
    params.c = 1.0;
    loop {
        let rep = local_invariance_check(c, orbit, params, samples, rng)?;
        if rep.holds {
            return Ok(rep);
        }
        if params.c >= 2f64.powi(40) {
            return Err(ShadowError::BoundViolated { measured: rep.worst_ratio, bound: 1.0 });
        }
        params.c *= 2.0;
    }
}

pub(crate) struct Shot<T> {
    pub orbit: Vec<SkewPoint<T>>,
    pub deviations: Vec<f64>,
    pub objective: f64,
}

/// Fiber orbit over `base` from a fiber point at index 0 (`forward`) or at the last index.
fn propagate<T: Real>(c: &Cocycle<T>, base: &[BasePoint], anchor: FiberPoint<T>, forward: bool) -> Result<Vec<FiberPoint<T>>, ShadowError> {
    let m = base.len();
    let mut ys = vec![anchor; m];
    if forward {
        for k in 0..m - 1 {
            ys[k + 1] = c.at_with_next(&base[k], &base[k + 1]).eval(&ys[k])?;
        }
    } else {
        for k in (0..m - 1).rev() {
            ys[k] = c.at_with_next(&base[k], &base[k + 1]).preimage(&ys[k + 1])?;
        }
    }
    Ok(ys)
}

/// Coordinate descent on a halving grid for the anchor fiber point that
/// minimizes `max_k w_k d(z′_k, targets_k)`; stops at resolution `1e−10`
/// or once `done(deviations)` holds.
pub(crate) fn shoot<T: Real>(
    c: &Cocycle<T>,
    base: &[BasePoint],
    targets: &[SkewPoint<T>],
    weights: &[f64],
    forward: bool,
    start: FiberPoint<T>,
    h0: f64,
    done: &dyn Fn(&[f64]) -> bool,
) -> Result<Shot<T>, ShadowError> {
    let bd: Vec<f64> = base.iter().zip(targets).map(|(x, t)| c.base().dist(x, &t.base)).collect();
    let eval = |y: FiberPoint<T>| -> Result<(Vec<f64>, f64, Vec<FiberPoint<T>>), ShadowError> {
        let ys = propagate(c, base, y, forward)?;
        let devs: Vec<f64> = ys.iter().zip(targets).zip(&bd).map(|((a, t), b)| b.max(a.dist(&t.fiber).to_f64_lossy())).collect();
        let obj = devs.iter().zip(weights).map(|(d, w)| d * w).fold(0.0, f64::max);
        Ok((devs, if obj.is_finite() { obj } else { f64::INFINITY }, ys))
    };
    let q = start.dim();
    let mut y = start;
    let (mut devs, mut obj, mut ys) = eval(y)?;
    let mut h = h0;
    let mut evals = 0;
    while h >= 1e-10 && !done(&devs) && evals < 20_000 {
        let mut best: Option<(FiberPoint<T>, Vec<f64>, f64, Vec<FiberPoint<T>>)> = None;
        for d in 0..q {
            for sgn in [-1.0, 1.0] {
                let mut cc = y.c;
                cc[d] = cc[d] + T::lit(sgn * h);
                let cand = FiberPoint::new(q, cc);
                evals += 1;
                // preimage failures only rule the candidate out
                if let Ok((dv, o, yy)) = eval(cand) {
                    if o < best.as_ref().map_or(obj, |b| b.2) {
                        best = Some((cand, dv, o, yy));
                    }
                }
            }
        }
        match best {
            Some((cand, dv, o, yy)) => {
                y = cand;
                devs = dv;
                obj = o;
                ys = yy;
            }
            None => h /= 2.0,
        }
    }
    let orbit = base.iter().zip(ys).map(|(b, f)| SkewPoint { base: b.clone(), fiber: f }).collect();
    Ok(Shot { orbit, deviations: devs, objective: obj })
}

#[derive(Clone, Debug, Serialize)]
pub struct FakePoint<T> {
    #[serde(skip)]
    pub point: SkewPoint<T>,
    #[serde(skip)]
    pub orbit: Vec<SkewPoint<T>>,
    /// `d(F^k z′, F^k z)` for `k = 0..=horizon`.
    pub deviations: Vec<f64>,
    /// `max_k e^{kκ} d_k`.
    pub objective: f64,
    /// `d_k ≤ C̃ e^{−kκ} d_0` for every `k`.
    pub contracting: bool,
    /// `d_k ≤ C̃ e^{kη} d_0` for every `k`.
    pub subexponential: bool,
    /// Slope of `−ln d_k` over the second half of the horizon.
    pub fitted_rate: Option<f64>,
    /// `max_k d_k / d(r^{(k)}/C)`, the local-neighbourhood ratio.
    pub local_ratio: f64,
    pub mode: Mode,
}

/// Least-squares slope of `−ln y` against `x` over positive entries.
pub(crate) fn decay_rate(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(_, y)| **y > 0.0).map(|(x, y)| (*x, -y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if den == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / den)
}

pub(crate) fn certificates(devs: &[f64], params: &FakeSetParams) -> (bool, bool) {
    let d0 = devs[0];
    let slack = 1e-15;
    let contracting = devs.iter().enumerate().all(|(k, d)| *d <= params.c_tilde * (-(k as f64) * params.kappa).exp() * d0 + slack);
    let sub = devs.iter().enumerate().all(|(k, d)| *d <= params.c_tilde * ((k as f64) * params.eta).exp() * d0 + slack);
    (contracting, sub)
}

/// Point over `target_base` on the fake stable set of `z` for `horizon` steps.
pub fn fake_stable_point<T: Real>(
    c: &Cocycle<T>,
    z: &SkewPoint<T>,
    target_base: &BasePoint,
    params: &FakeSetParams,
    horizon: usize,
) -> Result<FakePoint<T>, ShadowError> {
    let base = c.base();
    let d = base.dist(&z.base, target_base);
    if d >= params.r0 {
        return Err(ShadowError::Precondition(format!("target at distance {d:e} is not inside B(x, r⁰ = {:e})", params.r0)));
    }
    let xs = base.orbit(target_base, horizon + 1);
    let mut targets = Vec::with_capacity(horizon + 1);
    let mut zk = z.clone();
    for k in 0..=horizon {
        if k > 0 {
            zk = c.skew_step(&zk, 1)?;
        }
        let dk = base.dist(&xs[k], &zk.base);
        if dk > 2.0 * params.r0 {
            return Err(ShadowError::Precondition(format!("target leaves W^s_(2r⁰) at step {k} ({dk:e})")));
        }
        targets.push(zk.clone());
    }
    let weights: Vec<f64> = (0..=horizon).map(|k| (k as f64 * params.kappa).exp()).collect();
    let mode = params.mode;
    let p = params.clone();
    let done = move |devs: &[f64]| {
        let (con, sub) = certificates(devs, &p);
        match mode {
            Mode::Hyperbolic => con,
            Mode::Neutral => sub,
        }
    };
    let shot = shoot(c, &xs, &targets, &weights, true, z.fiber, params.r0, &done)?;
    let (contracting, subexponential) = certificates(&shot.deviations, params);
    let ok = match mode {
        Mode::Hyperbolic => contracting,
        Mode::Neutral => subexponential,
    };
    if !ok {
        return Err(ShadowError::NoStablePoint { best: shot.objective });
    }
    let radii = params.radii_for(horizon);
    let local_ratio = shot.deviations.iter().zip(&radii).map(|(d, r)| d * params.c / r).fold(0.0, f64::max);
    let half = horizon / 2;
    let ks: Vec<f64> = (half..=horizon).map(|k| k as f64).collect();
    Ok(FakePoint {
        point: shot.orbit[0].clone(),
        fitted_rate: decay_rate(&ks, &shot.deviations[half..]),
        orbit: shot.orbit,
        deviations: shot.deviations,
        objective: shot.objective,
        contracting,
        subexponential,
        local_ratio,
        mode,
    })
}
