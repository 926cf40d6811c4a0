//! Cocycles over a hyperbolic base, the skew product and the fibered
//! derivative cocycle.

pub mod family;

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

pub use family::{CocycleFamily, CocycleSpec, TransferFamily, TransferSpec};

use crate::base::{BasePoint, BaseSystem, PeriodicOrbit};
use crate::fiber::{distance, distance_c1, jac_to_mat, FiberDiffeo, FiberError, FiberPoint};
use crate::linalg::Mat;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CocycleError {
    #[error("|n| = {n} exceeds the composition cap {cap}")]
    CapExceeded { n: i64, cap: usize },
    #[error(transparent)]
    Fiber(#[from] FiberError),
    #[error("derivative trace needs n >= 1")]
    EmptyTrace,
    #[error("numerical failure: {0}")]
    Numeric(String),
}

/// Default cap on `|n|` for composition trees.
pub const DEFAULT_ITERATE_CAP: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolderData {
    pub k: f64,
    pub beta: f64,
}

#[derive(Clone, Debug)]
pub struct Cocycle<T> {
    base: Arc<BaseSystem>,
    family: CocycleFamily<T>,
    holder: Option<HolderData>,
    cap: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkewPoint<T> {
    pub base: BasePoint,
    pub fiber: FiberPoint<T>,
}

impl<T: Real> Cocycle<T> {
    pub fn new(base: Arc<BaseSystem>, family: CocycleFamily<T>) -> Result<Self, CocycleError> {
        family.validate()?;
        Ok(Self { base, family, holder: None, cap: DEFAULT_ITERATE_CAP })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_holder(mut self, h: HolderData) -> Self {
        self.holder = Some(h);
        self
    }

    pub fn base(&self) -> &BaseSystem {
        &self.base
    }

    pub fn base_arc(&self) -> &Arc<BaseSystem> {
        &self.base
    }

    pub fn family(&self) -> &CocycleFamily<T> {
        &self.family
    }

    pub fn holder(&self) -> Option<HolderData> {
        self.holder
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    /// `A(x)`.
    pub fn at(&self, x: &BasePoint) -> FiberDiffeo<T> {
        let phi = self.base.features(x);
        self.family.at(phi, || self.base.features(&self.base.step(x)))
    }

    /// `A(x)` when `f(x)` is already known.
    pub fn at_with_next(&self, x: &BasePoint, fx: &BasePoint) -> FiberDiffeo<T> {
        let phi = self.base.features(x);
        self.family.at(phi, || self.base.features(fx))
    }

    /// `Aⁿ(x)` as a composition tree.
    pub fn iterate(&self, x: &BasePoint, n: i64) -> Result<FiberDiffeo<T>, CocycleError> {
        if n.unsigned_abs() as usize > self.cap {
            return Err(CocycleError::CapExceeded { n, cap: self.cap });
        }
        let mut g = FiberDiffeo::identity(self.dim());
        let mut xi = x.clone();
        if n >= 0 {
            for _ in 0..n {
                let next = self.base.step(&xi);
                g = self.at_with_next(&xi, &next).compose(&g);
                xi = next;
            }
        } else {
            for _ in 0..-n {
                let prev = self.base.inverse_step(&xi);
                g = self.at_with_next(&prev, &xi).invert().compose(&g);
                xi = prev;
            }
        }
        if !g.linear_exact() {
            return Err(CocycleError::Numeric(format!("linear part of A^{n} exceeds the exact lift range")));
        }
        Ok(g)
    }

    /// `Aⁿ(p)` around a periodic orbit, reading base points from the orbit.
    pub fn orbit_product(&self, p: &PeriodicOrbit) -> FiberDiffeo<T> {
        let n = p.period;
        let mut g = FiberDiffeo::identity(self.dim());
        for i in 0..n {
            g = self.at_with_next(&p.orbit[i], &p.orbit[(i + 1) % n]).compose(&g);
        }
        g
    }

    /// `Fⁿ(x, y) = (fⁿx, Aⁿ(x)y)`, one fiber map at a time.
    pub fn skew_step(&self, z: &SkewPoint<T>, n: i64) -> Result<SkewPoint<T>, CocycleError> {
        let mut x = z.base.clone();
        let mut y = z.fiber;
        if n >= 0 {
            for _ in 0..n {
                let next = self.base.step(&x);
                y = self.at_with_next(&x, &next).eval(&y)?;
                x = next;
            }
        } else {
            for _ in 0..-n {
                let prev = self.base.inverse_step(&x);
                y = self.at_with_next(&prev, &x).preimage(&y)?;
                x = prev;
            }
        }
        Ok(SkewPoint { base: x, fiber: y })
    }

    /// Fiber derivatives `D A(fⁱx)(y_i)` for `i < n` with accumulated
    /// singular values of their products.
    pub fn derivative_cocycle(&self, z: &SkewPoint<T>, n: usize, refactor_every: usize) -> Result<DerivativeTrace<T>, CocycleError> {
        if n == 0 {
            return Err(CocycleError::EmptyTrace);
        }
        let q = self.dim();
        let mut acc = Accumulator::new(q, refactor_every);
        let mut matrices = Vec::with_capacity(n);
        let mut log_svals = Vec::with_capacity(n);
        let mut x = z.base.clone();
        let mut y = z.fiber;
        for _ in 0..n {
            let next = self.base.step(&x);
            let a = self.at_with_next(&x, &next);
            let (ly, j) = a.lift_jac(y.c)?;
            let m = jac_to_mat(&j, q);
            acc.push(&m);
            log_svals.push(acc.log_svals());
            matrices.push(m);
            y = FiberPoint::new(q, ly);
            x = next;
        }
        Ok(DerivativeTrace { matrices, log_svals, end: SkewPoint { base: x, fiber: y }, acc })
    }

    /// `(d_C⁰, d_C¹)` from `Aⁿ(p)` to the identity.
    pub fn poc_residual(&self, p: &PeriodicOrbit) -> Result<PocResidual, CocycleError> {
        let g = self.orbit_product(p);
        let grid = if self.dim() == 1 { 512 } else { 64 };
        let (c0, c1) = distance_c1(&g, &FiberDiffeo::identity(self.dim()), grid)?;
        Ok(PocResidual { c0, c1, period: p.period })
    }

    /// Least-squares fit of `log d_{C^{1+β}}(A(x), A(x'))` against `log d(x, x')`.
    pub fn estimate_holder<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> Result<HolderEstimate, CocycleError> {
        let samples = samples.max(100);
        let q = self.dim();
        let grid = if q == 1 { 64 } else { 16 };
        let delta = self.base.hyperbolicity().delta;
        let mut pts = Vec::with_capacity(samples);
        for _ in 0..samples {
            let x = self.base.random_point(rng);
            let r = match &*self.base {
                BaseSystem::Torus(_) => delta * 10f64.powf(rng.gen_range(-4.0..-0.5)),
                BaseSystem::Shift(_) => (-(rng.gen_range(1..=20) as f64)).exp2(),
            };
            let x2 = self.base.random_nearby(&x, r, rng);
            let d = self.base.dist(&x, &x2);
            if d <= 0.0 {
                continue;
            }
            let dd = distance(&self.at(&x), &self.at(&x2), 1.0, grid)?.d_c1beta;
            if dd > 0.0 {
                pts.push((d.ln(), dd.ln()));
            }
        }
        if pts.len() < 2 {
            return Ok(HolderEstimate { k: 0.0, beta_fit: None, k_sup: 0.0, pairs: pts.len(), degenerate: true });
        }
        let nf = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx <= 0.0 {
            return Err(CocycleError::Numeric("degenerate base distances".into()));
        }
        let b = sxy / sxx;
        let a = my - b * mx;
        let k_sup = pts.iter().map(|p| (p.1 - b * p.0).exp()).fold(0.0, f64::max);
        Ok(HolderEstimate { k: a.exp(), beta_fit: Some(b), k_sup, pairs: pts.len(), degenerate: false })
    }
}

/// `A(x) = u(f x) ∘ u(x)⁻¹`, with Hölder data estimated from 200 pairs.
pub fn make_coboundary<T: Real, R: Rng + ?Sized>(
    base: Arc<BaseSystem>,
    u: TransferFamily<T>,
    rng: &mut R,
) -> Result<Cocycle<T>, CocycleError> {
    let c = Cocycle::new(base, CocycleFamily::Coboundary(u))?;
    let h = c.estimate_holder(200, rng)?;
    Ok(match h.beta_fit {
        Some(beta) => c.with_holder(HolderData { k: h.k_sup, beta: beta.min(1.0) }),
        None => c.with_holder(HolderData { k: 0.0, beta: 1.0 }),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PocResidual {
    pub c0: f64,
    pub c1: f64,
    pub period: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolderEstimate {
    /// fitted prefactor `e^{intercept}`
    pub k: f64,
    /// fitted exponent; `None` when every sampled distance was 0
    pub beta_fit: Option<f64>,
    /// `max d_C / d_M^{beta_fit}` over the sample
    pub k_sup: f64,
    pub pairs: usize,
    pub degenerate: bool,
}

/// Running product `P = M_n ⋯ M_1` kept as `P = W · R̂ · e^c` with `W` the
/// product since the last refactorization times an orthogonal factor and
/// `R̂` upper triangular with unit max entry.
#[derive(Clone, Debug)]
pub struct Accumulator<T: Real> {
    q: usize,
    every: usize,
    w: Mat<T>,
    r_hat: Mat<T>,
    log_c: f64,
    log_det: f64,
    pending: usize,
    steps: usize,
}

impl<T: Real> Accumulator<T> {
    pub fn new(q: usize, every: usize) -> Self {
        Self {
            q,
            every: every.max(1),
            w: Mat::identity(q),
            r_hat: Mat::identity(q),
            log_c: 0.0,
            log_det: 0.0,
            pending: 0,
            steps: 0,
        }
    }

    pub fn push(&mut self, m: &Mat<T>) {
        self.w = m * &self.w;
        self.log_det += m.det().abs().to_f64_lossy().ln();
        self.pending += 1;
        self.steps += 1;
        if self.pending >= self.every {
            self.refactor();
        }
    }

    fn refactor(&mut self) {
        let (qm, r) = self.w.qr();
        let r_new = &r * &self.r_hat;
        let s = r_new.max_abs();
        self.r_hat = r_new.scale(T::one() / s);
        self.log_c += s.to_f64_lossy().ln();
        self.w = qm;
        self.pending = 0;
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `log σ_i(P)` in descending order.
    pub fn log_svals(&self) -> Vec<f64> {
        let x = &self.w * &self.r_hat;
        let l1 = self.log_c + x.norm2().to_f64_lossy().ln();
        if self.q == 1 {
            vec![l1]
        } else {
            vec![l1, self.log_det - l1]
        }
    }

    pub fn log_abs_det(&self) -> f64 {
        self.log_det
    }

    /// The product itself (finite only while it fits in `T`).
    pub fn product(&self) -> Mat<T> {
        (&self.w * &self.r_hat).scale(T::lit(self.log_c.exp()))
    }
}

#[derive(Clone, Debug)]
pub struct DerivativeTrace<T: Real> {
    pub matrices: Vec<Mat<T>>,
    /// `log_svals[n-1]` holds `log σ_i(∂Fⁿ)`, descending.
    pub log_svals: Vec<Vec<f64>>,
    pub end: SkewPoint<T>,
    acc: Accumulator<T>,
}

impl<T: Real> DerivativeTrace<T> {
    /// `∂Fⁿ` for the full length.
    pub fn product(&self) -> Mat<T> {
        self.acc.product()
    }

    /// Singular values of `∂Fⁿ` (may overflow for long traces; prefer `log_svals`).
    pub fn product_svals(&self, n: usize) -> Vec<f64> {
        self.log_svals[n - 1].iter().map(|l| l.exp()).collect()
    }
}
