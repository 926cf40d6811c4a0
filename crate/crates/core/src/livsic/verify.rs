use rand::Rng;
use serde::Serialize;

use super::transfer::{TransferFunction, TransferMap};
use crate::base::BasePoint;
use crate::cocycle::Cocycle;
use crate::fiber::{grid_points, FiberDiffeo, FiberError, FiberPoint, Jac};
use crate::scalar::Real;

/// Residual of `A(x) = u(fx) ∘ u(x)⁻¹` over sampled base points.
#[derive(Clone, Debug, Serialize)]
pub struct CoboundaryResidual {
    pub c0: f64,
    pub c1: f64,
    pub test_points: usize,
    /// Features of the worst base point.
    pub worst_point: [f64; 2],
    pub worst_gap: f64,
    pub fiber_grid: usize,
}

fn op_norm<T: Real>(m: &Jac<T>, q: usize) -> f64 {
    if q == 1 {
        return m[0][0].abs().to_f64_lossy();
    }
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    (((a + d).hypot(c - b) + (a - d).hypot(c + b)) / T::lit(2.0)).to_f64_lossy()
}

fn sub<T: Real>(a: &Jac<T>, b: &Jac<T>) -> Jac<T> {
    let mut r = *a;
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][j] - b[i][j];
        }
    }
    r
}

fn inv<T: Real>(j: &Jac<T>, q: usize) -> Jac<T> {
    if q == 1 {
        return [[T::one() / j[0][0], T::zero()], [T::zero(), T::one()]];
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]]
}

/// `(d_C⁰, d_C¹)` between `g` and `v ∘ w⁻¹` on an `n^q` grid. `d_C⁰` covers
/// the maps and their inverses; `d_C¹` adds the derivative terms.
pub fn pair_distance<T: Real>(
    g: &FiberDiffeo<T>,
    v: &TransferMap<T>,
    w: &TransferMap<T>,
    n: usize,
) -> Result<(f64, f64), FiberError> {
    let q = g.dim();
    let (mut c0, mut d1, mut d1i) = (0.0f64, 0.0f64, 0.0f64);
    let gi = g.invert();
    for p in grid_points::<T>(q, n) {
        let (gy, jg) = g.lift_jac(p.c)?;
        let pre = w.inverse_lift(p.c)?;
        let (_, jw) = w.lift_jac(pre)?;
        let (hy, jv) = v.lift_jac(pre)?;
        let jh = crate::livsic::transfer_jmul(&jv, &inv(&jw, q));
        c0 = c0.max(FiberPoint::new(q, gy).dist(&FiberPoint::new(q, hy)).to_f64_lossy());
        d1 = d1.max(op_norm(&sub(&jg, &jh), q));
        // inverses: g⁻¹(p) against w(v⁻¹(p))
        let gip = gi.eval_lift(p.c)?;
        let hip = w.eval_lift(v.inverse_lift(p.c)?)?;
        c0 = c0.max(FiberPoint::new(q, gip).dist(&FiberPoint::new(q, hip)).to_f64_lossy());
        d1i = d1i.max(op_norm(&sub(&inv(&jg, q), &inv(&jh, q)), q));
    }
    Ok((c0, c0 + d1.max(d1i)))
}

/// `sup_x d(A(x), u(fx)∘u(x)⁻¹)` over `test_points` random base points.
pub fn verify_coboundary<T: Real, R: Rng + ?Sized>(
    u: &TransferFunction<T>,
    c: &Cocycle<T>,
    test_points: usize,
    rng: &mut R,
) -> Result<CoboundaryResidual, FiberError> {
    let base = c.base();
    let pts: Vec<BasePoint> = (0..test_points).map(|_| base.random_point(rng)).collect();
    verify_at(u, c, &pts)
}

/// [`verify_coboundary`] at given base points.
pub fn verify_at<T: Real>(u: &TransferFunction<T>, c: &Cocycle<T>, pts: &[BasePoint]) -> Result<CoboundaryResidual, FiberError> {
    let base = c.base();
    let q = c.dim();
    let n = if q == 1 { 64 } else { 16 };
    let mut out = CoboundaryResidual { c0: 0.0, c1: 0.0, test_points: pts.len(), worst_point: [0.0; 2], worst_gap: 0.0, fiber_grid: n };
    for x in pts {
        let fx = base.step(x);
        let g = c.at_with_next(x, &fx);
        let (ux, lx) = u.at_traced(x);
        let (ufx, lfx) = u.at_traced(&fx);
        let (c0, c1) = pair_distance(&g, &ufx, &ux, n)?;
        if c1 > out.c1 {
            out.worst_point = base.features(x);
            out.worst_gap = lx.gap.max(lfx.gap);
        }
        out.c0 = out.c0.max(c0);
        out.c1 = out.c1.max(c1);
    }
    Ok(out)
}
