//! Grid-sampled `C⁰`, `C¹` and `C^{1+β}` distances between fiber maps.
//!
//! The flat fiber has one global chart, so `D(g∘h⁻¹)` at `w = h(y)` is
//! `Dg(y)·Dh(y)⁻¹` and no inversion is needed. The derivative terms are
//! measured as deviation from the identity, so that `g = h` gives 0.

use serde::Serialize;

use super::diffeo::{grid_points, FiberDiffeo, FiberError, FiberPoint, Jac};
use crate::scalar::Real;

/// Chart-compatibility radius: beyond it the `+1` fallback applies.
pub const NEAR_RADIUS: f64 = 0.25;
/// Pairs farther apart than this are skipped by the Hölder seminorm.
pub const HOLDER_PAIR_RADIUS: f64 = 0.25;
/// Per-dimension cap on the grid used for the seminorm on the 2-torus.
pub const SEMINORM_SUBGRID_2D: usize = 48;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiffeoDistanceReport {
    pub d_c0: f64,
    pub d_c1: f64,
    pub d_c1beta: f64,
    pub grid: usize,
    pub beta: f64,
    /// `false` when the `+1` fallback was used.
    pub near: bool,
}

fn op_norm<T: Real>(m: &Jac<T>, q: usize) -> T {
    if q == 1 {
        return m[0][0].abs();
    }
    // largest singular value of a 2×2 matrix in closed form
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let s1 = (a + d).hypot(c - b);
    let s2 = (a - d).hypot(c + b);
    (s1 + s2) / T::lit(2.0)
}

fn rel_jac<T: Real>(g: &FiberDiffeo<T>, h: &FiberDiffeo<T>, y: [T; 2]) -> Result<([T; 2], [T; 2], Jac<T>, Jac<T>), FiberError> {
    let q = g.dim();
    let (gy, jg) = g.lift_jac(y)?;
    let (hy, jh) = h.lift_jac(y)?;
    // a·adj(b)/det(b), which is exactly I when a = b
    let rel = |a: &Jac<T>, b: &Jac<T>| -> Jac<T> {
        if q == 1 {
            return [[a[0][0] / b[0][0], T::zero()], [T::zero(), T::one()]];
        }
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        let adj = [[b[1][1], -b[0][1]], [-b[1][0], b[0][0]]];
        [
            [(a[0][0] * adj[0][0] + a[0][1] * adj[1][0]) / det, (a[0][0] * adj[0][1] + a[0][1] * adj[1][1]) / det],
            [(a[1][0] * adj[0][0] + a[1][1] * adj[1][0]) / det, (a[1][0] * adj[0][1] + a[1][1] * adj[1][1]) / det],
        ]
    };
    Ok((gy, hy, rel(&jg, &jh), rel(&jh, &jg)))
}

fn minus_id<T: Real>(m: &Jac<T>, q: usize) -> Jac<T> {
    let mut r = *m;
    r[0][0] = r[0][0] - T::one();
    if q == 2 {
        r[1][1] = r[1][1] - T::one();
    }
    r
}

/// `max_y d_N(g y, h y)` over an `n^q` grid.
pub fn distance_c0<T: Real>(g: &FiberDiffeo<T>, h: &FiberDiffeo<T>, n: usize) -> Result<f64, FiberError> {
    if g.dim() != h.dim() {
        return Err(FiberError::DimMismatch(g.dim(), h.dim()));
    }
    let q = g.dim();
    let mut m = 0.0f64;
    for p in grid_points::<T>(q, n) {
        let gy = FiberPoint::new(q, g.eval_lift(p.c)?);
        let hy = FiberPoint::new(q, h.eval_lift(p.c)?);
        m = m.max(gy.dist(&hy).to_f64_lossy());
    }
    Ok(m)
}

/// Largest `‖F(w_i) − F(w_j)‖ / |w_i − w_j|^β` over pairs closer than
/// [`HOLDER_PAIR_RADIUS`].
fn holder_seminorm<T: Real>(pts: &[FiberPoint<T>], field: &[Jac<T>], q: usize, beta: f64) -> f64 {
    let mut best = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = pts[i].dist(&pts[j]).to_f64_lossy();
            if d <= 0.0 || d > HOLDER_PAIR_RADIUS {
                continue;
            }
            let mut diff = field[i];
            for (r, row) in diff.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    *v = *v - field[j][r][c];
                }
            }
            let ratio = op_norm(&diff, q).to_f64_lossy() / d.powf(beta);
            best = best.max(ratio);
        }
    }
    best
}

/// `(d_c0, d_c1)` on an `n^q` grid, without the Hölder term.
pub fn distance_c1<T: Real>(g: &FiberDiffeo<T>, h: &FiberDiffeo<T>, n: usize) -> Result<(f64, f64), FiberError> {
    if g.dim() != h.dim() {
        return Err(FiberError::DimMismatch(g.dim(), h.dim()));
    }
    let q = g.dim();
    let mut d_c0 = 0.0f64;
    let (mut t1, mut t2) = (0.0f64, 0.0f64);
    for p in grid_points::<T>(q, n) {
        let (gy, hy, a, b) = rel_jac(g, h, p.c)?;
        d_c0 = d_c0.max(FiberPoint::new(q, gy).dist(&FiberPoint::new(q, hy)).to_f64_lossy());
        t1 = t1.max(op_norm(&minus_id(&a, q), q).to_f64_lossy());
        t2 = t2.max(op_norm(&minus_id(&b, q), q).to_f64_lossy());
    }
    if d_c0 > NEAR_RADIUS {
        return Ok((d_c0, d_c0 + 1.0));
    }
    Ok((d_c0, d_c0 + (t1 + t2)))
}

/// Distances sampled on an `n^q` grid (`n ≥ 16`, `β ∈ (0, 1]`).
pub fn distance<T: Real>(g: &FiberDiffeo<T>, h: &FiberDiffeo<T>, beta: f64, n: usize) -> Result<DiffeoDistanceReport, FiberError> {
    assert!(beta > 0.0 && beta <= 1.0, "beta must lie in (0, 1]");
    assert!(n >= 16, "grid must be at least 16");
    let q = g.dim();
    let (d_c0, d_c1) = distance_c1(g, h, n)?;
    if d_c0 > NEAR_RADIUS {
        return Ok(DiffeoDistanceReport { d_c0, d_c1, d_c1beta: d_c1 + 1.0, grid: n, beta, near: false });
    }
    let sn = if q == 1 { n } else { n.min(SEMINORM_SUBGRID_2D) };
    let (mut p1, mut f1, mut p2, mut f2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for p in grid_points::<T>(q, sn) {
        let (gy, hy, a, b) = rel_jac(g, h, p.c)?;
        p1.push(FiberPoint::new(q, hy));
        f1.push(a);
        p2.push(FiberPoint::new(q, gy));
        f2.push(b);
    }
    let s1 = holder_seminorm(&p1, &f1, q, beta);
    let s2 = holder_seminorm(&p2, &f2, q, beta);
    Ok(DiffeoDistanceReport { d_c0, d_c1, d_c1beta: d_c1 + (s1 + s2), grid: n, beta, near: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_maps_have_zero_distance() {
        let g = FiberDiffeo::<f64>::circle_shear(0.3).unwrap();
        let r = distance(&g, &g, 0.5, 64).unwrap();
        assert_eq!((r.d_c0, r.d_c1, r.d_c1beta), (0.0, 0.0, 0.0));
        let t = FiberDiffeo::<f64>::shear(2, 0.3, [1, 1], 0).unwrap().compose(&FiberDiffeo::linear([[2, 1], [1, 1]]).unwrap());
        let r = distance(&t, &t, 0.5, 32).unwrap();
        assert_eq!((r.d_c0, r.d_c1, r.d_c1beta), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rotation_c0() {
        let g = FiberDiffeo::<f64>::rotation(0.1);
        let id = FiberDiffeo::identity(1);
        let r = distance(&g, &id, 1.0, 64).unwrap();
        assert!((r.d_c0 - 0.1).abs() < 1e-15);
        assert!((r.d_c1 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn far_maps_use_fallback() {
        let g = FiberDiffeo::<f64>::rotation(0.4);
        let id = FiberDiffeo::identity(1);
        let r = distance(&g, &id, 1.0, 32).unwrap();
        assert!(!r.near);
        assert_eq!(r.d_c1, r.d_c0 + 1.0);
        assert_eq!(r.d_c1beta, r.d_c1 + 1.0);
    }

    #[test]
    fn op_norm_closed_form() {
        let m: Jac<f64> = [[3.0, 1.0], [-2.0, 0.5]];
        let mm = crate::linalg::Mat::from_rows(&[vec![3.0, 1.0], vec![-2.0, 0.5]]);
        assert!((op_norm(&m, 2) - mm.norm2()).abs() < 1e-12);
    }
}
