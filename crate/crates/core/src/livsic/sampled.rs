//! Fiber maps stored as grid samples of their lift, `u(y) = L y + d(y)` with
//! `d` periodic, evaluated by tensor Lagrange interpolation.

use crate::fiber::{FiberDiffeo, FiberError, Jac};
use crate::scalar::Real;

/// Points per dimension in the interpolation stencil.
pub const STENCIL: usize = 6;
const HALF: isize = STENCIL as isize / 2;

/// Lagrange weights and their derivatives at offset `t ∈ [0, 1)` for the
/// nodes `1 − HALF, …, HALF`.
fn weights<T: Real>(t: T) -> ([T; STENCIL], [T; STENCIL]) {
    let node = |a: usize| T::lit((a as isize + 1 - HALF) as f64);
    let mut w = [T::zero(); STENCIL];
    let mut dw = [T::zero(); STENCIL];
    for a in 0..STENCIL {
        let mut denom = T::one();
        let mut prod = T::one();
        let mut dprod = T::zero();
        for b in 0..STENCIL {
            if b == a {
                continue;
            }
            denom = denom * (node(a) - node(b));
            dprod = dprod * (t - node(b)) + prod;
            prod = prod * (t - node(b));
        }
        w[a] = prod / denom;
        dw[a] = dprod / denom;
    }
    (w, dw)
}

fn lin<T: Real>(m: [[i64; 2]; 2], y: [T; 2]) -> [T; 2] {
    let f = |k: i64| T::lit(k as f64);
    [f(m[0][0]) * y[0] + f(m[0][1]) * y[1], f(m[1][0]) * y[0] + f(m[1][1]) * y[1]]
}

fn inv_jac<T: Real>(j: &Jac<T>, q: usize) -> Option<Jac<T>> {
    if q == 1 {
        return (j[0][0] != T::zero()).then(|| [[T::one() / j[0][0], T::zero()], [T::zero(), T::one()]]);
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    (det != T::zero()).then(|| [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]])
}

/// Grid samples of one lift.
#[derive(Clone, Debug)]
pub struct SampledMap<T> {
    q: usize,
    n: usize,
    linear: [[i64; 2]; 2],
    /// `d` at node `i` (circle) or `(i, j)` at `(i·n + j)·2` (torus).
    disp: Vec<T>,
}

impl<T: Real> SampledMap<T> {
    /// Nodes `k/n` per dimension.
    pub fn nodes(q: usize, n: usize) -> Vec<[T; 2]> {
        let h = |i: usize| T::lit(i as f64 / n as f64);
        if q == 1 {
            (0..n).map(|i| [h(i), T::zero()]).collect()
        } else {
            (0..n).flat_map(|i| (0..n).map(move |j| [h(i), h(j)])).collect()
        }
    }

    /// From lift values at [`SampledMap::nodes`].
    pub fn from_values(q: usize, n: usize, linear: [[i64; 2]; 2], values: &[[T; 2]]) -> Self {
        let nodes = Self::nodes(q, n);
        assert_eq!(nodes.len(), values.len(), "one value per node");
        let mut disp = Vec::with_capacity(values.len() * q);
        for (y, v) in nodes.iter().zip(values) {
            let ly = lin(linear, *y);
            disp.extend((0..q).map(|c| v[c] - ly[c]));
        }
        Self { q, n, linear, disp }
    }

    pub fn identity(q: usize, n: usize) -> Self {
        Self { q, n, linear: [[1, 0], [0, 1]], disp: vec![T::zero(); n.pow(q as u32) * q] }
    }

    /// Samples of an exact map.
    pub fn from_diffeo(g: &FiberDiffeo<T>, n: usize) -> Result<Self, FiberError> {
        let q = g.dim();
        let vals = Self::nodes(q, n).into_iter().map(|y| g.eval_lift(y)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_values(q, n, g.linear_part(), &vals))
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    pub fn grid(&self) -> usize {
        self.n
    }

    pub fn linear_part(&self) -> [[i64; 2]; 2] {
        self.linear
    }

    /// Lift value at node `k` in [`SampledMap::nodes`] order.
    pub fn node_value(&self, k: usize) -> [T; 2] {
        let y = Self::nodes(self.q, self.n)[k];
        let ly = lin(self.linear, y);
        let mut v = ly;
        for c in 0..self.q {
            v[c] = ly[c] + self.disp[k * self.q + c];
        }
        v
    }

    fn d_at(&self, i: isize, j: isize, c: usize) -> T {
        let n = self.n as isize;
        let (i, j) = (i.rem_euclid(n) as usize, j.rem_euclid(n) as usize);
        let k = if self.q == 1 { i } else { i * self.n + j };
        self.disp[k * self.q + c]
    }

    pub fn lift_jac(&self, y: [T; 2]) -> ([T; 2], Jac<T>) {
        let nf = T::lit(self.n as f64);
        let locate = |v: T| {
            let s = v * nf;
            let f = s.floor();
            (f.to_i64().unwrap_or(0) as isize, s - f)
        };
        let (i0, t0) = locate(y[0]);
        let (w0, dw0) = weights(t0);
        let mut out = lin(self.linear, y);
        let lt = self.linear.map(|r| r.map(|k| T::lit(k as f64)));
        let mut jac: Jac<T> = if self.q == 1 { [[lt[0][0], T::zero()], [T::zero(), T::one()]] } else { lt };
        if self.q == 1 {
            let (mut v, mut dv) = (T::zero(), T::zero());
            for a in 0..STENCIL {
                let d = self.d_at(i0 + a as isize + 1 - HALF, 0, 0);
                v = v + w0[a] * d;
                dv = dv + dw0[a] * d;
            }
            out[0] = out[0] + v;
            jac[0][0] = jac[0][0] + dv * nf;
            return (out, jac);
        }
        let (i1, t1) = locate(y[1]);
        let (w1, dw1) = weights(t1);
        for c in 0..2 {
            let (mut v, mut dx, mut dy) = (T::zero(), T::zero(), T::zero());
            for a in 0..STENCIL {
                for b in 0..STENCIL {
                    let d = self.d_at(i0 + a as isize + 1 - HALF, i1 + b as isize + 1 - HALF, c);
                    v = v + w0[a] * w1[b] * d;
                    dx = dx + dw0[a] * w1[b] * d;
                    dy = dy + w0[a] * dw1[b] * d;
                }
            }
            out[c] = out[c] + v;
            jac[c][0] = jac[c][0] + dx * nf;
            jac[c][1] = jac[c][1] + dy * nf;
        }
        (out, jac)
    }

    /// Damped Newton for `u(y) = w`, started at `L⁻¹w`.
    pub fn solve_lift(&self, w: [T; 2]) -> Result<[T; 2], FiberError> {
        let q = self.q;
        let l = self.linear;
        let li = [[l[1][1], -l[0][1]], [-l[1][0], l[0][0]]];
        let mut y = if q == 1 { w } else { lin(li, w) };
        let norm = |r: [T; 2]| if q == 1 { r[0].abs() } else { r[0].hypot(r[1]) };
        let tol = T::solver_tol() * (T::one() + norm(w));
        let resid = |y: [T; 2]| {
            let (v, j) = self.lift_jac(y);
            ([v[0] - w[0], if q == 1 { T::zero() } else { v[1] - w[1] }], j)
        };
        let (mut r, mut j) = resid(y);
        for _ in 0..100 {
            if norm(r) <= tol {
                return Ok(y);
            }
            let ji = inv_jac(&j, q).ok_or(FiberError::InversionDiverged { residual: norm(r).to_f64_lossy() })?;
            let step = [ji[0][0] * r[0] + ji[0][1] * r[1], ji[1][0] * r[0] + ji[1][1] * r[1]];
            let mut lambda = T::one();
            loop {
                let cand = [y[0] - lambda * step[0], if q == 1 { T::zero() } else { y[1] - lambda * step[1] }];
                let (r2, j2) = resid(cand);
                if norm(r2) < norm(r) || lambda < T::lit(1e-4) {
                    y = cand;
                    r = r2;
                    j = j2;
                    break;
                }
                lambda = lambda / T::lit(2.0);
            }
        }
        if norm(r) <= tol * T::lit(64.0) {
            Ok(y)
        } else {
            Err(FiberError::InversionDiverged { residual: norm(r).to_f64_lossy() })
        }
    }

    /// `max_k |d_a(y_k) − d_b(y_k)|`, `None` for different linear parts.
    pub fn node_distance(&self, other: &Self) -> Option<f64> {
        if self.linear != other.linear || self.n != other.n || self.q != other.q {
            return None;
        }
        let mut m = 0.0f64;
        for k in 0..self.disp.len() / self.q {
            let mut s = T::zero();
            for c in 0..self.q {
                let d = crate::scalar::wrap_half(self.disp[k * self.q + c] - other.disp[k * self.q + c]);
                s = s + d * d;
            }
            m = m.max(s.sqrt().to_f64_lossy());
        }
        Some(m)
    }
}
