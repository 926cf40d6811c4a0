//! Closed-form diffeomorphisms of the circle and the 2-torus.
//!
//! A diffeomorphism is a tree of generators acting on lifts `ℝ^q → ℝ^q`.
//! Leaves are translations, one-harmonic shears and integer linear maps of
//! determinant one; a formal inverse can wrap any subtree. Evaluation
//! carries the Jacobian along, so value and derivative cost one pass.

use std::sync::Arc;

use thiserror::Error;

use crate::linalg::Mat;
use crate::scalar::{frac, wrap_half, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FiberError {
    #[error("inversion diverged, residual {residual:e}")]
    InversionDiverged { residual: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
}

/// Jacobian on lifts, stored densely; for `q = 1` only `[0][0]` is used.
pub type Jac<T> = [[T; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberPoint<T> {
    pub c: [T; 2],
    pub q: u8,
}

impl<T: Real> FiberPoint<T> {
    pub fn circle(x: T) -> Self {
        Self { c: [frac(x), T::zero()], q: 1 }
    }

    pub fn torus(x: T, y: T) -> Self {
        Self { c: [frac(x), frac(y)], q: 2 }
    }

    pub fn new(q: usize, c: [T; 2]) -> Self {
        if q == 1 {
            Self::circle(c[0])
        } else {
            Self::torus(c[0], c[1])
        }
    }

    pub fn dim(&self) -> usize {
        self.q as usize
    }

    /// Wrapped displacement `other - self`.
    pub fn displacement_to(&self, other: &Self) -> [T; 2] {
        let d0 = wrap_half(other.c[0] - self.c[0]);
        if self.q == 1 {
            [d0, T::zero()]
        } else {
            [d0, wrap_half(other.c[1] - self.c[1])]
        }
    }

    /// Flat metric on `ℝ^q/ℤ^q`.
    pub fn dist(&self, other: &Self) -> T {
        let d = self.displacement_to(other);
        d[0].hypot(d[1])
    }
}

#[derive(Debug)]
pub enum Node<T> {
    Identity,
    Translate([T; 2]),
    /// `x ↦ x + (a/2π)·sin(2π⟨k,x⟩)·e_j`
    Shear { a: T, k: [i64; 2], j: usize },
    Linear([[i64; 2]; 2]),
    Inverse(Arc<Node<T>>),
    /// Applied in order: `parts[0]` first.
    Chain(Vec<Arc<Node<T>>>),
}

#[derive(Clone, Debug)]
pub struct FiberDiffeo<T> {
    q: usize,
    root: Arc<Node<T>>,
    linear: [[i64; 2]; 2],
}

// Saturates; see `linear_exact`.
fn imul(a: [[i64; 2]; 2], b: [[i64; 2]; 2]) -> [[i64; 2]; 2] {
    let e = |i: usize, j: usize| a[i][0].saturating_mul(b[0][j]).saturating_add(a[i][1].saturating_mul(b[1][j]));
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

const LIFT_EXACT: i64 = 1 << 52;

fn iinv(a: [[i64; 2]; 2]) -> [[i64; 2]; 2] {
    // det = 1
    [[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]]
}

const ID2: [[i64; 2]; 2] = [[1, 0], [0, 1]];

fn jmul<T: Real>(a: &Jac<T>, b: &Jac<T>) -> Jac<T> {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn jinv<T: Real>(a: &Jac<T>, q: usize) -> Jac<T> {
    if q == 1 {
        return [[T::one() / a[0][0], T::zero()], [T::zero(), T::one()]];
    }
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

fn jid<T: Real>() -> Jac<T> {
    [[T::one(), T::zero()], [T::zero(), T::one()]]
}

fn to_t<T: Real>(k: i64) -> T {
    T::lit(k as f64)
}

impl<T: Real> Node<T> {
    fn lift_jac(&self, x: [T; 2], q: usize) -> Result<([T; 2], Jac<T>), FiberError> {
        match self {
            Node::Identity => Ok((x, jid())),
            Node::Translate(v) => Ok(([x[0] + v[0], x[1] + v[1]], jid())),
            Node::Shear { a, k, j } => {
                let (kt0, kt1) = (to_t::<T>(k[0]), to_t::<T>(k[1]));
                let s = kt0 * x[0] + kt1 * x[1];
                let ang = T::two_pi() * s;
                let mut y = x;
                y[*j] = y[*j] + *a / T::two_pi() * ang.sin();
                let c = *a * ang.cos();
                let mut jac = jid();
                jac[*j][0] = jac[*j][0] + c * kt0;
                if q == 2 {
                    jac[*j][1] = jac[*j][1] + c * kt1;
                }
                Ok((y, jac))
            }
            Node::Linear(m) => {
                let mt = m.map(|r| r.map(to_t::<T>));
                Ok(([mt[0][0] * x[0] + mt[0][1] * x[1], mt[1][0] * x[0] + mt[1][1] * x[1]], mt))
            }
            Node::Inverse(inner) => {
                let pre = match &**inner {
                    Node::Chain(_) | Node::Inverse(_) => newton_preimage(inner, x, q)?,
                    leaf => leaf.solve_lift(x, q)?,
                };
                let (_, jf) = inner.lift_jac(pre, q)?;
                Ok((pre, jinv(&jf, q)))
            }
            Node::Chain(parts) => {
                let mut y = x;
                let mut jac = jid();
                for p in parts {
                    let (y2, j2) = p.lift_jac(y, q)?;
                    y = y2;
                    jac = jmul(&j2, &jac);
                }
                Ok((y, jac))
            }
        }
    }

    fn linear_part(&self) -> [[i64; 2]; 2] {
        match self {
            Node::Identity | Node::Translate(_) | Node::Shear { .. } => ID2,
            Node::Linear(m) => *m,
            Node::Inverse(inner) => iinv(inner.linear_part()),
            Node::Chain(parts) => parts.iter().fold(ID2, |acc, p| imul(p.linear_part(), acc)),
        }
    }

    /// Solve `self(x) = y` on lifts.
    /// Value of the lift without the Jacobian.
    fn eval_lift(&self, x: [T; 2], q: usize) -> Result<[T; 2], FiberError> {
        match self {
            Node::Identity => Ok(x),
            Node::Translate(v) => Ok([x[0] + v[0], x[1] + v[1]]),
            Node::Shear { a, k, j } => {
                let s = to_t::<T>(k[0]) * x[0] + to_t::<T>(k[1]) * x[1];
                let mut y = x;
                y[*j] = y[*j] + *a / T::two_pi() * (T::two_pi() * s).sin();
                Ok(y)
            }
            Node::Linear(_) => Ok(self.lift_jac(x, q)?.0),
            Node::Inverse(inner) => match &**inner {
                Node::Chain(_) | Node::Inverse(_) => newton_preimage(inner, x, q),
                leaf => leaf.solve_lift(x, q),
            },
            Node::Chain(parts) => {
                let mut y = x;
                for p in parts {
                    y = p.eval_lift(y, q)?;
                }
                Ok(y)
            }
        }
    }

    fn solve_lift(&self, y: [T; 2], q: usize) -> Result<[T; 2], FiberError> {
        match self {
            Node::Identity => Ok(y),
            Node::Translate(v) => Ok([y[0] - v[0], y[1] - v[1]]),
            Node::Linear(m) => {
                let mi = iinv(*m).map(|r| r.map(to_t::<T>));
                Ok([mi[0][0] * y[0] + mi[0][1] * y[1], mi[1][0] * y[0] + mi[1][1] * y[1]])
            }
            Node::Shear { a, k, j } => shear_inverse(*a, *k, *j, y),
            Node::Inverse(inner) => inner.eval_lift(y, q),
            Node::Chain(parts) => {
                let mut x = y;
                for p in parts.iter().rev() {
                    x = p.solve_lift(x, q)?;
                }
                Ok(x)
            }
        }
    }

    fn size(&self) -> usize {
        match self {
            Node::Inverse(inner) => 1 + inner.size(),
            Node::Chain(parts) => 1 + parts.iter().map(|p| p.size()).sum::<usize>(),
            _ => 1,
        }
    }
}

/// Preimage under a composite lift: guarded Newton with bisection on the
/// monotone lift for `q = 1`, damped Newton for `q = 2`.
fn newton_preimage<T: Real>(f: &Node<T>, y: [T; 2], q: usize) -> Result<[T; 2], FiberError> {
    let tol = T::solver_tol() * (T::one() + y[0].abs() + y[1].abs());
    let resid = |x: [T; 2]| -> Result<([T; 2], Jac<T>, T), FiberError> {
        let (fx, j) = f.lift_jac(x, q)?;
        let r = [fx[0] - y[0], if q == 1 { T::zero() } else { fx[1] - y[1] }];
        Ok((r, j, r[0].hypot(r[1])))
    };
    if q == 1 {
        // F(x) - x is 1-periodic, so a bracket is found by unit steps
        let x0 = y[0] - (f.lift_jac([y[0], T::zero()], q)?.0[0] - y[0]);
        let (mut lo, mut hi) = (x0, x0);
        while resid([lo, T::zero()])?.0[0] > T::zero() {
            lo = lo - T::one();
        }
        while resid([hi, T::zero()])?.0[0] < T::zero() {
            hi = hi + T::one();
        }
        let mut x = (lo + hi) / T::lit(2.0);
        for _ in 0..200 {
            let (r, j, n) = resid([x, T::zero()])?;
            if n <= tol / T::lit(64.0) {
                return Ok([x, T::zero()]);
            }
            if r[0] > T::zero() {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = x - r[0] / j[0][0];
            if !(next > lo && next < hi) {
                next = (lo + hi) / T::lit(2.0);
            }
            if next == x {
                break;
            }
            x = next;
        }
        let n = resid([x, T::zero()])?.2;
        return if n <= tol {
            Ok([x, T::zero()])
        } else {
            Err(FiberError::InversionDiverged { residual: n.to_f64_lossy() })
        };
    }
    let li = iinv(f.linear_part()).map(|r| r.map(to_t::<T>));
    let mut x = [li[0][0] * y[0] + li[0][1] * y[1], li[1][0] * y[0] + li[1][1] * y[1]];
    let (mut r, mut j, mut n) = resid(x)?;
    for _ in 0..100 {
        if n <= tol / T::lit(64.0) {
            return Ok(x);
        }
        let ji = jinv(&j, 2);
        let d = [ji[0][0] * r[0] + ji[0][1] * r[1], ji[1][0] * r[0] + ji[1][1] * r[1]];
        let mut lam = T::one();
        let mut accepted = false;
        for _ in 0..30 {
            let cand = [x[0] - lam * d[0], x[1] - lam * d[1]];
            let (r2, j2, n2) = resid(cand)?;
            if n2 < n {
                (x, r, j, n) = (cand, r2, j2, n2);
                accepted = true;
                break;
            }
            lam = lam / T::lit(2.0);
        }
        if !accepted {
            break;
        }
    }
    if n <= tol {
        Ok(x)
    } else {
        Err(FiberError::InversionDiverged { residual: n.to_f64_lossy() })
    }
}

/// Invert the shear through the scalar equation `s + c·sin(2πs) = ⟨k,y⟩`
/// with `c = k_j·a/2π`, which is strictly monotone when `|k_j a| < 1`.
fn shear_inverse<T: Real>(a: T, k: [i64; 2], j: usize, y: [T; 2]) -> Result<[T; 2], FiberError> {
    let (kt0, kt1) = (to_t::<T>(k[0]), to_t::<T>(k[1]));
    let t = kt0 * y[0] + kt1 * y[1];
    let c = to_t::<T>(k[j]) * a / T::two_pi();
    let s = if c == T::zero() { t } else { monotone_solve(t, c)? };
    let mut x = y;
    x[j] = x[j] - a / T::two_pi() * (T::two_pi() * s).sin();
    Ok(x)
}

/// Root of `h(s) = s + c sin(2πs) - t` by Newton, falling back to bisection
/// on the bracket `[t - |c|, t + |c|]`.
fn monotone_solve<T: Real>(t: T, c: T) -> Result<T, FiberError> {
    let tp = T::two_pi();
    let h = |s: T| s + c * (tp * s).sin() - t;
    let (mut lo, mut hi) = (t - c.abs(), t + c.abs());
    let tol = T::solver_tol() * (T::one() + t.abs());
    let mut s = t;
    for _ in 0..200 {
        let r = h(s);
        if r.abs() <= tol / T::lit(64.0) {
            return Ok(s);
        }
        if r > T::zero() {
            hi = hi.min(s);
        } else {
            lo = lo.max(s);
        }
        let dh = T::one() + c * tp * (tp * s).cos();
        let mut next = s - r / dh;
        if !(next > lo && next < hi) {
            next = (lo + hi) / T::lit(2.0);
        }
        if next == s {
            break;
        }
        s = next;
    }
    let r = h(s).abs();
    if r <= tol {
        Ok(s)
    } else {
        Err(FiberError::InversionDiverged { residual: r.to_f64_lossy() })
    }
}

impl<T: Real> FiberDiffeo<T> {
    fn from_node(q: usize, node: Node<T>) -> Self {
        let root = Arc::new(node);
        let linear = root.linear_part();
        Self { q, root, linear }
    }

    pub fn identity(q: usize) -> Self {
        assert!(q == 1 || q == 2, "fiber dimension must be 1 or 2");
        Self::from_node(q, Node::Identity)
    }

    /// Rigid rotation `x ↦ x + a` of the circle.
    pub fn rotation(a: T) -> Self {
        Self::from_node(1, Node::Translate([a, T::zero()]))
    }

    pub fn translation(v: [T; 2]) -> Self {
        Self::from_node(2, Node::Translate(v))
    }

    /// `x ↦ x + (a/2π) sin(2πx)` on the circle.
    pub fn circle_shear(a: T) -> Result<Self, FiberError> {
        Self::shear(1, a, [1, 0], 0)
    }

    /// `x ↦ x + (a/2π) sin(2π⟨k,x⟩) e_j`.
    pub fn shear(q: usize, a: T, k: [i64; 2], j: usize) -> Result<Self, FiberError> {
        if !(a.abs() < T::one()) {
            return Err(FiberError::InvalidGenerator(format!("shear amplitude must satisfy |a| < 1, got {a}")));
        }
        if j >= q || (q == 1 && k != [1, 0] && k[1] != 0) || k == [0, 0] {
            return Err(FiberError::InvalidGenerator(format!("bad shear wave vector {k:?} / direction {j}")));
        }
        if !((a * to_t::<T>(k[j])).abs() < T::one()) {
            return Err(FiberError::InvalidGenerator("shear is not a diffeomorphism: |a·k_j| >= 1".into()));
        }
        let k = if q == 1 { [k[0], 0] } else { k };
        Ok(Self::from_node(q, Node::Shear { a, k, j }))
    }

    pub fn linear(m: [[i64; 2]; 2]) -> Result<Self, FiberError> {
        if m[0][0] * m[1][1] - m[0][1] * m[1][0] != 1 {
            return Err(FiberError::InvalidGenerator(format!("linear part must have det 1, got {m:?}")));
        }
        Ok(Self::from_node(2, Node::Linear(m)))
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.q, other.q, "{}", FiberError::DimMismatch(self.q, other.q));
        let mut parts = Vec::new();
        for d in [other, self] {
            match &*d.root {
                Node::Identity => {}
                Node::Chain(ps) => parts.extend(ps.iter().cloned()),
                _ => parts.push(d.root.clone()),
            }
        }
        let root = match parts.len() {
            0 => Arc::new(Node::Identity),
            1 => parts.pop().expect("one part"),
            _ => Arc::new(Node::Chain(parts)),
        };
        Self { q: self.q, root, linear: imul(self.linear, other.linear) }
    }

    /// Inverse with closed forms pushed to the leaves where they exist.
    pub fn invert(&self) -> Self {
        Self { q: self.q, root: invert_node(&self.root), linear: iinv(self.linear) }
    }

    /// Inverse as a single opaque node, evaluated by damped Newton.
    pub fn formal_inverse(&self) -> Self {
        Self { q: self.q, root: Arc::new(Node::Inverse(self.root.clone())), linear: iinv(self.linear) }
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    /// Action on `π₁`, i.e. `lift(x + m) = lift(x) + L m`.
    pub fn linear_part(&self) -> [[i64; 2]; 2] {
        self.linear
    }

    /// False once the linear part is too large for lifts to keep any
    /// fractional precision in f64.
    pub fn linear_exact(&self) -> bool {
        self.linear.iter().flatten().all(|v| v.abs() < LIFT_EXACT)
    }

    pub fn root(&self) -> &Node<T> {
        &self.root
    }

    /// Value and Jacobian of the lift at a lift point.
    pub fn lift_jac(&self, x: [T; 2]) -> Result<([T; 2], Jac<T>), FiberError> {
        self.root.lift_jac(x, self.q)
    }

    pub fn eval_lift(&self, x: [T; 2]) -> Result<[T; 2], FiberError> {
        self.root.eval_lift(x, self.q)
    }

    pub fn eval(&self, y: &FiberPoint<T>) -> Result<FiberPoint<T>, FiberError> {
        self.check_dim(y)?;
        Ok(FiberPoint::new(self.q, self.eval_lift(y.c)?))
    }

    pub fn deriv(&self, y: &FiberPoint<T>) -> Result<Mat<T>, FiberError> {
        self.check_dim(y)?;
        let (_, j) = self.lift_jac(y.c)?;
        Ok(jac_to_mat(&j, self.q))
    }

    /// Solve `self(x) = y` and return `x` (with the residual checked).
    pub fn preimage(&self, y: &FiberPoint<T>) -> Result<FiberPoint<T>, FiberError> {
        self.check_dim(y)?;
        Ok(FiberPoint::new(self.q, self.root.solve_lift(y.c, self.q)?))
    }

    fn check_dim(&self, y: &FiberPoint<T>) -> Result<(), FiberError> {
        if y.dim() != self.q {
            return Err(FiberError::DimMismatch(self.q, y.dim()));
        }
        Ok(())
    }

    /// Minimum Jacobian determinant over an `n^q` grid.
    pub fn min_jacobian_det(&self, n: usize) -> Result<T, FiberError> {
        let mut m = T::infinity();
        for p in grid_points::<T>(self.q, n) {
            let (_, j) = self.lift_jac(p.c)?;
            let d = if self.q == 1 { j[0][0] } else { j[0][0] * j[1][1] - j[0][1] * j[1][0] };
            m = m.min(d);
        }
        Ok(m)
    }

    pub fn cast<U: Real>(&self) -> FiberDiffeo<U> {
        FiberDiffeo { q: self.q, root: Arc::new(cast_node(&self.root)), linear: self.linear }
    }
}

fn cast_node<T: Real, U: Real>(n: &Node<T>) -> Node<U> {
    let c = |x: T| U::lit(x.to_f64_lossy());
    match n {
        Node::Identity => Node::Identity,
        Node::Translate(v) => Node::Translate([c(v[0]), c(v[1])]),
        Node::Shear { a, k, j } => Node::Shear { a: c(*a), k: *k, j: *j },
        Node::Linear(m) => Node::Linear(*m),
        Node::Inverse(inner) => Node::Inverse(Arc::new(cast_node(inner))),
        Node::Chain(ps) => Node::Chain(ps.iter().map(|p| Arc::new(cast_node(p))).collect()),
    }
}

fn invert_node<T: Real>(n: &Arc<Node<T>>) -> Arc<Node<T>> {
    match &**n {
        Node::Identity => n.clone(),
        Node::Translate(v) => Arc::new(Node::Translate([-v[0], -v[1]])),
        Node::Linear(m) => Arc::new(Node::Linear(iinv(*m))),
        Node::Inverse(inner) => inner.clone(),
        Node::Shear { .. } => Arc::new(Node::Inverse(n.clone())),
        Node::Chain(ps) => Arc::new(Node::Chain(ps.iter().rev().map(invert_node).collect())),
    }
}

pub fn jac_to_mat<T: Real>(j: &Jac<T>, q: usize) -> Mat<T> {
    if q == 1 {
        Mat::from_rows(&[vec![j[0][0]]])
    } else {
        Mat::from_rows(&[vec![j[0][0], j[0][1]], vec![j[1][0], j[1][1]]])
    }
}

/// Uniform grid of `n^q` cell-corner points.
pub fn grid_points<T: Real>(q: usize, n: usize) -> Vec<FiberPoint<T>> {
    let h = |i: usize| T::lit(i as f64 / n as f64);
    if q == 1 {
        (0..n).map(|i| FiberPoint::circle(h(i))).collect()
    } else {
        (0..n).flat_map(|i| (0..n).map(move |j| FiberPoint::torus(h(i), h(j)))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_shear_closed_forms() {
        let id = FiberDiffeo::<f64>::identity(1);
        let y = FiberPoint::circle(0.3);
        assert_eq!(id.eval(&y).unwrap(), y);
        assert_eq!(id.deriv(&y).unwrap()[(0, 0)], 1.0);
        let g = FiberDiffeo::circle_shear(0.5).unwrap();
        assert_eq!(g.eval(&FiberPoint::circle(0.0)).unwrap().c[0], 0.0);
        assert_eq!(g.deriv(&FiberPoint::circle(0.0)).unwrap()[(0, 0)], 1.5);
    }

    #[test]
    fn shear_inverse_residual() {
        let g = FiberDiffeo::circle_shear(0.5).unwrap();
        let gi = g.invert();
        let y = FiberPoint::circle(0.25);
        let back = g.eval(&gi.eval(&y).unwrap()).unwrap();
        assert!(back.dist(&y) <= 1e-12);
        let gf = g.formal_inverse();
        assert!(g.eval(&gf.eval(&y).unwrap()).unwrap().dist(&y) <= 1e-12);
        // composite subtrees go through the Newton solvers
        let h = g.compose(&FiberDiffeo::rotation(0.3)).compose(&g);
        let hf = h.formal_inverse();
        assert!(h.eval(&hf.eval(&y).unwrap()).unwrap().dist(&y) <= 1e-12);
        let t = FiberDiffeo::shear(2, 0.4, [1, 2], 0)
            .unwrap()
            .compose(&FiberDiffeo::linear([[2, 1], [1, 1]]).unwrap())
            .compose(&FiberDiffeo::shear(2, 0.7, [1, 0], 1).unwrap());
        let tf = t.formal_inverse();
        let z = FiberPoint::torus(0.8, 0.35);
        assert!(t.eval(&tf.eval(&z).unwrap()).unwrap().dist(&z) <= 1e-12);
    }

    #[test]
    fn rejects_invalid_generators() {
        assert!(FiberDiffeo::<f64>::circle_shear(1.0).is_err());
        assert!(FiberDiffeo::<f64>::shear(2, 0.6, [2, 0], 0).is_err());
        assert!(FiberDiffeo::<f64>::shear(2, 0.9, [0, 3], 0).is_ok());
        assert!(FiberDiffeo::<f64>::linear([[0, 1], [1, 0]]).is_err());
    }

    #[test]
    fn linear_part_tracks_composition() {
        let l = FiberDiffeo::<f64>::linear([[2, 1], [1, 1]]).unwrap();
        let s = FiberDiffeo::shear(2, 0.3, [1, 1], 1).unwrap();
        let g = s.compose(&l).compose(&s);
        assert_eq!(g.linear_part(), [[2, 1], [1, 1]]);
        assert_eq!(g.invert().linear_part(), [[1, -1], [-1, 2]]);
        let x = [0.1, 0.7];
        let shifted = g.eval_lift([x[0] + 1.0, x[1]]).unwrap();
        let base = g.eval_lift(x).unwrap();
        assert!((shifted[0] - base[0] - 2.0).abs() < 1e-12 && (shifted[1] - base[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f32_evaluation() {
        let g = FiberDiffeo::<f32>::circle_shear(0.5).unwrap();
        let y = FiberPoint::circle(0.25f32);
        let back = g.eval(&g.invert().eval(&y).unwrap()).unwrap();
        assert!(back.dist(&y) < 1e-5);
    }
}
