use std::sync::Arc;

use serde::Serialize;

use super::ShadowError;
use crate::linalg::Mat;

/// A C¹ map of `ℝ^q` given by values and Jacobians.
pub trait TangentMap {
    fn dim(&self) -> usize;
    fn eval(&self, v: &[f64]) -> Vec<f64>;
    fn jac(&self, v: &[f64]) -> Mat<f64>;
}

type ValueFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type JacFn = dyn Fn(&[f64]) -> Mat<f64> + Send + Sync;

/// Tangent map from closures.
#[derive(Clone)]
pub struct FnMap {
    pub q: usize,
    f: Arc<ValueFn>,
    df: Arc<JacFn>,
}

impl FnMap {
    pub fn new(
        q: usize,
        f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        df: impl Fn(&[f64]) -> Mat<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { q, f: Arc::new(f), df: Arc::new(df) }
    }

    pub fn linear(m: Mat<f64>) -> Self {
        let m2 = m.clone();
        Self::new(m.rows(), move |v| m.mul_vec(v), move |_| m2.clone())
    }
}

impl std::fmt::Debug for FnMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FnMap(q = {})", self.q)
    }
}

impl TangentMap for FnMap {
    fn dim(&self) -> usize {
        self.q
    }
    fn eval(&self, v: &[f64]) -> Vec<f64> {
        (self.f)(v)
    }
    fn jac(&self, v: &[f64]) -> Mat<f64> {
        (self.df)(v)
    }
}

/// `sup |f − g| + sup ‖Df − Dg‖` over `pts`.
pub fn c1_gap(f: &dyn TangentMap, g: &dyn TangentMap, pts: &[Vec<f64>]) -> f64 {
    let (mut c0, mut c1) = (0.0f64, 0.0f64);
    for p in pts {
        let d: f64 = f.eval(p).iter().zip(g.eval(p)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        c0 = c0.max(d);
        c1 = c1.max((&f.jac(p) - &g.jac(p)).norm2());
    }
    c0 + c1
}

struct Conjugated<'a> {
    a: &'a Mat<f64>,
    b: &'a Mat<f64>,
    f: &'a dyn TangentMap,
}

impl TangentMap for Conjugated<'_> {
    fn dim(&self) -> usize {
        self.b.cols()
    }
    fn eval(&self, v: &[f64]) -> Vec<f64> {
        self.a.mul_vec(&self.f.eval(&self.b.mul_vec(v)))
    }
    fn jac(&self, v: &[f64]) -> Mat<f64> {
        &(self.a * &self.f.jac(&self.b.mul_vec(v))) * self.b
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    /// `d_C¹(g, h)` at the points `B v`.
    pub delta: f64,
    /// `d_C¹(A g B, A h B)` at the points `v`.
    pub gap: f64,
    pub bound: f64,
    pub norm_a: f64,
    pub norm_b: f64,
}

/// Checks `d_C¹(A g B, A h B) < 4ℓ²δ` on `pts`.
pub fn conjugated_gap_check(
    a: &Mat<f64>,
    b: &Mat<f64>,
    g: &dyn TangentMap,
    h: &dyn TangentMap,
    ell: f64,
    eta: f64,
    pts: &[Vec<f64>],
) -> Result<GapReport, ShadowError> {
    if eta.exp() >= 4.0 / 3.0 {
        return Err(ShadowError::Precondition(format!("e^η = {} is not below 4/3", eta.exp())));
    }
    let (na, nb) = (a.norm2(), b.norm2());
    let wide = ell * eta.exp();
    if !((na <= wide && nb <= ell) || (na <= ell && nb <= wide)) {
        return Err(ShadowError::Precondition(format!("norms ‖A‖ = {na}, ‖B‖ = {nb} outside the pattern for ℓ = {ell}")));
    }
    let images: Vec<Vec<f64>> = pts.iter().map(|p| b.mul_vec(p)).collect();
    let delta = c1_gap(g, h, &images);
    let gap = c1_gap(&Conjugated { a, b, f: g }, &Conjugated { a, b, f: h }, pts);
    let bound = 4.0 * ell * ell * delta;
    if !(gap < bound || gap == 0.0) {
        return Err(ShadowError::BoundViolated { measured: gap, bound });
    }
    Ok(GapReport { delta, gap, bound, norm_a: na, norm_b: nb })
}
