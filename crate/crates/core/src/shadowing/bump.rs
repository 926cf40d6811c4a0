use super::gap::TangentMap;
use crate::fiber::{FiberDiffeo, FiberPoint};
use crate::linalg::Mat;
use crate::scalar::Real;

/// Radial profile `ρ_r(s)`: 1 on `[0, r]`, 0 from `2r`, cubic smoothstep between.
pub fn bump(r: f64, s: f64) -> f64 {
    if s <= r {
        1.0
    } else if s >= 2.0 * r {
        0.0
    } else {
        let t = (s - r) / r;
        1.0 - t * t * (3.0 - 2.0 * t)
    }
}

/// `dρ_r/ds`; its maximum modulus is `1.5/r`, at `s = 1.5r`.
pub fn bump_slope(r: f64, s: f64) -> f64 {
    if s <= r || s >= 2.0 * r {
        0.0
    } else {
        let t = (s - r) / r;
        -6.0 * t * (1.0 - t) / r
    }
}

/// `g^r(v) = ρ_r(v)·(exp⁻¹∘g∘exp)(v) + (1 − ρ_r(v))·Dg_y(v)` on the flat chart at `y`.
#[derive(Clone, Debug)]
pub struct Localized {
    g: FiberDiffeo<f64>,
    y: [f64; 2],
    gy: [f64; 2],
    dg: Mat<f64>,
    r: f64,
    q: usize,
}

impl Localized {
    pub fn new<T: Real>(g: &FiberDiffeo<T>, y: &FiberPoint<T>, r: f64) -> Self {
        assert!(r > 0.0 && r < 0.125, "bump radius must lie in (0, 1/8)");
        let g = g.cast::<f64>();
        let y = [y.c[0].to_f64_lossy(), y.c[1].to_f64_lossy()];
        let q = g.dim();
        let (gy, j) = g.lift_jac(y).unwrap_or(([f64::NAN; 2], [[f64::NAN; 2]; 2]));
        Self { dg: crate::fiber::jac_to_mat(&j, q), g, y, gy, r, q }
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn derivative(&self) -> &Mat<f64> {
        &self.dg
    }

    /// `exp⁻¹_{g(y)} ∘ g ∘ exp_y` on lifts, with its Jacobian.
    pub fn nonlinear(&self, v: &[f64]) -> (Vec<f64>, Mat<f64>) {
        let p = [self.y[0] + v[0], self.y[1] + if self.q == 2 { v[1] } else { 0.0 }];
        match self.g.lift_jac(p) {
            Ok((w, j)) => ((0..self.q).map(|i| w[i] - self.gy[i]).collect(), crate::fiber::jac_to_mat(&j, self.q)),
            Err(_) => (vec![f64::NAN; self.q], Mat::from_fn(self.q, self.q, |_, _| f64::NAN)),
        }
    }

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl TangentMap for Localized {
    fn dim(&self) -> usize {
        self.q
    }

    fn eval(&self, v: &[f64]) -> Vec<f64> {
        let s = Self::norm(v);
        if s >= 2.0 * self.r {
            return self.dg.mul_vec(v);
        }
        let (n, _) = self.nonlinear(v);
        if s <= self.r {
            return n;
        }
        let rho = bump(self.r, s);
        let l = self.dg.mul_vec(v);
        n.iter().zip(&l).map(|(a, b)| rho * a + (1.0 - rho) * b).collect()
    }

    fn jac(&self, v: &[f64]) -> Mat<f64> {
        let s = Self::norm(v);
        if s >= 2.0 * self.r {
            return self.dg.clone();
        }
        let (n, dn) = self.nonlinear(v);
        if s <= self.r {
            return dn;
        }
        let rho = bump(self.r, s);
        let drho = bump_slope(self.r, s);
        let l = self.dg.mul_vec(v);
        Mat::from_fn(self.q, self.q, |i, k| rho * dn[(i, k)] + (1.0 - rho) * self.dg[(i, k)] + (n[i] - l[i]) * drho * v[k] / s)
    }
}

/// `d_C¹(g^r, Dg_y)` on an `n^q` grid of `[−2r, 2r]^q`; the maps agree outside.
pub fn localized_gap(loc: &Localized, n: usize) -> f64 {
    let q = loc.dim();
    let h = 4.0 * loc.r / (n - 1) as f64;
    let pts: Vec<Vec<f64>> = if q == 1 {
        (0..n).map(|i| vec![-2.0 * loc.r + i as f64 * h]).collect()
    } else {
        (0..n).flat_map(|i| (0..n).map(move |j| vec![-2.0 * loc.r + i as f64 * h, -2.0 * loc.r + j as f64 * h])).collect()
    };
    super::gap::c1_gap(loc, &LinearMap(loc.dg.clone()), &pts)
}

struct LinearMap(Mat<f64>);

impl TangentMap for LinearMap {
    fn dim(&self) -> usize {
        self.0.rows()
    }
    fn eval(&self, v: &[f64]) -> Vec<f64> {
        self.0.mul_vec(v)
    }
    fn jac(&self, _: &[f64]) -> Mat<f64> {
        self.0.clone()
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_endpoints_and_slope() {
        for r in [0.1, 0.01] {
            assert_eq!(bump(r, 0.0), 1.0);
            assert_eq!(bump(r, 2.0 * r), 0.0);
            let m = (0..=1000).map(|i| bump_slope(r, r + r * i as f64 / 1000.0).abs()).fold(0.0, f64::max);
            assert!((m - 1.5 / r).abs() < 1e-9 / r && m <= 2.0 / r);
        }
    }

    #[test]
    fn linear_maps_are_fixed() {
        let g = FiberDiffeo::<f64>::linear([[2, 1], [1, 1]]).unwrap();
        let loc = Localized::new(&g, &FiberPoint::torus(0.3, 0.7), 0.05);
        assert!(localized_gap(&loc, 21) < 1e-12);
    }
}
