//! Hyperbolic toral automorphisms in exact fixed-point arithmetic.
//!
//! Points are stored as `a / 2^128` per coordinate. Integer matrices act on
//! this grid by wrapping multiplication, so `step` and `inverse_step` are
//! exact bijections and long orbit segments carry no round-off. Periodic
//! points are rationals with odd denominators and are enumerated exactly.

use super::{BaseError, HyperbolicityData};

const TWO_64: f64 = 18_446_744_073_709_551_616.0;
const TWO_128: f64 = TWO_64 * TWO_64;

/// A point of T² on the 2^-128 grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorusPoint(pub [u128; 2]);

impl TorusPoint {
    pub const ORIGIN: TorusPoint = TorusPoint([0, 0]);

    /// Nearest grid point to `(x, y)` reduced mod 1.
    pub fn from_f64(c: [f64; 2]) -> Self {
        Self([to_fixed(c[0]), to_fixed(c[1])])
    }

    pub fn coords(&self) -> [f64; 2] {
        [self.0[0] as f64 / TWO_128, self.0[1] as f64 / TWO_128]
    }

    /// Lift displacement `other - self`, each coordinate in `[-1/2, 1/2)`.
    pub fn displacement_to(&self, other: &TorusPoint) -> [f64; 2] {
        [
            other.0[0].wrapping_sub(self.0[0]) as i128 as f64 / TWO_128,
            other.0[1].wrapping_sub(self.0[1]) as i128 as f64 / TWO_128,
        ]
    }

    /// `self + v` mod 1.
    pub fn translate(&self, v: [f64; 2]) -> Self {
        Self([self.0[0].wrapping_add(offset_fixed(v[0])), self.0[1].wrapping_add(offset_fixed(v[1]))])
    }
}

fn to_fixed(x: f64) -> u128 {
    let f = x - x.floor();
    let scaled = f * TWO_128;
    if scaled >= TWO_128 {
        0
    } else {
        scaled as u128
    }
}

fn offset_fixed(v: f64) -> u128 {
    let f = v - v.round();
    (f * TWO_128) as i128 as u128
}

/// Rational point `num / den` with `0 <= num < den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalPoint {
    pub num: [u64; 2],
    pub den: u64,
}

impl RationalPoint {
    /// Nearest point of the 2^-128 grid (two-stage long division).
    pub fn to_fixed(&self) -> TorusPoint {
        let d = self.den as u128;
        let conv = |n: u64| {
            let n = n as u128;
            let hi = (n << 64) / d;
            let rem = (n << 64) % d;
            let lo = ((rem << 64) + d / 2) / d;
            (hi << 64).wrapping_add(lo)
        };
        TorusPoint([conv(self.num[0]), conv(self.num[1])])
    }
}

#[derive(Clone, Debug)]
pub struct TorusModel {
    matrix: [[i64; 2]; 2],
    inverse: [[i64; 2]; 2],
    mu_u: f64,
    mu_s: f64,
    e_u: [f64; 2],
    e_s: [f64; 2],
    /// rows of `[e_u e_s]⁻¹`
    dual: [[f64; 2]; 2],
    sin_angle: f64,
    hyp: HyperbolicityData,
    closing_c: f64,
}

impl TorusModel {
    pub fn new(matrix: [[i64; 2]; 2]) -> Result<Self, BaseError> {
        let [[a, b], [c, d]] = matrix;
        let det = a * d - b * c;
        let tr = a + d;
        if det.abs() != 1 {
            return Err(BaseError::InvalidModel(format!("det must be ±1, got {det}")));
        }
        if tr.abs() <= 2 {
            return Err(BaseError::InvalidModel(format!("|trace| must exceed 2, got {tr}")));
        }
        let inverse = [[d * det, -b * det], [-c * det, a * det]];
        let (tr, detf) = (tr as f64, det as f64);
        let disc = (tr * tr - 4.0 * detf).sqrt();
        // avoid cancellation for the small root
        let mu_u = (tr + tr.signum() * disc) / 2.0;
        let mu_s = detf / mu_u;
        let e_u = eigvec(matrix, mu_u);
        let e_s = eigvec(matrix, mu_s);
        let cross = e_u[0] * e_s[1] - e_u[1] * e_s[0];
        let dual = [[e_s[1] / cross, -e_s[0] / cross], [-e_u[1] / cross, e_u[0] / cross]];
        let sin_angle = cross.abs();
        let lam = mu_u.abs();
        let epsilon = 0.1_f64.min(0.4 / lam);
        let hyp = HyperbolicityData {
            epsilon,
            delta: epsilon * sin_angle / 2.0,
            k0: 1.0,
            tau: lam.ln(),
            nu_s_max: mu_s.abs(),
            nu_u_max: 1.0 / lam,
        };
        let closing_c = 2.0 / (sin_angle * (1.0 - 1.0 / lam));
        Ok(Self { matrix, inverse, mu_u, mu_s, e_u, e_s, dual, sin_angle, hyp, closing_c })
    }

    pub fn matrix(&self) -> [[i64; 2]; 2] {
        self.matrix
    }

    pub fn hyperbolicity(&self) -> &HyperbolicityData {
        &self.hyp
    }

    /// Expanding and contracting eigenvalues.
    pub fn eigenvalues(&self) -> (f64, f64) {
        (self.mu_u, self.mu_s)
    }

    /// Unit unstable and stable eigenvectors.
    pub fn eigenvectors(&self) -> ([f64; 2], [f64; 2]) {
        (self.e_u, self.e_s)
    }

    pub fn sin_angle(&self) -> f64 {
        self.sin_angle
    }

    /// Constant `C` in the closing estimate `d(fⁱx, fⁱp) ≤ C·d(x,fⁿx)·e^{-τ min(i,n-i)}`.
    pub fn closing_constant(&self) -> f64 {
        self.closing_c
    }

    pub fn step(&self, x: &TorusPoint) -> TorusPoint {
        apply(self.matrix, x)
    }

    pub fn inverse_step(&self, x: &TorusPoint) -> TorusPoint {
        apply(self.inverse, x)
    }

    pub fn dist(&self, x: &TorusPoint, y: &TorusPoint) -> f64 {
        let d = x.displacement_to(y);
        d[0].hypot(d[1])
    }

    /// Coefficients of `w` in the basis `(e_u, e_s)`.
    pub fn eigen_coords(&self, w: [f64; 2]) -> (f64, f64) {
        (
            self.dual[0][0] * w[0] + self.dual[0][1] * w[1],
            self.dual[1][0] * w[0] + self.dual[1][1] * w[1],
        )
    }

    /// Intersection of the unstable line through `y` with the stable line
    /// through `y2`, solved on lifts without range checks.
    pub fn bracket_unchecked(&self, y: &TorusPoint, y2: &TorusPoint) -> TorusPoint {
        let w = y.displacement_to(y2);
        let (s, _t) = self.eigen_coords(w);
        y.translate([s * self.e_u[0], s * self.e_u[1]])
    }

    pub fn bracket(&self, y: &TorusPoint, y2: &TorusPoint) -> Result<TorusPoint, BaseError> {
        let d = self.dist(y, y2);
        if d >= self.hyp.delta {
            return Err(BaseError::BracketOutOfRange { distance: d, delta: self.hyp.delta });
        }
        Ok(self.bracket_unchecked(y, y2))
    }

    pub fn power(&self, n: u32) -> [[i128; 2]; 2] {
        let mut r = [[1i128, 0], [0, 1]];
        let m = self.matrix.map(|row| row.map(i128::from));
        for _ in 0..n {
            r = mat_mul(r, m);
        }
        r
    }

    /// `|det(Mⁿ − I)|`, the number of points fixed by `fⁿ`.
    pub fn fixed_point_count(&self, n: u32) -> i128 {
        let p = self.power(n);
        ((p[0][0] - 1) * (p[1][1] - 1) - p[0][1] * p[1][0]).abs()
    }

    /// Exact enumeration of `Fix(fⁿ)` as rationals.
    pub fn fixed_points(&self, n: u32, cap: u64) -> Result<Vec<RationalPoint>, BaseError> {
        let count = self.fixed_point_count(n);
        if count > cap as i128 || count > u32::MAX as i128 {
            return Err(BaseError::CapExceeded { count: count as u128, cap });
        }
        let p = self.power(n);
        let b = [[p[0][0] - 1, p[0][1]], [p[1][0], p[1][1] - 1]];
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        let den = det.unsigned_abs() as u64;
        let sign = det.signum();
        let adj = [[b[1][1], -b[0][1]], [-b[1][0], b[0][0]]];
        let (g, h21, h22) = hermite_lower(b);
        let mut out = Vec::with_capacity(count as usize);
        let dd = den as i128;
        for k1 in 0..g {
            for k2 in 0..h22 {
                let _ = h21;
                let n0 = (sign * (adj[0][0] * k1 + adj[0][1] * k2)).rem_euclid(dd);
                let n1 = (sign * (adj[1][0] * k1 + adj[1][1] * k2)).rem_euclid(dd);
                out.push(RationalPoint { num: [n0 as u64, n1 as u64], den });
            }
        }
        out.sort();
        out.dedup();
        debug_assert_eq!(out.len() as i128, count);
        Ok(out)
    }

    pub fn step_rational(&self, r: &RationalPoint) -> RationalPoint {
        let d = r.den as i128;
        let [[a, b], [c, e]] = self.matrix.map(|row| row.map(i128::from));
        let (x, y) = (r.num[0] as i128, r.num[1] as i128);
        RationalPoint { num: [(a * x + b * y).rem_euclid(d) as u64, (c * x + e * y).rem_euclid(d) as u64], den: r.den }
    }

    /// Snap a float approximation of a point of `Fix(fⁿ)` to the exact
    /// rational it approximates: `k = (Mⁿ − I)·p` must be integral.
    pub fn snap_fixed_point(&self, n: u32, approx_lift: [f64; 2]) -> RationalPoint {
        let p = self.power(n);
        let b = [[p[0][0] - 1, p[0][1]], [p[1][0], p[1][1] - 1]];
        let k = [
            (b[0][0] as f64 * approx_lift[0] + b[0][1] as f64 * approx_lift[1]).round() as i128,
            (b[1][0] as f64 * approx_lift[0] + b[1][1] as f64 * approx_lift[1]).round() as i128,
        ];
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        let adj = [[b[1][1], -b[0][1]], [-b[1][0], b[0][0]]];
        let dd = det.abs();
        let s = det.signum();
        let n0 = (s * (adj[0][0] * k[0] + adj[0][1] * k[1])).rem_euclid(dd);
        let n1 = (s * (adj[1][0] * k[0] + adj[1][1] * k[1])).rem_euclid(dd);
        RationalPoint { num: [n0 as u64, n1 as u64], den: dd as u64 }
    }
}

fn eigvec(m: [[i64; 2]; 2], mu: f64) -> [f64; 2] {
    let [[a, b], [c, d]] = m.map(|r| r.map(|x| x as f64));
    let v1 = [b, mu - a];
    let v2 = [mu - d, c];
    let v = if v1[0].hypot(v1[1]) >= v2[0].hypot(v2[1]) { v1 } else { v2 };
    let n = v[0].hypot(v[1]);
    let mut e = [v[0] / n, v[1] / n];
    if e[0] < 0.0 || (e[0] == 0.0 && e[1] < 0.0) {
        e = [-e[0], -e[1]];
    }
    e
}

fn apply(m: [[i64; 2]; 2], x: &TorusPoint) -> TorusPoint {
    let w = |k: i64| k as i128 as u128;
    TorusPoint([
        w(m[0][0]).wrapping_mul(x.0[0]).wrapping_add(w(m[0][1]).wrapping_mul(x.0[1])),
        w(m[1][0]).wrapping_mul(x.0[0]).wrapping_add(w(m[1][1]).wrapping_mul(x.0[1])),
    ])
}

fn mat_mul(a: [[i128; 2]; 2], b: [[i128; 2]; 2]) -> [[i128; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a.abs(), a.signum(), 0)
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

/// Lower-triangular Hermite form `[[g, 0], [h21, h22]]` of the column
/// lattice of `b`, with `g, h22 > 0` and `0 <= h21 < h22`.
fn hermite_lower(b: [[i128; 2]; 2]) -> (i128, i128, i128) {
    let (c1, c2) = ([b[0][0], b[1][0]], [b[0][1], b[1][1]]);
    let (g, x, y) = ext_gcd(c1[0], c2[0]);
    let n1 = [x * c1[0] + y * c2[0], x * c1[1] + y * c2[1]];
    let (p, q) = (c2[0] / g, c1[0] / g);
    let n2 = [p * c1[0] - q * c2[0], p * c1[1] - q * c2[1]];
    debug_assert_eq!(n1[0], g);
    debug_assert_eq!(n2[0], 0);
    let h22 = n2[1].abs();
    let h21 = n1[1].rem_euclid(h22);
    (g, h21, h22)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> TorusModel {
        TorusModel::new([[2, 1], [1, 1]]).unwrap()
    }

    #[test]
    fn rejects_non_hyperbolic() {
        assert!(TorusModel::new([[1, 1], [0, 1]]).is_err());
        assert!(TorusModel::new([[2, 0], [0, 1]]).is_err());
    }

    #[test]
    fn step_examples() {
        let m = cat();
        assert_eq!(m.step(&TorusPoint::ORIGIN), TorusPoint::ORIGIN);
        let x = TorusPoint::from_f64([0.5, 0.5]);
        assert_eq!(m.step(&x).coords(), [0.5, 0.0]);
    }

    #[test]
    fn fixed_point_counts() {
        let m = cat();
        assert_eq!(m.fixed_points(1, 1000).unwrap(), vec![RationalPoint { num: [0, 0], den: 1 }]);
        assert_eq!(m.fixed_points(2, 1000).unwrap().len(), 5);
        for n in 1..=6 {
            assert_eq!(m.fixed_points(n, 1_000_000).unwrap().len() as i128, m.fixed_point_count(n));
        }
        assert!(matches!(m.fixed_points(6, 10), Err(BaseError::CapExceeded { .. })));
    }

    #[test]
    fn rational_to_fixed_is_periodic() {
        let m = cat();
        for r in m.fixed_points(3, 100).unwrap() {
            let mut x = r.to_fixed();
            let mut q = r;
            for _ in 0..3 {
                x = m.step(&x);
                q = m.step_rational(&q);
            }
            assert_eq!(q, r);
            assert!(m.dist(&x, &r.to_fixed()) < 1e-30);
        }
    }
}
