//! Small dense matrices.
//!
//! Fiber derivatives are 1×1 or 2×2 and the linear-algebra lemma suites work
//! in dimension ≤ 4, so everything here is plain row-major storage with
//! Jacobi-type decompositions that keep relative accuracy in the small
//! singular values.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::scalar::Real;

#[derive(Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mat{}x{}[", self.rows, self.cols)?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, "; ")?;
            }
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:?}", self[(r, c)])?;
            }
        }
        write!(f, "]")
    }
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { T::one() } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self { rows: rows.len(), cols, data: rows.iter().flatten().copied().collect() }
    }

    pub fn from_f64_rows(rows: &[&[f64]]) -> Self {
        let v: Vec<Vec<T>> = rows.iter().map(|r| r.iter().map(|&x| T::lit(x)).collect()).collect();
        Self::from_rows(&v)
    }

    pub fn diag(d: &[T]) -> Self {
        let n = d.len();
        Self::from_fn(n, n, |r, c| if r == c { d[r] } else { T::zero() })
    }

    pub fn from_columns(cols: &[Vec<T>]) -> Self {
        let rows = cols.first().map_or(0, Vec::len);
        Self::from_fn(rows, cols.len(), |r, c| cols[c][r])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, v: &[T]) {
        for (r, &x) in v.iter().enumerate() {
            self[(r, c)] = x;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)] * v[c]).sum())
            .collect()
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Determinant by partial-pivot elimination.
    pub fn det(&self) -> T {
        assert!(self.is_square());
        match self.rows {
            0 => T::one(),
            1 => self.data[0],
            2 => self.data[0] * self.data[3] - self.data[1] * self.data[2],
            n => {
                let mut a = self.clone();
                let mut det = T::one();
                for k in 0..n {
                    let p = (k..n)
                        .max_by(|&i, &j| a[(i, k)].abs().partial_cmp(&a[(j, k)].abs()).unwrap())
                        .unwrap();
                    if a[(p, k)] == T::zero() {
                        return T::zero();
                    }
                    if p != k {
                        a.swap_rows(p, k);
                        det = -det;
                    }
                    det = det * a[(k, k)];
                    for i in k + 1..n {
                        let f = a[(i, k)] / a[(k, k)];
                        for j in k..n {
                            let v = a[(k, j)];
                            a[(i, j)] = a[(i, j)] - f * v;
                        }
                    }
                }
                det
            }
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Gauss–Jordan inverse; `None` for (numerically) singular input.
    pub fn inverse(&self) -> Option<Self> {
        assert!(self.is_square());
        let n = self.rows;
        if n == 1 {
            let a = self.data[0];
            return (a != T::zero()).then(|| Self::diag(&[a.recip()]));
        }
        if n == 2 {
            let d = self.det();
            if d == T::zero() || !d.is_finite() {
                return None;
            }
            let [a, b, c, e] = [self.data[0], self.data[1], self.data[2], self.data[3]];
            return Some(Self { rows: 2, cols: 2, data: vec![e / d, -b / d, -c / d, a / d] });
        }
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].abs().partial_cmp(&a[(j, k)].abs()).unwrap())
                .unwrap();
            if a[(p, k)] == T::zero() {
                return None;
            }
            a.swap_rows(p, k);
            inv.swap_rows(p, k);
            let piv = a[(k, k)];
            for j in 0..n {
                a[(k, j)] = a[(k, j)] / piv;
                inv[(k, j)] = inv[(k, j)] / piv;
            }
            for i in 0..n {
                if i != k {
                    let f = a[(i, k)];
                    if f != T::zero() {
                        for j in 0..n {
                            let (akj, ikj) = (a[(k, j)], inv[(k, j)]);
                            a[(i, j)] = a[(i, j)] - f * akj;
                            inv[(i, j)] = inv[(i, j)] - f * ikj;
                        }
                    }
                }
            }
        }
        Some(inv)
    }

    /// Thin QR by twice-iterated modified Gram–Schmidt. `R` has a
    /// nonnegative diagonal; rank-deficient columns get a zero diagonal.
    pub fn qr(&self) -> (Self, Self) {
        let (m, n) = (self.rows, self.cols);
        let mut q = self.clone();
        let mut r = Self::zeros(n, n);
        for j in 0..n {
            let mut v = q.column(j);
            for _pass in 0..2 {
                for i in 0..j {
                    let qi = q.column(i);
                    let h = dot(&qi, &v);
                    r[(i, j)] = r[(i, j)] + h;
                    for (vk, qk) in v.iter_mut().zip(&qi) {
                        *vk = *vk - h * *qk;
                    }
                }
            }
            let nv = norm(&v);
            r[(j, j)] = nv;
            if nv > T::zero() {
                for vk in v.iter_mut() {
                    *vk = *vk / nv;
                }
            }
            q.set_column(j, &v);
        }
        debug_assert_eq!(q.rows, m);
        (q, r)
    }

    /// One-sided Jacobi SVD of a square matrix: `self = U·diag(σ)·Vᵀ` with
    /// `σ` descending.
    pub fn svd(&self) -> Svd<T> {
        assert!(self.is_square(), "svd expects a square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut v = Self::identity(n);
        let tol = T::epsilon();
        for _sweep in 0..80 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                    for i in 0..n {
                        let (ap, aq) = (a[(i, p)], a[(i, q)]);
                        alpha = alpha + ap * ap;
                        beta = beta + aq * aq;
                        gamma = gamma + ap * aq;
                    }
                    if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (gamma + gamma);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = (T::one() + t * t).sqrt().recip();
                    let s = c * t;
                    for i in 0..n {
                        let (ap, aq) = (a[(i, p)], a[(i, q)]);
                        a[(i, p)] = c * ap - s * aq;
                        a[(i, q)] = s * ap + c * aq;
                        let (vp, vq) = (v[(i, p)], v[(i, q)]);
                        v[(i, p)] = c * vp - s * vq;
                        v[(i, q)] = s * vp + c * vq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut order: Vec<(T, usize)> = (0..n).map(|j| (norm(&a.column(j)), j)).collect();
        order.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut u = Self::zeros(n, n);
        let mut vs = Self::zeros(n, n);
        let mut sigma = Vec::with_capacity(n);
        for (k, &(s, j)) in order.iter().enumerate() {
            sigma.push(s);
            let col = a.column(j);
            if s > T::zero() {
                u.set_column(k, &col.iter().map(|&x| x / s).collect::<Vec<_>>());
            }
            vs.set_column(k, &v.column(j));
        }
        // complete U where columns vanished
        for k in 0..n {
            if sigma[k] == T::zero() {
                let mut e = vec![T::zero(); n];
                e[k % n] = T::one();
                for i in 0..n {
                    if i != k && sigma[i] > T::zero() {
                        let ui = u.column(i);
                        let h = dot(&ui, &e);
                        for (x, y) in e.iter_mut().zip(&ui) {
                            *x = *x - h * *y;
                        }
                    }
                }
                let ne = norm(&e);
                if ne > T::zero() {
                    u.set_column(k, &e.iter().map(|&x| x / ne).collect::<Vec<_>>());
                }
            }
        }
        Svd { u, sigma, v: vs }
    }

    pub fn singular_values(&self) -> Vec<T> {
        self.svd().sigma
    }

    /// Operator 2-norm.
    pub fn norm2(&self) -> T {
        if self.rows == 1 && self.cols == 1 {
            return self.data[0].abs();
        }
        if self.is_square() {
            self.singular_values()[0]
        } else {
            // ‖A‖² = λ_max(AᵀA)
            let g = self.transpose() * self.clone();
            g.sym_eigen().0[0].max(T::zero()).sqrt()
        }
    }

    /// Co-norm `‖A⁻¹‖⁻¹`, the smallest singular value.
    pub fn conorm(&self) -> T {
        if self.rows == 1 && self.cols == 1 {
            return self.data[0].abs();
        }
        *self.singular_values().last().expect("nonempty")
    }

    /// Cyclic Jacobi eigen-decomposition of a symmetric matrix; eigenvalues
    /// descending with eigenvectors as columns.
    pub fn sym_eigen(&self) -> (Vec<T>, Self) {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut v = Self::identity(n);
        for _sweep in 0..100 {
            let off: T = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off <= T::epsilon() * T::epsilon() * a.frobenius().powi(2) || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (apq + apq);
                    let t = theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt());
                    let c = (T::one() + t * t).sqrt().recip();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[(k, p)], a[(k, q)]);
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap_or(std::cmp::Ordering::Equal));
        let vals = order.iter().map(|&i| a[(i, i)]).collect();
        let vecs = Self::from_fn(n, n, |r, c| v[(r, order[c])]);
        (vals, vecs)
    }

    /// Haar-distributed orthogonal matrix.
    pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let g = Self::from_fn(n, n, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)));
        let (q, r) = g.qr();
        // sign fix so the distribution is Haar
        Self::from_fn(n, n, |i, j| if r[(j, j)] < T::zero() { -q[(i, j)] } else { q[(i, j)] })
    }

    /// Standard Gaussian entries.
    pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Self::from_fn(rows, cols, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)))
    }

    pub fn cast<U: Real>(&self) -> Mat<U> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| U::lit(x.to_f64_lossy())).collect() }
    }
}

#[derive(Clone, Debug)]
pub struct Svd<T: Real> {
    pub u: Mat<T>,
    pub sigma: Vec<T>,
    pub v: Mat<T>,
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl<T: Real> Mul for &Mat<T> {
    type Output = Mat<T>;
    fn mul(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        Mat::from_fn(self.rows, rhs.cols, |r, c| (0..self.cols).map(|k| self[(r, k)] * rhs[(k, c)]).sum())
    }
}

impl<T: Real> Mul for Mat<T> {
    type Output = Mat<T>;
    fn mul(self, rhs: Mat<T>) -> Mat<T> {
        &self * &rhs
    }
}

impl<T: Real> Add for &Mat<T> {
    type Output = Mat<T>;
    fn add(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect() }
    }
}

impl<T: Real> Sub for &Mat<T> {
    type Output = Mat<T>;
    fn sub(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect() }
    }
}

impl<T: Real> Add for Mat<T> {
    type Output = Mat<T>;
    fn add(self, rhs: Mat<T>) -> Mat<T> {
        &self + &rhs
    }
}

impl<T: Real> Sub for Mat<T> {
    type Output = Mat<T>;
    fn sub(self, rhs: Mat<T>) -> Mat<T> {
        &self - &rhs
    }
}

impl<T: Real> Neg for Mat<T> {
    type Output = Mat<T>;
    fn neg(self) -> Mat<T> {
        self.scale(-T::one())
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Real>(a: &[T]) -> T {
    // scaled to avoid overflow on long products
    let m = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if m == T::zero() || !m.is_finite() {
        return m;
    }
    m * a.iter().map(|&x| (x / m) * (x / m)).sum::<T>().sqrt()
}

pub fn normalize<T: Real>(a: &[T]) -> Vec<T> {
    let n = norm(a);
    a.iter().map(|&x| x / n).collect()
}

/// Angle between the lines spanned by `a` and `b`, in `[0, π/2]`.
pub fn line_angle<T: Real>(a: &[T], b: &[T]) -> T {
    let c = (dot(a, b) / (norm(a) * norm(b))).abs().min(T::one());
    c.acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inverse_and_det() {
        let m = Mat::<f64>::from_f64_rows(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 4.0]]);
        let inv = m.inverse().unwrap();
        let p = &m * &inv;
        assert!((&p - &Mat::identity(3)).max_abs() < 1e-14);
        assert!((m.det() - 18.0).abs() < 1e-12);
        assert!(Mat::<f64>::from_f64_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).inverse().is_none());
    }

    #[test]
    fn svd_reconstructs_and_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=4 {
            let m = Mat::<f64>::random_gaussian(n, n, &mut rng);
            let svd = m.svd();
            let rec = &(&svd.u * &Mat::diag(&svd.sigma)) * &svd.v.transpose();
            assert!((&rec - &m).max_abs() < 1e-12, "n={n}");
            assert!(svd.sigma.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn svd_small_singular_value_relative_accuracy() {
        // diag(1, 1e-12) rotated on both sides
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = Mat::<f64>::random_orthogonal(2, &mut rng);
        let v = Mat::<f64>::random_orthogonal(2, &mut rng);
        let m = &(&u * &Mat::diag(&[1.0, 1e-12])) * &v.transpose();
        let s = m.singular_values();
        assert!((s[1] / 1e-12 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn qr_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = Mat::<f64>::random_gaussian(4, 3, &mut rng);
        let (q, r) = m.qr();
        let qtq = &q.transpose() * &q;
        assert!((&qtq - &Mat::identity(3)).max_abs() < 1e-14);
        assert!((&(&q * &r) - &m).max_abs() < 1e-13);
        assert!(m.norm2() >= r[(0, 0)] - 1e-12);
    }

    #[test]
    fn sym_eigen_matches_definition() {
        let m = Mat::<f64>::from_f64_rows(&[&[2.0, 1.0], &[1.0, 1.0]]);
        let (vals, vecs) = m.sym_eigen();
        let phi = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((vals[0] - phi).abs() < 1e-14 && (vals[1] - 1.0 / phi).abs() < 1e-14);
        let v0 = vecs.column(0);
        let mv = m.mul_vec(&v0);
        assert!((mv[0] - phi * v0[0]).abs() < 1e-13);
    }
}
