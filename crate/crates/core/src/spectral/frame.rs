//! Finite-horizon Lyapunov block coordinates along an orbit segment.
//!
//! The fast filtration is pushed forward from the start and the slow one
//! pulled back from the end, both by QR; block `j` of the splitting is the
//! intersection of the `j` fastest and the `k − j + 1` slowest directions.
//! Each block basis then follows `B` with its singular values clamped into
//! `[e^{λ′_j−η}, e^{λ′_j+η}]`, which is what makes `B_η` block diagonal with
//! norms in range while `C_η` stays tempered.

use serde::Serialize;

use super::{LyapunovSpectrum, SpectralError};
use crate::cocycle::DerivativeTrace;
use crate::linalg::Mat;
use crate::scalar::Real;

#[derive(Clone, Debug, Serialize)]
pub struct LyapunovFrame<T: Real> {
    /// `C_η(z_i)` for `i = 0..=L`.
    #[serde(skip)]
    pub c: Vec<Mat<T>>,
    /// `B_η(z_i) = C_η(z_{i+1}) B(z_i) C_η(z_i)⁻¹` for `i < L`.
    #[serde(skip)]
    pub b_eta: Vec<Mat<T>>,
    pub eta: f64,
    pub dims: Vec<usize>,
    pub exponents: Vec<f64>,
    /// `max_i K(z_i)` with `K = max(‖C_η‖, ‖C_η⁻¹‖)`.
    pub ell: f64,
    pub frame_bounds: Vec<f64>,
    /// `K(z_i) / K(z_{i+1})`.
    pub ratios: Vec<f64>,
    /// Share of ratios inside `(e^{−η}, e^{η})`.
    pub tempered_fraction: f64,
    /// `(norm, conorm)` of each diagonal block of `B_η(z_i)`.
    pub block_norms: Vec<Vec<(f64, f64)>>,
    pub off_block_max: f64,
    /// Share of indices whose blocks all lie in their interval.
    pub in_interval_fraction: f64,
}

impl<T: Real> LyapunovFrame<T> {
    /// Indices with `K(z_i) ≤ ell`.
    pub fn uniformity_block(&self, ell: f64) -> Vec<usize> {
        (0..self.frame_bounds.len()).filter(|&i| self.frame_bounds[i] <= ell).collect()
    }
}

fn take_cols<T: Real>(m: &Mat<T>, from: usize, to: usize) -> Mat<T> {
    Mat::from_fn(m.rows(), to - from, |r, c| m[(r, from + c)])
}

fn hcat<T: Real>(parts: &[Mat<T>]) -> Mat<T> {
    let cols: Vec<Vec<T>> = parts.iter().flat_map(|p| (0..p.cols()).map(|c| p.column(c))).collect();
    Mat::from_columns(&cols)
}

fn block<T: Real>(m: &Mat<T>, r0: usize, c0: usize, rows: usize, cols: usize) -> Mat<T> {
    Mat::from_fn(rows, cols, |r, c| m[(r0 + r, c0 + c)])
}

/// Orthonormal basis of `U ∩ V` of dimension `d`, for orthonormal `U`, `V`.
fn intersect<T: Real>(u: &Mat<T>, v: &Mat<T>, d: usize) -> Mat<T> {
    let q = u.rows();
    if u.cols() == q {
        return v.clone();
    }
    if v.cols() == q {
        return u.clone();
    }
    let proj = &Mat::identity(q) - &(u * &u.transpose());
    let g = &(&v.transpose() * &proj) * v;
    let (_, vecs) = g.sym_eigen();
    let b = v.cols();
    v * &take_cols(&vecs, b - d, b)
}

/// Splitting bases `E^j(z_i)` for `i = 0..=L`.
fn splitting<T: Real>(bs: &[Mat<T>], dims: &[usize]) -> Result<Vec<Vec<Mat<T>>>, SpectralError> {
    let q: usize = dims.iter().sum();
    let l = bs.len();
    let k = dims.len();
    if k == 1 {
        return Ok(vec![vec![Mat::identity(q)]; l + 1]);
    }
    let mut slow = vec![Mat::<T>::zeros(q, q); l + 1];
    slow[l] = Mat::from_fn(q, q, |r, c| if r + c == q - 1 { T::one() } else { T::zero() });
    for i in (0..l).rev() {
        let bi = bs[i].inverse().ok_or(SpectralError::Singular { cond: f64::INFINITY })?;
        slow[i] = (&bi * &slow[i + 1]).qr().0;
    }
    let mut fast = vec![Mat::<T>::zeros(q, q); l + 1];
    fast[0] = Mat::from_fn(q, q, |r, c| slow[0][(r, q - 1 - c)]);
    for i in 0..l {
        fast[i + 1] = (&bs[i] * &fast[i]).qr().0;
    }
    Ok((0..=l)
        .map(|i| {
            (0..k)
                .map(|j| {
                    let a: usize = dims[..=j].iter().sum();
                    let b: usize = dims[j..].iter().sum();
                    intersect(&take_cols(&fast[i], 0, a), &take_cols(&slow[i], 0, b), dims[j])
                })
                .collect()
        })
        .collect())
}

/// Builds `C_η` along the segment with per-step matrices `bs[i] = B(z_i)`.
pub fn lyapunov_coordinates_from<T: Real>(
    bs: &[Mat<T>],
    spectrum: &LyapunovSpectrum,
    eta: f64,
) -> Result<LyapunovFrame<T>, SpectralError> {
    let gap = spectrum.min_gap();
    if gap <= 4.0 * eta {
        return Err(SpectralError::GapTooSmall { gap, eta });
    }
    let dims = spectrum.multiplicities.clone();
    let lambdas = spectrum.exponents.clone();
    let q: usize = dims.iter().sum();
    if bs.is_empty() || bs[0].rows() != q {
        return Err(SpectralError::PreconditionViolated { index: 0, what: "trace dimension does not match the spectrum".into() });
    }
    let k = dims.len();
    let offs: Vec<usize> = (0..k).map(|j| dims[..j].iter().sum()).collect();
    let e = splitting(bs, &dims)?;

    // nearest orthonormal frame of E^j(z_0) to the coordinate block
    let mut f: Vec<Mat<T>> = (0..k)
        .map(|j| {
            let y = block(&e[0][j].transpose(), 0, offs[j], dims[j], dims[j]);
            let s = y.svd();
            &e[0][j] * &(&s.u * &s.v.transpose())
        })
        .collect();
    let mut cinv = vec![hcat(&f)];
    for (i, b) in bs.iter().enumerate() {
        let mut next = Vec::with_capacity(k);
        for j in 0..k {
            let m = b * &f[j];
            let basis = &e[i + 1][j];
            let y = &basis.transpose() * &m;
            let s = y.svd();
            let (lo, hi) = (T::lit((lambdas[j] - eta).exp()), T::lit((lambdas[j] + eta).exp()));
            let ratio: Vec<T> = s.sigma.iter().map(|&x| x / x.max(lo).min(hi)).collect();
            next.push(&(basis * &s.u) * &Mat::diag(&ratio));
        }
        f = next;
        cinv.push(hcat(&f));
    }
    let mut c = Vec::with_capacity(cinv.len());
    for (i, ci) in cinv.iter().enumerate() {
        c.push(ci.inverse().ok_or(SpectralError::PreconditionViolated { index: i, what: "frame became singular".into() })?);
    }
    let mut b_eta = Vec::with_capacity(bs.len());
    let mut block_norms = Vec::with_capacity(bs.len());
    let (mut off_block_max, mut inside) = (0.0f64, 0usize);
    for (i, b) in bs.iter().enumerate() {
        let be = &(&c[i + 1] * b) * &cinv[i];
        let mut norms = Vec::with_capacity(k);
        let mut ok = true;
        for j in 0..k {
            let blk = block(&be, offs[j], offs[j], dims[j], dims[j]);
            let (n, co) = (blk.norm2().to_f64_lossy(), blk.conorm().to_f64_lossy());
            let (lo, hi) = ((lambdas[j] - eta).exp(), (lambdas[j] + eta).exp());
            let slack = 1e-9 + 64.0 * T::epsilon().to_f64_lossy();
            ok &= n <= hi * (1.0 + slack) && co >= lo * (1.0 - slack);
            norms.push((n, co));
            for jj in 0..k {
                if jj != j {
                    let ob = block(&be, offs[j], offs[jj], dims[j], dims[jj]);
                    off_block_max = off_block_max.max(ob.max_abs().to_f64_lossy());
                }
            }
        }
        inside += ok as usize;
        block_norms.push(norms);
        b_eta.push(be);
    }
    let frame_bounds: Vec<f64> = c
        .iter()
        .zip(&cinv)
        .map(|(a, b)| a.norm2().to_f64_lossy().max(b.norm2().to_f64_lossy()))
        .collect();
    let ell = frame_bounds.iter().copied().fold(0.0, f64::max);
    let ratios: Vec<f64> = frame_bounds.windows(2).map(|w| w[0] / w[1]).collect();
    let tempered = ratios.iter().filter(|r| (r.ln()).abs() < eta).count();
    Ok(LyapunovFrame {
        c,
        b_eta,
        eta,
        dims,
        exponents: lambdas,
        ell,
        tempered_fraction: if ratios.is_empty() { 1.0 } else { tempered as f64 / ratios.len() as f64 },
        frame_bounds,
        ratios,
        in_interval_fraction: inside as f64 / bs.len().max(1) as f64,
        block_norms,
        off_block_max,
    })
}

pub fn lyapunov_coordinates<T: Real>(
    trace: &DerivativeTrace<T>,
    spectrum: &LyapunovSpectrum,
    eta: f64,
) -> Result<LyapunovFrame<T>, SpectralError> {
    lyapunov_coordinates_from(&trace.matrices, spectrum, eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::cluster_exponents;

    fn spectrum(raw: &[f64]) -> LyapunovSpectrum {
        let (exponents, multiplicities) = cluster_exponents(raw, 1e-2);
        LyapunovSpectrum {
            exponents,
            multiplicities,
            tol: 1e-2,
            raw: raw.to_vec(),
            slopes: vec![0.0; raw.len()],
            n: 0,
            log_det_rate: raw.iter().sum(),
        }
    }

    #[test]
    fn constant_diagonal_is_its_own_frame() {
        let b = Mat::<f64>::diag(&[2.0, 0.5]);
        let bs = vec![b.clone(); 30];
        let fr = lyapunov_coordinates_from(&bs, &spectrum(&[2f64.ln(), 0.5f64.ln()]), 0.05).unwrap();
        for ci in &fr.c {
            assert!((ci - &Mat::identity(2)).max_abs() == 0.0);
        }
        for be in &fr.b_eta {
            assert!((be - &b).max_abs() == 0.0);
        }
    }

    #[test]
    fn small_gap_is_rejected() {
        let bs = vec![Mat::<f64>::identity(2); 3];
        assert!(matches!(
            lyapunov_coordinates_from(&bs, &spectrum(&[0.1, -0.05]), 0.05),
            Err(SpectralError::GapTooSmall { .. })
        ));
    }
}
