use rand::Rng;
use serde::Serialize;

use super::SpectralError;
use crate::cocycle::{Cocycle, DerivativeTrace, SkewPoint};
use crate::linalg::Mat;
use crate::scalar::Real;

/// Distinct finite-horizon exponents with multiplicities.
#[derive(Clone, Debug, Serialize)]
pub struct LyapunovSpectrum {
    /// Distinct values, descending.
    pub exponents: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub tol: f64,
    /// `(1/n) log σ_i(∂Fⁿ)`, one per dimension.
    pub raw: Vec<f64>,
    /// `|λ_i(n) − λ_i(n/2)|` per dimension.
    pub slopes: Vec<f64>,
    pub n: usize,
    /// `(1/n) Σ log|det ∂F|` summed step by step.
    pub log_det_rate: f64,
}

impl LyapunovSpectrum {
    pub fn dims(&self) -> &[usize] {
        &self.multiplicities
    }

    /// Smallest gap between consecutive distinct exponents.
    pub fn min_gap(&self) -> f64 {
        self.exponents.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min)
    }

    pub fn sum_with_multiplicity(&self) -> f64 {
        self.exponents.iter().zip(&self.multiplicities).map(|(l, m)| l * *m as f64).sum()
    }
}

/// Groups descending values into clusters split at gaps larger than `2·tol`.
pub fn cluster_exponents(raw: &[f64], tol: f64) -> (Vec<f64>, Vec<usize>) {
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for &x in raw {
        match groups.last_mut() {
            Some(g) if g.last().is_some_and(|&y| y - x <= 2.0 * tol) => g.push(x),
            _ => groups.push(vec![x]),
        }
    }
    let means = groups.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();
    (means, groups.iter().map(Vec::len).collect())
}

pub fn spectrum_from_trace<T: Real>(trace: &DerivativeTrace<T>, n: usize, tol: f64) -> Result<LyapunovSpectrum, SpectralError> {
    if n < 2 || n > trace.log_svals.len() {
        return Err(SpectralError::PreconditionViolated { index: n, what: "horizon outside the trace".into() });
    }
    let h = n / 2;
    let raw: Vec<f64> = trace.log_svals[n - 1].iter().map(|l| l / n as f64).collect();
    let half: Vec<f64> = trace.log_svals[h - 1].iter().map(|l| l / h as f64).collect();
    let slopes: Vec<f64> = raw.iter().zip(&half).map(|(a, b)| (a - b).abs()).collect();
    if let Some((index, &slope)) = slopes.iter().enumerate().find(|(_, s)| **s > tol) {
        return Err(SpectralError::NotConverged { index, slope });
    }
    let log_det: f64 = trace.matrices[..n].iter().map(|m| m.det().to_f64_lossy().abs().ln()).sum();
    let (exponents, multiplicities) = cluster_exponents(&raw, tol);
    Ok(LyapunovSpectrum { exponents, multiplicities, tol, raw, slopes, n, log_det_rate: log_det / n as f64 })
}

/// `(1/n) log σ_i(∂Fⁿ_z)`, clustered, for `n ≥ 1000`.
pub fn exponent_estimate<T: Real>(c: &Cocycle<T>, z: &SkewPoint<T>, n: usize, tol: f64) -> Result<LyapunovSpectrum, SpectralError> {
    if n < 1000 {
        return Err(SpectralError::PreconditionViolated { index: n, what: "exponent estimates need n ≥ 1000".into() });
    }
    let trace = c.derivative_cocycle(z, n, 10)?;
    spectrum_from_trace(&trace, n, tol)
}

/// `N = ceil(4 log ℓ / δ)`, at least 1.
pub fn lemma_threshold(ell: f64, delta: f64) -> usize {
    ((4.0 * ell.ln() / delta).ceil() as usize).max(1)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjugacyReport {
    pub threshold: usize,
    pub trials: usize,
    pub ell: f64,
    pub delta: f64,
    /// Half-width of the hypothesis window on the input trace.
    pub window: f64,
    /// Largest `|(1/n) log σ_i(C A D) − λ_i|` over `n ≥ threshold`.
    pub max_deviation: f64,
    /// Largest `n ≥ threshold` where the deviation exceeded `δ`.
    pub worst_n: Option<usize>,
    pub sandwich_violations: usize,
    /// Smallest `2 log ℓ + tol_i − |log σ_i(CAD) − log σ_i(A)|` seen, where
    /// `tol_i` is the rounding allowance for `σ_i` of a formed product.
    pub sandwich_margin: f64,
    pub holds: bool,
}

/// `U · diag(ℓ^{u_i}) · V` with `u_i ∈ [−1, 1]`, so `‖M‖, ‖M⁻¹‖ ≤ ℓ`.
pub fn random_bounded<R: Rng + ?Sized>(q: usize, ell: f64, rng: &mut R) -> Mat<f64> {
    let u = Mat::random_orthogonal(q, rng);
    let v = Mat::random_orthogonal(q, rng);
    let d: Vec<f64> = (0..q).map(|_| ell.powf(rng.gen_range(-1.0..=1.0))).collect();
    &(&u * &Mat::diag(&d)) * &v
}

/// Samples `trials` pairs of sequences `C_n, D_n` with norms and conorms
/// bounded by `ell` and checks `|(1/n) log σ_i(C_n A_n D_n) − λ_i| ≤ δ` for
/// `n ≥ N`, and the sandwich `σ_i(A)/ℓ² ≤ σ_i(CAD) ≤ ℓ² σ_i(A)` for every n.
/// `products[n-1] = A_n`; the input must satisfy the `window` hypothesis.
#[allow(clippy::too_many_arguments)]
pub fn bounded_conjugacy_stability<T: Real, R: Rng + ?Sized>(
    products: &[Mat<T>],
    lambdas: &[f64],
    ell: f64,
    delta: f64,
    window: f64,
    trials: usize,
    rng: &mut R,
) -> Result<ConjugacyReport, SpectralError> {
    assert!(ell >= 1.0 && delta > 0.0);
    let a: Vec<Mat<f64>> = products.iter().map(|m| m.cast()).collect();
    let mut base_logs = Vec::with_capacity(a.len());
    for (k, m) in a.iter().enumerate() {
        let n = (k + 1) as f64;
        let logs: Vec<f64> = m.singular_values().iter().map(|s| s.ln()).collect();
        if let Some(i) = logs.iter().zip(lambdas).position(|(l, lam)| (l / n - lam).abs() > window) {
            return Err(SpectralError::PreconditionViolated {
                index: k + 1,
                what: format!("|(1/n) log σ_{} − λ| exceeds the window {window}", i + 1),
            });
        }
        base_logs.push(logs);
    }
    let threshold = lemma_threshold(ell, delta);
    let bound = 2.0 * ell.ln();
    let q = a.first().map_or(0, Mat::rows);
    let (mut max_deviation, mut worst_n, mut violations, mut margin) = (0.0f64, None, 0usize, f64::INFINITY);
    for _ in 0..trials {
        for (k, m) in a.iter().enumerate() {
            let n = k + 1;
            let c = random_bounded(q, ell, rng);
            let d = random_bounded(q, ell, rng);
            let s = (&(&c * m) * &d).singular_values();
            for (i, sv) in s.iter().enumerate() {
                let l = sv.ln();
                let gap = (l - base_logs[k][i]).abs();
                // small singular values of a formed product carry relative error ~ ε·σ_1/σ_i
                let tol = 1e-12 + 64.0 * f64::EPSILON * (base_logs[k][0] - base_logs[k][i]).exp();
                margin = margin.min(bound + tol - gap);
                if gap > bound + tol {
                    violations += 1;
                }
                if n >= threshold {
                    let dev = (l / n as f64 - lambdas[i]).abs();
                    max_deviation = max_deviation.max(dev);
                    if dev > delta {
                        worst_n = Some(worst_n.map_or(n, |w: usize| w.max(n)));
                    }
                }
            }
        }
    }
    Ok(ConjugacyReport {
        threshold,
        trials,
        ell,
        delta,
        window,
        max_deviation,
        worst_n,
        sandwich_violations: violations,
        sandwich_margin: margin,
        holds: worst_n.is_none() && violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_example() {
        assert_eq!(lemma_threshold(2.0, 0.1), 28);
        assert_eq!(lemma_threshold(1.0, 0.1), 1);
    }

    #[test]
    fn clustering() {
        let (e, m) = cluster_exponents(&[0.96, 0.005, -0.004, -0.96], 1e-2);
        assert_eq!(m, vec![1, 2, 1]);
        assert!((e[1] - 0.0005).abs() < 1e-12);
    }
}
