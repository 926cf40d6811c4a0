use rand::Rng;
use serde::Serialize;

use super::{SpectralError, SINGULAR_CONDITION};
use crate::linalg::{normalize, Mat};
use crate::scalar::Real;

/// Descending singular values of one matrix.
#[derive(Clone, Debug, Serialize)]
pub struct SingularSpectrum {
    pub svals: Vec<f64>,
    pub source_n: usize,
}

impl SingularSpectrum {
    pub fn log_svals(&self) -> Vec<f64> {
        self.svals.iter().map(|s| s.ln()).collect()
    }

    pub fn condition(&self) -> f64 {
        self.svals[0] / self.svals[self.svals.len() - 1]
    }
}

/// `σ_1 ≥ … ≥ σ_q` of an invertible square matrix.
pub fn singular_values<T: Real>(m: &Mat<T>, source_n: usize) -> Result<SingularSpectrum, SpectralError> {
    let svals: Vec<f64> = m.singular_values().into_iter().map(|s| s.to_f64_lossy()).collect();
    let last = svals[svals.len() - 1];
    let cond = if last > 0.0 { svals[0] / last } else { f64::INFINITY };
    if !(cond <= SINGULAR_CONDITION) {
        return Err(SpectralError::Singular { cond });
    }
    Ok(SingularSpectrum { svals, source_n })
}

/// `{axes · diag(radii) · u : |u| ≤ 1}` with orthonormal `axes` columns.
#[derive(Clone, Debug)]
pub struct Ellipsoid {
    pub axes: Mat<f64>,
    pub radii: Vec<f64>,
}

impl Ellipsoid {
    pub fn ball(dim: usize, r: f64) -> Self {
        Self { axes: Mat::identity(dim), radii: vec![r; dim] }
    }

    pub fn dim(&self) -> usize {
        self.radii.len()
    }

    /// Image of the unit ball.
    pub fn matrix(&self) -> Mat<f64> {
        &self.axes * &Mat::diag(&self.radii)
    }

    /// Radii in descending order, `r_i(E)`.
    pub fn sorted_radii(&self) -> Vec<f64> {
        let mut r = self.radii.clone();
        r.sort_by(|a, b| b.total_cmp(a));
        r
    }

    pub fn boundary_point(&self, u: &[f64]) -> Vec<f64> {
        self.matrix().mul_vec(&normalize(u))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EllipsoidOrdering {
    pub holds: bool,
    pub r_e: Vec<f64>,
    pub r_f: Vec<f64>,
    pub first_violation: Option<usize>,
    /// `max_x ‖M_F⁻¹ x‖` over E, at most 1 when E ⊂ F.
    pub containment: f64,
}

const ORDER_SLACK: f64 = 1e-12;

/// Checks `r_i(E) ≤ r_i(F)` for `E ⊂ F`, after verifying containment on
/// `witness_trials` sampled boundary points of E and by the exact norm test.
pub fn ellipsoid_ordering_check<R: Rng + ?Sized>(
    e: &Ellipsoid,
    f: &Ellipsoid,
    witness_trials: usize,
    rng: &mut R,
) -> Result<EllipsoidOrdering, SpectralError> {
    assert_eq!(e.dim(), f.dim(), "ellipsoids of different dimension");
    let fi = f.matrix().inverse().ok_or(SpectralError::Singular { cond: f64::INFINITY })?;
    let me = e.matrix();
    for _ in 0..witness_trials {
        let u: Vec<f64> = (0..e.dim()).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let x = me.mul_vec(&normalize(&u));
        if crate::linalg::norm(&fi.mul_vec(&x)) > 1.0 + ORDER_SLACK {
            return Err(SpectralError::NotContained { witness: x });
        }
    }
    let rel = &fi * &me;
    let svd = rel.svd();
    let containment = svd.sigma[0];
    if containment > 1.0 + ORDER_SLACK {
        return Err(SpectralError::NotContained { witness: me.mul_vec(&svd.v.column(0)) });
    }
    let (r_e, r_f) = (e.sorted_radii(), f.sorted_radii());
    let first_violation = r_e.iter().zip(&r_f).position(|(a, b)| *a > b * (1.0 + ORDER_SLACK));
    Ok(EllipsoidOrdering { holds: first_violation.is_none(), r_e, r_f, first_violation, containment })
}
