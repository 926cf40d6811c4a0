//! Singular values, fibered Lyapunov exponents, cone and flag lemmas, and
//! finite-horizon Lyapunov block coordinates.

mod cones;
mod exponents;
mod frame;
mod svals;

use thiserror::Error;

pub use cones::{
    calibrate_alpha1, calibrate_gamma, cone_invariance_check, flag_construction, growth_rate, ConeCheck, ConeReport, ConeSystem, Flag,
};
pub use exponents::{
    bounded_conjugacy_stability, cluster_exponents, exponent_estimate, lemma_threshold, random_bounded, spectrum_from_trace, ConjugacyReport,
    LyapunovSpectrum,
};
pub use frame::{lyapunov_coordinates, lyapunov_coordinates_from, LyapunovFrame};
pub use svals::{ellipsoid_ordering_check, singular_values, Ellipsoid, EllipsoidOrdering, SingularSpectrum};

/// Condition number above which a matrix counts as singular.
pub const SINGULAR_CONDITION: f64 = 1e14;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("matrix is numerically singular (condition {cond:e})")]
    Singular { cond: f64 },
    #[error("ellipsoid E is not inside F (witness boundary point {witness:?})")]
    NotContained { witness: Vec<f64> },
    #[error("exponent {index} not converged: |λ(n) − λ(n/2)| = {slope:e}")]
    NotConverged { index: usize, slope: f64 },
    #[error("precondition violated at index {index}: {what}")]
    PreconditionViolated { index: usize, what: String },
    #[error("cone escape ({kind}) at step {step}, cone {cone}: {ratio:e} against bound {bound:e}")]
    ConeEscape { kind: &'static str, step: usize, cone: usize, ratio: f64, bound: f64, witness: Vec<f64> },
    #[error("flag dimension collapsed: rank {rank}, expected {expected}")]
    DimensionCollapse { rank: usize, expected: usize },
    #[error("spectral gap {gap} is not larger than 4η = {}", 4.0 * eta)]
    GapTooSmall { gap: f64, eta: f64 },
    #[error(transparent)]
    Cocycle(#[from] crate::cocycle::CocycleError),
}
