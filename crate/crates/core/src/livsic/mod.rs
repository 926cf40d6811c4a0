//! Transfer functions of cocycles satisfying the periodic orbit condition,
//! and classification of cocycles into coboundaries and obstructed ones.

mod classify;
mod sampled;
mod transfer;
mod verify;

use thiserror::Error;

pub use classify::{
    classify, fibered_exponents, periodic_exponents, scan_periodic, solve, Classification, ClassifyReport, ObstructionWitness,
    PeriodicExponent, Residuals, Tolerances, Verdict,
};
pub use sampled::SampledMap;
pub use transfer::{HolderFit, Lookup, SolveOptions, TransferFunction, TransferMap};
pub use verify::{pair_distance, verify_at, verify_coboundary, CoboundaryResidual};

pub(crate) use transfer::jmul as transfer_jmul;

use crate::base::BaseError;
use crate::cocycle::CocycleError;
use crate::fiber::FiberError;
use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum LivsicError {
    #[error("periodic orbit condition fails: d_C¹ residual {} at period {}", .0.poc_c1, .0.period)]
    PocViolated(Box<ObstructionWitness>),
    #[error("fibered exponent {value} exceeds {tol} from start {start:?}")]
    ExponentNonzero { value: f64, tol: f64, start: [f64; 2] },
    #[error(transparent)]
    Base(#[from] BaseError),
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error(transparent)]
    Fiber(#[from] FiberError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("numerical failure: {0}")]
    Numeric(String),
}
