//! Hyperbolic base dynamics, diffeomorphism-valued cocycles over them,
//! fibered Lyapunov exponents, fiber shadowing and transfer-function solvers.
//!
//! Floating-point code is generic over [`scalar::Real`] (`f32`, `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod base;
pub mod cocycle;
pub mod fiber;
pub mod linalg;
pub mod livsic;
pub mod rng;
pub mod scalar;
pub mod shadowing;
pub mod spectral;

pub type Mat64 = linalg::Mat<f64>;
pub type FiberPoint64 = fiber::FiberPoint<f64>;
pub type FiberDiffeo64 = fiber::FiberDiffeo<f64>;
pub type Cocycle64 = cocycle::Cocycle<f64>;
pub type CocycleFamily64 = cocycle::CocycleFamily<f64>;
pub type TransferFamily64 = cocycle::TransferFamily<f64>;
pub type SkewPoint64 = cocycle::SkewPoint<f64>;
pub type TransferFunction64 = livsic::TransferFunction<f64>;
pub type Classification64 = livsic::Classification<f64>;
pub type ShadowingResult64 = shadowing::ShadowingResult<f64>;
