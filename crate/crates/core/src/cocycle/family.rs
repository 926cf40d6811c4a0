//! Built-in cocycle generators and transfer functions.
//!
//! Parameters depend on the base through one harmonic of the base features
//! `φ(x) ∈ [0,1)²` (torus coordinates, or `m`-adic cylinder coordinates on
//! the shift), written `c(x) = cos 2π⟨h, φ(x)⟩` and `s(x) = sin 2π⟨h, φ(x)⟩`.

use serde::{Deserialize, Serialize};

use crate::fiber::{DiffeoSpec, FiberDiffeo, FiberError};
use crate::scalar::Real;

fn phase<T: Real>(h: [i64; 2], phi: [f64; 2]) -> T {
    T::lit(std::f64::consts::TAU * (h[0] as f64 * phi[0] + h[1] as f64 * phi[1]))
}

/// Transfer functions `u: M → Diff(N)` with smooth base dependence.
#[derive(Clone, Debug)]
pub enum TransferFamily<T> {
    Constant(FiberDiffeo<T>),
    /// rotation by `amplitude · c(x)`
    Rotation { amplitude: T, harmonic: [i64; 2] },
    /// circle shear with amplitude `amplitude · c(x)`
    Shear { amplitude: T, harmonic: [i64; 2] },
    /// circle shear with amplitude `amplitude · c(x)` after rotation by `rotation · s(x)`
    ShearRotation { amplitude: T, rotation: T, harmonic: [i64; 2] },
    /// translation of `T²` by `amplitude ⊙ (c(x), s(x))`
    Translation2 { amplitude: [T; 2], harmonic: [i64; 2] },
    /// torus shear `y ↦ y + (a(x)/2π) sin(2π⟨k,y⟩) e_j`, `a(x) = amplitude · c(x)`
    TorusShear { amplitude: T, harmonic: [i64; 2], k: [i64; 2], j: usize },
}

impl<T: Real> TransferFamily<T> {
    pub fn dim(&self) -> usize {
        match self {
            TransferFamily::Constant(g) => g.dim(),
            TransferFamily::Rotation { .. } | TransferFamily::Shear { .. } | TransferFamily::ShearRotation { .. } => 1,
            TransferFamily::Translation2 { .. } | TransferFamily::TorusShear { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<(), FiberError> {
        let one = T::one();
        match self {
            TransferFamily::Shear { amplitude, .. } | TransferFamily::ShearRotation { amplitude, .. } if amplitude.abs() >= one => {
                Err(FiberError::InvalidGenerator("transfer shear amplitude must be below 1".into()))
            }
            TransferFamily::TorusShear { amplitude, k, j, .. } => {
                FiberDiffeo::shear(2, *amplitude, *k, *j).map(|_| ())
            }
            _ => Ok(()),
        }
    }

    pub fn at(&self, phi: [f64; 2]) -> FiberDiffeo<T> {
        match self {
            TransferFamily::Constant(g) => g.clone(),
            TransferFamily::Rotation { amplitude, harmonic } => {
                FiberDiffeo::rotation(*amplitude * phase::<T>(*harmonic, phi).cos())
            }
            TransferFamily::Shear { amplitude, harmonic } => {
                FiberDiffeo::circle_shear(*amplitude * phase::<T>(*harmonic, phi).cos()).expect("validated amplitude")
            }
            TransferFamily::ShearRotation { amplitude, rotation, harmonic } => {
                let p = phase::<T>(*harmonic, phi);
                FiberDiffeo::circle_shear(*amplitude * p.cos())
                    .expect("validated amplitude")
                    .compose(&FiberDiffeo::rotation(*rotation * p.sin()))
            }
            TransferFamily::Translation2 { amplitude, harmonic } => {
                let p = phase::<T>(*harmonic, phi);
                FiberDiffeo::translation([amplitude[0] * p.cos(), amplitude[1] * p.sin()])
            }
            TransferFamily::TorusShear { amplitude, harmonic, k, j } => {
                let p = phase::<T>(*harmonic, phi);
                FiberDiffeo::shear(2, *amplitude * p.cos(), *k, *j).expect("validated amplitude")
            }
        }
    }
}

/// Generators `A: M → Diff(N)`.
#[derive(Clone, Debug)]
pub enum CocycleFamily<T> {
    Constant(FiberDiffeo<T>),
    /// rotation by `offset + amplitude · s(x)`
    Rotation { offset: T, amplitude: T, harmonic: [i64; 2] },
    /// circle shear with amplitude `a0 + amplitude · c(x)`
    Shear { a0: T, amplitude: T, harmonic: [i64; 2] },
    /// `y ↦ L y + amplitude · (c(x), s(x))` on `T²`
    Linear { matrix: [[i64; 2]; 2], amplitude: T, harmonic: [i64; 2] },
    /// `A(x) = u(f x) ∘ u(x)⁻¹`
    Coboundary(TransferFamily<T>),
    /// `A(x) = P(x) ∘ inner(x)` with `P(x)` the translation by `epsilon · s(x)`
    /// (along `(1, 1/2)` on `T²`)
    Perturbed { inner: Box<CocycleFamily<T>>, epsilon: T, harmonic: [i64; 2] },
}

impl<T: Real> CocycleFamily<T> {
    pub fn dim(&self) -> usize {
        match self {
            CocycleFamily::Constant(g) => g.dim(),
            CocycleFamily::Rotation { .. } | CocycleFamily::Shear { .. } => 1,
            CocycleFamily::Linear { .. } => 2,
            CocycleFamily::Coboundary(u) => u.dim(),
            CocycleFamily::Perturbed { inner, .. } => inner.dim(),
        }
    }

    pub fn validate(&self) -> Result<(), FiberError> {
        match self {
            CocycleFamily::Shear { a0, amplitude, .. } if a0.abs() + amplitude.abs() >= T::one() => {
                Err(FiberError::InvalidGenerator("shear cocycle needs |a0| + |amplitude| < 1".into()))
            }
            CocycleFamily::Linear { matrix, .. } => FiberDiffeo::<T>::linear(*matrix).map(|_| ()),
            CocycleFamily::Coboundary(u) => u.validate(),
            CocycleFamily::Perturbed { inner, .. } => inner.validate(),
            _ => Ok(()),
        }
    }

    /// `A(x)` from the features of `x` and of `f(x)`; the latter is only
    /// read by coboundaries.
    pub fn at(&self, phi: [f64; 2], phi_next: impl Fn() -> [f64; 2] + Copy) -> FiberDiffeo<T> {
        match self {
            CocycleFamily::Constant(g) => g.clone(),
            CocycleFamily::Rotation { offset, amplitude, harmonic } => {
                FiberDiffeo::rotation(*offset + *amplitude * phase::<T>(*harmonic, phi).sin())
            }
            CocycleFamily::Shear { a0, amplitude, harmonic } => {
                FiberDiffeo::circle_shear(*a0 + *amplitude * phase::<T>(*harmonic, phi).cos()).expect("validated amplitude")
            }
            CocycleFamily::Linear { matrix, amplitude, harmonic } => {
                let p = phase::<T>(*harmonic, phi);
                FiberDiffeo::translation([*amplitude * p.cos(), *amplitude * p.sin()])
                    .compose(&FiberDiffeo::linear(*matrix).expect("validated matrix"))
            }
            CocycleFamily::Coboundary(u) => u.at(phi_next()).compose(&u.at(phi).invert()),
            CocycleFamily::Perturbed { inner, epsilon, harmonic } => {
                let e = *epsilon * phase::<T>(*harmonic, phi).sin();
                let p = if inner.dim() == 1 {
                    FiberDiffeo::rotation(e)
                } else {
                    FiberDiffeo::translation([e, e / T::lit(2.0)])
                };
                p.compose(&inner.at(phi, phi_next))
            }
        }
    }

    /// True for families that are coboundaries by construction.
    pub fn is_coboundary(&self) -> bool {
        matches!(self, CocycleFamily::Coboundary(_))
    }
}

fn default_harmonic() -> [i64; 2] {
    [1, 0]
}

/// Transfer-function descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransferSpec {
    Constant { diffeo: DiffeoSpec, dim: usize },
    Rotation { amplitude: f64, #[serde(default = "default_harmonic")] harmonic: [i64; 2] },
    Shear { amplitude: f64, #[serde(default = "default_harmonic")] harmonic: [i64; 2] },
    ShearRotation { amplitude: f64, rotation: f64, #[serde(default = "default_harmonic")] harmonic: [i64; 2] },
    Translation2 { amplitude: [f64; 2], #[serde(default = "default_harmonic")] harmonic: [i64; 2] },
    TorusShear {
        amplitude: f64,
        #[serde(default = "default_harmonic")]
        harmonic: [i64; 2],
        k: [i64; 2],
        j: usize,
    },
}

impl TransferSpec {
    pub fn build<T: Real>(&self) -> Result<TransferFamily<T>, FiberError> {
        let l = T::lit;
        let u = match self {
            TransferSpec::Constant { diffeo, dim } => TransferFamily::Constant(diffeo.build(*dim)?),
            TransferSpec::Rotation { amplitude, harmonic } => TransferFamily::Rotation { amplitude: l(*amplitude), harmonic: *harmonic },
            TransferSpec::Shear { amplitude, harmonic } => TransferFamily::Shear { amplitude: l(*amplitude), harmonic: *harmonic },
            TransferSpec::ShearRotation { amplitude, rotation, harmonic } => {
                TransferFamily::ShearRotation { amplitude: l(*amplitude), rotation: l(*rotation), harmonic: *harmonic }
            }
            TransferSpec::Translation2 { amplitude, harmonic } => {
                TransferFamily::Translation2 { amplitude: [l(amplitude[0]), l(amplitude[1])], harmonic: *harmonic }
            }
            TransferSpec::TorusShear { amplitude, harmonic, k, j } => {
                TransferFamily::TorusShear { amplitude: l(*amplitude), harmonic: *harmonic, k: *k, j: *j }
            }
        };
        u.validate()?;
        Ok(u)
    }
}

/// Cocycle descriptor, e.g. `{"family": "rotation", "amplitude": 0.1, "harmonic": [1, 0]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CocycleSpec {
    Constant { diffeo: DiffeoSpec, dim: usize },
    Rotation {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        #[serde(default = "default_harmonic")]
        harmonic: [i64; 2],
    },
    Shear {
        a0: f64,
        #[serde(default)]
        amplitude: f64,
        #[serde(default = "default_harmonic")]
        harmonic: [i64; 2],
    },
    Linear {
        matrix: [[i64; 2]; 2],
        #[serde(default)]
        amplitude: f64,
        #[serde(default = "default_harmonic")]
        harmonic: [i64; 2],
    },
    Coboundary { transfer: TransferSpec },
    Perturbed {
        inner: Box<CocycleSpec>,
        epsilon: f64,
        #[serde(default = "default_harmonic")]
        harmonic: [i64; 2],
    },
}

impl CocycleSpec {
    pub fn build<T: Real>(&self) -> Result<CocycleFamily<T>, FiberError> {
        let l = T::lit;
        let fam = match self {
            CocycleSpec::Constant { diffeo, dim } => CocycleFamily::Constant(diffeo.build(*dim)?),
            CocycleSpec::Rotation { offset, amplitude, harmonic } => {
                CocycleFamily::Rotation { offset: l(*offset), amplitude: l(*amplitude), harmonic: *harmonic }
            }
            CocycleSpec::Shear { a0, amplitude, harmonic } => CocycleFamily::Shear { a0: l(*a0), amplitude: l(*amplitude), harmonic: *harmonic },
            CocycleSpec::Linear { matrix, amplitude, harmonic } => {
                CocycleFamily::Linear { matrix: *matrix, amplitude: l(*amplitude), harmonic: *harmonic }
            }
            CocycleSpec::Coboundary { transfer } => CocycleFamily::Coboundary(transfer.build()?),
            CocycleSpec::Perturbed { inner, epsilon, harmonic } => {
                CocycleFamily::Perturbed { inner: Box::new(inner.build()?), epsilon: l(*epsilon), harmonic: *harmonic }
            }
        };
        fam.validate()?;
        Ok(fam)
    }
}
