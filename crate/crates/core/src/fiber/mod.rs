//! Fiber manifold (circle or 2-torus), its diffeomorphisms and distances.

pub mod diffeo;
pub mod distance;

use serde::{Deserialize, Serialize};

pub use diffeo::{grid_points, jac_to_mat, FiberDiffeo, FiberError, FiberPoint, Jac, Node};
pub use distance::{distance, distance_c0, distance_c1, DiffeoDistanceReport};

use crate::scalar::Real;

/// Nestable diffeomorphism descriptor as it appears in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase", deny_unknown_fields)]
pub enum DiffeoSpec {
    /// Translation by `v` (length `q`).
    Rotation { v: Vec<f64> },
    Shear {
        a: f64,
        #[serde(default = "default_k")]
        k: [i64; 2],
        #[serde(default)]
        j: usize,
    },
    Linear { matrix: [[i64; 2]; 2] },
    /// `parts[0] ∘ parts[1] ∘ …`
    Compose { parts: Vec<DiffeoSpec> },
    Inverse { of: Box<DiffeoSpec> },
}

fn default_k() -> [i64; 2] {
    [1, 0]
}

impl DiffeoSpec {
    pub fn build<T: Real>(&self, q: usize) -> Result<FiberDiffeo<T>, FiberError> {
        match self {
            DiffeoSpec::Rotation { v } => {
                if v.len() != q {
                    return Err(FiberError::DimMismatch(q, v.len()));
                }
                Ok(if q == 1 {
                    FiberDiffeo::rotation(T::lit(v[0]))
                } else {
                    FiberDiffeo::translation([T::lit(v[0]), T::lit(v[1])])
                })
            }
            DiffeoSpec::Shear { a, k, j } => FiberDiffeo::shear(q, T::lit(*a), *k, *j),
            DiffeoSpec::Linear { matrix } => {
                if q != 2 {
                    return Err(FiberError::InvalidGenerator("linear maps need a 2-torus fiber".into()));
                }
                FiberDiffeo::linear(*matrix)
            }
            DiffeoSpec::Compose { parts } => {
                let mut g = FiberDiffeo::identity(q);
                for p in parts {
                    g = g.compose(&p.build(q)?);
                }
                Ok(g)
            }
            DiffeoSpec::Inverse { of } => Ok(of.build::<T>(q)?.invert()),
        }
    }
}
