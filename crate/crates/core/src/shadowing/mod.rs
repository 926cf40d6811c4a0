//! Localized fiber maps, conjugated C¹ gaps, finite-horizon stable graphs,
//! fake stable points and the fiber closing lemma.

mod bump;
mod close;
mod fake;
mod gap;
mod graph;

use thiserror::Error;

pub use bump::{bump, bump_slope, localized_gap, loglog_slope, Localized};
pub use close::{fiber_close, ShadowingResult};
pub use fake::{
    calibrate_c, default_alpha2, estimate_local_constant, fake_stable_point, local_invariance_check, skew_dist, FakePoint,
    FakeSetParams, InvarianceReport, Mode, SAFETY,
};
pub use gap::{c1_gap, conjugated_gap_check, FnMap, GapReport, TangentMap};
pub use graph::{finite_graph_transform, Graph, GraphTransform, Splitting, GRAPH_NODES, GRAPH_TOL};

#[derive(Debug, Error)]
pub enum ShadowError {
    #[error("bound violated: measured {measured:e} against {bound:e}")]
    BoundViolated { measured: f64, bound: f64 },
    #[error("graph transform diverged at index {index}: Lipschitz constant {lipschitz}")]
    TransformDiverged { index: usize, lipschitz: f64 },
    #[error("no fiber coordinate meets the contraction certificate (best weighted deviation {best:e})")]
    NoStablePoint { best: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Base(#[from] crate::base::BaseError),
    #[error(transparent)]
    Cocycle(#[from] crate::cocycle::CocycleError),
    #[error(transparent)]
    Fiber(#[from] crate::fiber::FiberError),
}
