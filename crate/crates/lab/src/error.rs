use livsic_core::base::BaseError;
use livsic_core::cocycle::CocycleError;
use livsic_core::fiber::FiberError;
use livsic_core::livsic::LivsicError;
use livsic_core::shadowing::ShadowError;
use livsic_core::spectral::SpectralError;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid config at `{path}`: {message}")]
    ConfigInvalid { path: String, message: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("bound violated: {0}")]
    BoundViolation(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl LabError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        LabError::ConfigInvalid { path: path.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::ConfigInvalid { .. } => 2,
            LabError::Precondition(_) => 3,
            LabError::BoundViolation(_) => 4,
            LabError::Numeric(_) | LabError::Io { .. } => 5,
        }
    }
}

impl From<BaseError> for LabError {
    fn from(e: BaseError) -> Self {
        match e {
            BaseError::InvalidModel(_) => LabError::config("base", e.to_string()),
            BaseError::BracketOutOfRange { .. }
            | BaseError::CapExceeded { .. }
            | BaseError::NotRecurrent { .. }
            | BaseError::NotDenseEnough { .. }
            | BaseError::WindowTooSmall { .. } => LabError::Precondition(e.to_string()),
            _ => LabError::Numeric(e.to_string()),
        }
    }
}

impl From<FiberError> for LabError {
    fn from(e: FiberError) -> Self {
        match e {
            FiberError::InversionDiverged { .. } => LabError::Numeric(e.to_string()),
            _ => LabError::Precondition(e.to_string()),
        }
    }
}

impl From<CocycleError> for LabError {
    fn from(e: CocycleError) -> Self {
        match e {
            CocycleError::Fiber(f) => f.into(),
            CocycleError::Numeric(_) => LabError::Numeric(e.to_string()),
            _ => LabError::Precondition(e.to_string()),
        }
    }
}

impl From<SpectralError> for LabError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::Cocycle(c) => c.into(),
            SpectralError::Singular { .. } | SpectralError::DimensionCollapse { .. } => LabError::Numeric(e.to_string()),
            SpectralError::ConeEscape { .. } | SpectralError::NotContained { .. } => LabError::BoundViolation(e.to_string()),
            _ => LabError::Precondition(e.to_string()),
        }
    }
}

impl From<ShadowError> for LabError {
    fn from(e: ShadowError) -> Self {
        match e {
            ShadowError::Base(b) => b.into(),
            ShadowError::Cocycle(c) => c.into(),
            ShadowError::Fiber(f) => f.into(),
            ShadowError::BoundViolated { .. } => LabError::BoundViolation(e.to_string()),
            ShadowError::TransformDiverged { .. } => LabError::Numeric(e.to_string()),
            _ => LabError::Precondition(e.to_string()),
        }
    }
}

impl From<LivsicError> for LabError {
    fn from(e: LivsicError) -> Self {
        match e {
            LivsicError::Base(b) => b.into(),
            LivsicError::Cocycle(c) => c.into(),
            LivsicError::Fiber(f) => f.into(),
            LivsicError::Spectral(s) => s.into(),
            LivsicError::Numeric(_) => LabError::Numeric(e.to_string()),
            LivsicError::PocViolated(_) | LivsicError::ExponentNonzero { .. } => LabError::Precondition(e.to_string()),
        }
    }
}
