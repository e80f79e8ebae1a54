use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not antisymmetric (|M + M^T| = {0:e})")]
    NotAntisymmetric(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("matrix is not a rotation (orthonormality residual {0:e})")]
    NotRotation(f64),

    #[error("matrix is singular")]
    Singular,

    #[error("frame transform rotation does not fix e3 (|R e3 - e3| = {0:e})")]
    NotIsotropy(f64),

    #[error("gain condition violated: {0}")]
    GainConditionViolated(String),

    #[error("matrix is not Hurwitz (largest real part {0:e})")]
    NotHurwitz(f64),

    #[error("eigenvalue iteration did not converge")]
    EigenNoConvergence,

    #[error("vector is not unit length (norm {0})")]
    NotUnitVector(f64),

    #[error("yaw of the rotation error is undefined (degenerate attitude)")]
    YawDegenerate,

    #[error("non-finite state at step {0}")]
    NonFiniteState(usize),

    #[error("auxiliary state drifted at step {step} (|dZ/dt| = {norm:e})")]
    AuxiliaryDrift { step: usize, norm: f64 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
