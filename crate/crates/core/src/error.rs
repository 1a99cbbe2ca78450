use thiserror::Error;

use crate::algebra::AlgebraShape;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabError {
    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch {
        left: AlgebraShape,
        right: AlgebraShape,
    },

    #[error("invalid algebra shape: {0}")]
    InvalidShape(String),

    #[error("element is not self-adjoint (residual {residual:e} > {tolerance:e})")]
    NotSelfAdjoint { residual: f64, tolerance: f64 },

    #[error("element is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("element is neither unitary nor zero (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("element is not in I_1(A_sa): {0}")]
    NotInvertibleSelfAdjoint(String),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("operation requires a nonzero element")]
    ZeroInput,

    #[error("control function expects {expected} arguments, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("invalid control parameters: {0}")]
    InvalidControl(String),

    #[error("invalid mapping spec: {0}")]
    InvalidSpec(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("overflow guard: ‖3^n x‖ = {norm:e} at n = {n}")]
    Overflow { n: u32, norm: f64 },

    #[error("orbit depth {requested} exceeds cap {cap}")]
    DepthExceeded { requested: u32, cap: u32 },

    #[error("sample set has insufficient orbit depth: need {needed}, have {have}")]
    InsufficientDepth { needed: u32, have: u32 },
}

pub type Result<T> = std::result::Result<T, StabError>;
