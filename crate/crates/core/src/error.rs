use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HolonomyError {
    #[error("invalid dimension {0}: generator bases need D >= 2")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} violated (residual {residual:.3e})")]
    ConstraintViolation { what: &'static str, residual: f64 },

    #[error("internal consistency check failed: {what} (residual {residual:.3e})")]
    Inconsistent { what: &'static str, residual: f64 },

    #[error("Stokes tensor does not describe a state (minimum eigenvalue {min_eigenvalue:.3e})")]
    Unphysical { min_eigenvalue: f64 },

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("state is not maximally entangled (|det M| = {abs_det:.6})")]
    NotMaximallyEntangled { abs_det: f64 },

    #[error("state is not pure (purity {purity:.6})")]
    NotPure { purity: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("B matrix is singular (smallest singular value {sigma_min:.3e})")]
    SingularB { sigma_min: f64 },

    #[error("connection is singular at t = {t} (smallest singular value {sigma_min:.3e})")]
    SingularConnection { t: f64, sigma_min: f64 },

    #[error("loop is not closed: |U(n) - 1| = {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    OpenLoop { residual: f64, tolerance: f64 },

    #[error("parallel direction is undefined (normalizer vanishes)")]
    DegenerateDirection,
}

impl HolonomyError {
    /// Numerical failures as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            HolonomyError::SingularB { .. }
                | HolonomyError::SingularConnection { .. }
                | HolonomyError::OpenLoop { .. }
                | HolonomyError::Inconsistent { .. }
                | HolonomyError::DegenerateDirection
        )
    }
}

pub type Result<T> = std::result::Result<T, HolonomyError>;
