use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected ambient degree {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point {point} has modulus {modulus} but must lie in the open unit disc")]
    OutsideDisc { point: String, modulus: f64 },

    #[error("invalid truncation config: {0}")]
    InvalidConfig(String),

    #[error("vectors are not orthonormal: max |G - I| = {deviation:e}")]
    NotOrthonormal {
        deviation: f64,
        gram: Vec<Vec<(f64, f64)>>,
    },

    #[error("subspace is not invariant: residual {residual:e} exceeds {threshold:e}")]
    NotInvariant { residual: f64, threshold: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("iteration did not converge after {iterations} steps (last residual {last:e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        trace: Vec<f64>,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}
