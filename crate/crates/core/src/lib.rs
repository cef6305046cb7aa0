//! Finite-section laboratory for invariant subspaces of finite-rank
//! perturbations of the shift, the backward shift and Toeplitz operators on
//! the Hardy space H².
//!
//! Everything lives on polynomials of degree at most `N` (see
//! [`TruncationConfig`]). Operators are dense complex matrices, subspaces are
//! orthonormal bases, and each structural statement is turned into a residual
//! that can be compared against a tolerance.

pub mod blaschke;
pub mod constructive;
pub mod error;
pub mod hardy;
pub mod linalg;
pub mod nearly;
pub mod operators;
pub mod random;
pub mod report;
pub mod scenario;
pub mod subspace;
pub mod symbol;

pub use num_complex::Complex64 as C64;

pub use blaschke::BlaschkeProduct;
pub use error::{Error, Result};
pub use hardy::{HardyFunction, TruncationConfig, VectorHardyFunction};
pub use operators::{OperatorMatrix, PerturbationSpec, RankOneTerm};
pub use report::VerificationReport;
pub use subspace::Subspace;
pub use symbol::SymbolSpec;
