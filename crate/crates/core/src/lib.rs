//! Sandwiched quasi-relative entropies on positive definite matrices.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: Hermitian / SPD carriers, spectral calculus, Fréchet
//!   derivatives through Loewner matrices, spectral-box projection and seeded
//!   random generation.
//! - [`entropy`]: the parameterised fidelity `F_t(A,B) = tr(A^{(1-t)/2t} B A^{(1-t)/2t})^t`
//!   and the divergences and distances built on it.
//! - [`calculus`]: exact gradient and Hessian action of `X -> F_t(A,X)`, the
//!   strong-convexity / smoothness constants and related bounds.
//! - [`barycenter`]: the weighted barycenter objective with its certified
//!   projected gradient solver and a fixed-point cross-check.
//! - [`inequalities`]: eigenvalue chains and variational representations,
//!   with randomized verification suites over them.
//! - [`extended`]: double-double arithmetic used to re-verify borderline
//!   numerical findings.

#![forbid(unsafe_code)]

pub mod barycenter;
pub mod calculus;
pub mod entropy;
mod error;
pub mod extended;
pub mod format;
pub mod inequalities;
pub mod linalg;

pub use error::{Error, Result};
pub use linalg::{HermitianMatrix, MatrixJson, NormKind, ScalarFn, SpdMatrix, SpectralDecomp};

/// Lower guard on the entropy parameter: `t` must stay in `(T_MIN, 1 - T_MIN)`
/// for the convexity machinery.
pub const T_MIN: f64 = 1e-3;

/// Largest parameter accepted by the divergences that allow `t > 1`.
pub const T_MAX: f64 = 64.0;
