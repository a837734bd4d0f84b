//! Dense 64-bit linear algebra used by both federated representation protocols.
//!
//! Everything here is a pure function over immutable inputs. The SVD is a
//! one-sided (Hestenes) Jacobi sweep, orthogonal masks come from Householder
//! QR of Gaussian blocks, and the dominant eigenpair is found by plain power
//! iteration with Rayleigh-quotient eigenvalue estimates.

mod matrix;
mod orthogonal;
mod power;
mod qr;
mod svd;

pub use matrix::Matrix;
pub use orthogonal::random_orthogonal;
pub use power::{power_iteration, power_iteration_from, DominantEigen};
pub use qr::householder_qr;
pub use svd::{svd, SvdResult, MAX_JACOBI_SWEEPS};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("data length {len} does not match {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, len: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("svd did not converge after {sweeps} Jacobi sweeps")]
    NoConvergence { sweeps: usize },
    #[error("no dominant eigenvector: matrix maps every start vector to zero")]
    NoDominantEigenvector,
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Euclidean norm of a vector.
pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
