//! Dense factorizations generic over [`Scalar`](crate::Scalar).
//!
//! All solvers are square-only. A pivot counts as singular when its magnitude
//! falls below [`SINGULAR_RTOL`] times the largest absolute entry of the input.

mod cholesky;
mod lu;
mod qr;

use thiserror::Error;

pub use cholesky::{cholesky_factor, CholeskyFactors};
pub use lu::{lu_factor, LuFactors};
pub use qr::{qr_factor, QrFactors, QrPivoting};

use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// Relative singularity and symmetry threshold.
pub const SINGULAR_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("expected {expected} values, got {actual}")]
    DataLength { expected: usize, actual: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular: pivot {index} has magnitude {magnitude:e}")]
    Singular { index: usize, magnitude: f64 },
    #[error("matrix is not positive definite: pivot {index} is {pivot:e}")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
}

fn require_square<S>(a: &DenseMatrix<S>) -> Result<usize, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    Ok(a.rows())
}

fn require_rhs<S>(n: usize, b: &DenseMatrix<S>, op: &'static str) -> Result<(), LinalgError> {
    if b.rows() != n {
        return Err(LinalgError::DimensionMismatch {
            op,
            left: (n, n),
            right: b.shape(),
        });
    }
    Ok(())
}

fn singular_tol<S: Scalar>(a: &DenseMatrix<S>) -> f64 {
    SINGULAR_RTOL * a.max_abs()
}

#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn is_negligible(x: f64, tol: f64) -> bool {
    // `!(x >= tol)` also rejects NaN
    !(x.abs() >= tol) || x == 0.0
}
