//! Reverse- and tangent-mode algorithmic differentiation for dense linear
//! algebra, with matrix-level symbolic adjoints.
//!
//! * [`Tape`] records scalar operations and embedded symbolic callbacks, and
//!   interprets them in reverse.
//! * [`AReal`] and [`Expr`] are the adjoint-mode scalars (eager and fused
//!   recording); [`TReal`] is the tangent-mode scalar.
//! * [`DenseMatrix`] and the [`linalg`] kernels are generic over [`Scalar`]:
//!   passive with `f64`, fully taped with `AReal`.
//! * [`ActiveMatrix`] and [`SymbolicSolver`] replace scalar taping of matrix
//!   products, solves, inverses and log-determinants with symbolic adjoint
//!   rules whose tape footprint is quadratic in the dimension.
//!
//! ```
//! use hyad_core::{ActiveMatrix, DenseMatrix, SolverKind, SymbolicSolver, Tape};
//!
//! let tape = Tape::new();
//! let a = ActiveMatrix::register(&tape, DenseMatrix::from_vec(2, 2, vec![2.0, 0.0, 0.0, 4.0])?)?;
//! let b = ActiveMatrix::register(&tape, DenseMatrix::column(vec![2.0, 8.0]))?;
//! let x = SymbolicSolver::new(&a, SolverKind::Lu)?.solve(&b)?;
//! x.seed_all(1.0)?;
//! tape.interpret_reverse()?;
//! assert_eq!(b.adjoints().as_slice(), &[0.5, 0.25]);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod adjoint;
pub mod elementwise;
pub mod linalg;
pub mod matrix;
pub mod scalar;
pub mod symbolic;
pub mod tangent;
pub mod tape;

pub use adjoint::{AReal, Expr};
pub use elementwise::Policy;
pub use linalg::{
    cholesky_factor, lu_factor, qr_factor, CholeskyFactors, LinalgError, LuFactors, QrFactors, QrPivoting,
};
pub use matrix::DenseMatrix;
pub use scalar::Scalar;
pub use symbolic::{ActiveMatrix, SolverKind, SymbolicError, SymbolicSolver};
pub use tangent::TReal;
pub use tape::{AdjointRule, CallbackRecord, Edge, Tape, TapeError, TapePosition, TapeStats, VarRef};
