//! Matrix operations with symbolic adjoints.
//!
//! Each operation computes its result with the passive kernels, records one
//! edge-free tape entry per output scalar, and embeds a callback that applies
//! the matrix-level adjoint rule in the reverse sweep:
//!
//! | operation            | adjoint increments                          | payload            |
//! |----------------------|---------------------------------------------|--------------------|
//! | `C = A B`            | `A_bar += C_bar B^T`, `B_bar += A^T C_bar`  | `A`, `B`           |
//! | `x = A^{-1} b`       | `b_bar += A^{-T} x_bar`, `A_bar -= b_bar x^T` | `x` (+ factors)  |
//! | `C = A^{-1}`         | `A_bar -= C^T C_bar C^T`                    | `C^T`              |
//! | `y = log abs det A`  | `A_bar += y_bar A^{-T}`                     | none (+ factors)   |
//!
//! Solvers factorize once in [`SymbolicSolver::new`] and retain the factors
//! on the tape, so the adjoint of a solve costs two triangular sweeps instead
//! of a re-taped factorization. All write-backs are increments; an input may
//! feed any number of consumers.

use std::rc::Rc;

use thiserror::Error;

use crate::adjoint::AReal;
use crate::linalg::{
    cholesky_factor, lu_factor, qr_factor, CholeskyFactors, LinalgError, LuFactors, QrFactors, QrPivoting,
};
use crate::matrix::DenseMatrix;
use crate::tape::{AdjointRule, CallbackRecord, Tape, TapeError, VarRef};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SymbolicError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Tape(#[from] TapeError),
    #[error("operands live on different tapes")]
    TapeMismatch,
    #[error("{op} is not available for {kind:?} solvers")]
    UnsupportedKind { op: &'static str, kind: SolverKind },
}

/// Matrix of active scalars stored as plain values plus tape references.
#[derive(Clone, Debug)]
pub struct ActiveMatrix<'t> {
    values: DenseMatrix<f64>,
    refs: Vec<VarRef>,
    tape: &'t Tape,
}

impl<'t> ActiveMatrix<'t> {
    /// Registers every entry of `values` as an independent variable.
    pub fn register(tape: &'t Tape, values: DenseMatrix<f64>) -> Result<Self, SymbolicError> {
        let refs = fresh_refs(tape, values.rows() * values.cols())?;
        Ok(ActiveMatrix { values, refs, tape })
    }

    /// A matrix whose entries are all passive.
    pub fn passive(tape: &'t Tape, values: DenseMatrix<f64>) -> Self {
        let refs = vec![VarRef::PASSIVE; values.rows() * values.cols()];
        ActiveMatrix { values, refs, tape }
    }

    /// Views scalars produced by ordinary overloaded arithmetic as a matrix.
    /// Nothing is recorded.
    pub fn from_scalars(tape: &'t Tape, m: &DenseMatrix<AReal<'t>>) -> Result<Self, SymbolicError> {
        if m.as_slice().iter().filter_map(|x| x.tape()).any(|t| !t.same(tape)) {
            return Err(SymbolicError::TapeMismatch);
        }
        Ok(ActiveMatrix {
            values: m.values(),
            refs: m.as_slice().iter().map(|x| x.var()).collect(),
            tape,
        })
    }

    /// Scalars for further overloaded arithmetic. Nothing is recorded.
    pub fn to_scalars(&self) -> DenseMatrix<AReal<'t>> {
        DenseMatrix::from_fn(self.rows(), self.cols(), |i, j| {
            let k = i * self.cols() + j;
            AReal::from_parts(self.values.as_slice()[k], self.refs[k], self.tape)
        })
    }

    pub fn values(&self) -> &DenseMatrix<f64> {
        &self.values
    }

    pub fn refs(&self) -> &[VarRef] {
        &self.refs
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    /// Current adjoints, zero for passive entries.
    pub fn adjoints(&self) -> DenseMatrix<f64> {
        let adj: Vec<f64> = self.refs.iter().map(|&r| self.tape.adjoint_or_zero(r)).collect();
        DenseMatrix::from_vec(self.rows(), self.cols(), adj).expect("shape preserved")
    }

    /// Sets the adjoint of every active entry. Passive entries are skipped.
    pub fn seed(&self, seeds: &DenseMatrix<f64>) -> Result<(), SymbolicError> {
        if seeds.shape() != self.values.shape() {
            return Err(LinalgError::DimensionMismatch {
                op: "seed",
                left: self.values.shape(),
                right: seeds.shape(),
            }
            .into());
        }
        for (&r, &s) in self.refs.iter().zip(seeds.as_slice()) {
            if !r.is_passive() {
                self.tape.set_adjoint(r, s)?;
            }
        }
        Ok(())
    }

    pub fn seed_all(&self, value: f64) -> Result<(), SymbolicError> {
        self.seed(&DenseMatrix::filled(self.rows(), self.cols(), value))
    }

    fn check_tape(&self, other: &ActiveMatrix<'_>) -> Result<(), SymbolicError> {
        if self.tape.same(other.tape) {
            Ok(())
        } else {
            Err(SymbolicError::TapeMismatch)
        }
    }

    /// `C = A B` with the product rule applied at matrix level.
    pub fn matmul(&self, rhs: &ActiveMatrix<'t>) -> Result<ActiveMatrix<'t>, SymbolicError> {
        self.check_tape(rhs)?;
        let c = self.values.matmul(&rhs.values)?;
        let refs = fresh_refs(self.tape, c.rows() * c.cols())?;
        let inputs = self.refs.iter().chain(&rhs.refs).copied().collect();
        self.tape.register_callback(CallbackRecord {
            inputs,
            outputs: refs.clone(),
            rule: Box::new(MatmulRule {
                a: self.values.clone(),
                b: rhs.values.clone(),
            }),
        })?;
        Ok(ActiveMatrix {
            values: c,
            refs,
            tape: self.tape,
        })
    }
}

fn fresh_refs(tape: &Tape, count: usize) -> Result<Vec<VarRef>, TapeError> {
    tape.new_variables(count)
}

struct MatmulRule {
    a: DenseMatrix<f64>,
    b: DenseMatrix<f64>,
}

impl AdjointRule for MatmulRule {
    fn payload_scalars(&self) -> usize {
        self.a.as_slice().len() + self.b.as_slice().len()
    }

    fn propagate(&self, out: &[f64], inc: &mut [f64]) {
        let (n, p) = (self.a.rows(), self.b.cols());
        let c_bar = DenseMatrix::from_vec(n, p, out.to_vec()).expect("output shape");
        let a_bar = c_bar.matmul_transpose_b(&self.b).expect("conforming");
        let b_bar = self.a.matmul_transpose_a(&c_bar).expect("conforming");
        let (ia, ib) = inc.split_at_mut(a_bar.as_slice().len());
        ia.copy_from_slice(a_bar.as_slice());
        ib.copy_from_slice(b_bar.as_slice());
    }
}

/// Factorization backing a [`SymbolicSolver`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolverKind {
    /// Partial-pivoting LU.
    Lu,
    /// Householder QR with column pivoting.
    QrColPiv,
    /// Stands in for fully pivoted QR; computed with column pivoting.
    QrFullPiv,
    /// `L L^T` for symmetric positive definite matrices. The adjoint treats
    /// every entry of `A` as an independent input.
    Cholesky,
}

#[derive(Debug)]
enum Factors {
    Lu(LuFactors<f64>),
    Qr(QrFactors<f64>),
    Cholesky(CholeskyFactors<f64>),
}

impl Factors {
    fn new(a: &DenseMatrix<f64>, kind: SolverKind) -> Result<Self, LinalgError> {
        Ok(match kind {
            SolverKind::Lu => Factors::Lu(lu_factor(a)?),
            SolverKind::QrColPiv | SolverKind::QrFullPiv => Factors::Qr(qr_factor(a, QrPivoting::Column)?),
            SolverKind::Cholesky => Factors::Cholesky(cholesky_factor(a)?),
        })
    }

    /// Scalars kept alive by the factor record.
    fn payload_scalars(&self) -> usize {
        match self {
            Factors::Lu(f) => f.dim() * f.dim() + f.pivots().len(),
            Factors::Qr(f) => f.dim() * f.dim() + f.tau().len() + f.col_pivots().len(),
            Factors::Cholesky(f) => f.dim() * f.dim(),
        }
    }

    fn solve(&self, b: &DenseMatrix<f64>) -> DenseMatrix<f64> {
        match self {
            Factors::Lu(f) => f.solve(b),
            Factors::Qr(f) => f.solve(b),
            Factors::Cholesky(f) => f.solve(b),
        }
        .expect("shape checked by caller")
    }

    fn solve_transposed(&self, b: &DenseMatrix<f64>) -> DenseMatrix<f64> {
        match self {
            Factors::Lu(f) => f.solve_transposed(b),
            Factors::Qr(f) => f.solve_transposed(b),
            Factors::Cholesky(f) => f.solve_transposed(b),
        }
        .expect("shape checked by caller")
    }
}

/// A factorized active matrix whose decomposition is reused by the adjoint
/// rules of every solve, inverse and log-determinant built from it.
///
/// Construction records nothing on the tape; it only charges the retained
/// factors to the tape's payload.
#[derive(Clone, Debug)]
pub struct SymbolicSolver<'t> {
    kind: SolverKind,
    factors: Rc<Factors>,
    a_refs: Rc<[VarRef]>,
    tape: &'t Tape,
}

impl<'t> SymbolicSolver<'t> {
    pub fn new(a: &ActiveMatrix<'t>, kind: SolverKind) -> Result<Self, SymbolicError> {
        let factors = Rc::new(Factors::new(&a.values, kind)?);
        a.tape.retain_payload(factors.clone(), factors.payload_scalars())?;
        Ok(SymbolicSolver {
            kind,
            factors,
            a_refs: a.refs.clone().into(),
            tape: a.tape,
        })
    }

    pub fn kind(&self) -> SolverKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match &*self.factors {
            Factors::Lu(f) => f.dim(),
            Factors::Qr(f) => f.dim(),
            Factors::Cholesky(f) => f.dim(),
        }
    }

    /// `x = A^{-1} b`; `b` may hold several columns.
    pub fn solve(&self, b: &ActiveMatrix<'t>) -> Result<ActiveMatrix<'t>, SymbolicError> {
        if !self.tape.same(b.tape) {
            return Err(SymbolicError::TapeMismatch);
        }
        let n = self.dim();
        if b.rows() != n {
            return Err(LinalgError::DimensionMismatch {
                op: "solve",
                left: (n, n),
                right: b.values.shape(),
            }
            .into());
        }
        let x = self.factors.solve(&b.values);
        let refs = fresh_refs(self.tape, x.rows() * x.cols())?;
        let inputs = self.a_refs.iter().chain(&b.refs).copied().collect();
        self.tape.register_callback(CallbackRecord {
            inputs,
            outputs: refs.clone(),
            rule: Box::new(SolveRule {
                factors: self.factors.clone(),
                x: x.clone(),
            }),
        })?;
        Ok(ActiveMatrix {
            values: x,
            refs,
            tape: self.tape,
        })
    }

    /// `C = A^{-1}`; LU solvers only.
    pub fn inverse(&self) -> Result<ActiveMatrix<'t>, SymbolicError> {
        let Factors::Lu(lu) = &*self.factors else {
            return Err(SymbolicError::UnsupportedKind {
                op: "inverse",
                kind: self.kind,
            });
        };
        let c = lu.inverse();
        let refs = fresh_refs(self.tape, c.rows() * c.cols())?;
        self.tape.register_callback(CallbackRecord {
            inputs: self.a_refs.to_vec(),
            outputs: refs.clone(),
            rule: Box::new(InverseRule { c_t: c.transpose() }),
        })?;
        Ok(ActiveMatrix {
            values: c,
            refs,
            tape: self.tape,
        })
    }

    /// `log |det A|`; QR and LU solvers.
    pub fn log_abs_det(&self) -> Result<AReal<'t>, SymbolicError> {
        let value = match &*self.factors {
            Factors::Lu(f) => f.log_abs_det(),
            Factors::Qr(f) => f.log_abs_det(),
            Factors::Cholesky(_) => {
                return Err(SymbolicError::UnsupportedKind {
                    op: "log_abs_det",
                    kind: self.kind,
                })
            }
        };
        let out = self.tape.new_variable()?;
        self.tape.register_callback(CallbackRecord {
            inputs: self.a_refs.to_vec(),
            outputs: vec![out],
            rule: Box::new(LogAbsDetRule {
                factors: self.factors.clone(),
                n: self.dim(),
            }),
        })?;
        Ok(AReal::from_parts(value, out, self.tape))
    }
}

struct SolveRule {
    factors: Rc<Factors>,
    x: DenseMatrix<f64>,
}

impl AdjointRule for SolveRule {
    fn payload_scalars(&self) -> usize {
        self.x.as_slice().len()
    }

    fn propagate(&self, out: &[f64], inc: &mut [f64]) {
        let (n, k) = self.x.shape();
        let x_bar = DenseMatrix::from_vec(n, k, out.to_vec()).expect("output shape");
        // A^T b_bar = x_bar
        let b_bar = self.factors.solve_transposed(&x_bar);
        let (ia, ib) = inc.split_at_mut(n * n);
        ib.copy_from_slice(b_bar.as_slice());
        // A_bar = -b_bar x^T
        for (i, row) in ia.chunks_exact_mut(n).enumerate() {
            let bb = b_bar.row(i);
            for (j, d) in row.iter_mut().enumerate() {
                let xj = self.x.row(j);
                *d = -bb.iter().zip(xj).map(|(p, q)| p * q).sum::<f64>();
            }
        }
    }
}

struct InverseRule {
    c_t: DenseMatrix<f64>,
}

impl AdjointRule for InverseRule {
    fn payload_scalars(&self) -> usize {
        self.c_t.as_slice().len()
    }

    fn propagate(&self, out: &[f64], inc: &mut [f64]) {
        let n = self.c_t.rows();
        let c_bar = DenseMatrix::from_vec(n, n, out.to_vec()).expect("output shape");
        // A_bar = -C^T C_bar C^T
        let a_bar = self
            .c_t
            .matmul(&c_bar)
            .and_then(|t| t.matmul(&self.c_t))
            .expect("conforming");
        for (d, s) in inc.iter_mut().zip(a_bar.as_slice()) {
            *d = -s;
        }
    }
}

struct LogAbsDetRule {
    factors: Rc<Factors>,
    n: usize,
}

impl AdjointRule for LogAbsDetRule {
    fn payload_scalars(&self) -> usize {
        0
    }

    fn propagate(&self, out: &[f64], inc: &mut [f64]) {
        let y_bar = out[0];
        if y_bar == 0.0 {
            return;
        }
        // A_bar = y_bar A^{-T}
        let a_inv_t = self.factors.solve_transposed(&DenseMatrix::identity(self.n));
        for (d, s) in inc.iter_mut().zip(a_inv_t.as_slice()) {
            *d = y_bar * s;
        }
    }
}
