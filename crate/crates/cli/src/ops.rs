//! Benchmark operations, input generation, and one measured execution.

use std::fmt;
use std::hint::black_box;
use std::time::Instant;

use clap::ValueEnum;
use hyad_core::{
    cholesky_factor, lu_factor, qr_factor, AReal, ActiveMatrix, DenseMatrix, LinalgError, QrPivoting, Scalar,
    SolverKind, SymbolicError, SymbolicSolver, Tape, TapeError, TapeStats,
};
use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Op {
    #[value(name = "matmul")]
    Matmul,
    #[value(name = "solve-lu")]
    SolveLu,
    #[value(name = "solve-qr-colpiv")]
    SolveQrColpiv,
    #[value(name = "solve-qr-fullpiv")]
    SolveQrFullpiv,
    #[value(name = "solve-llt")]
    SolveLlt,
    #[value(name = "inverse")]
    Inverse,
    #[value(name = "logabsdet")]
    Logabsdet,
}

impl Op {
    pub const ALL: [Op; 7] = [
        Op::Matmul,
        Op::SolveLu,
        Op::SolveQrColpiv,
        Op::SolveQrFullpiv,
        Op::SolveLlt,
        Op::Inverse,
        Op::Logabsdet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Op::Matmul => "matmul",
            Op::SolveLu => "solve-lu",
            Op::SolveQrColpiv => "solve-qr-colpiv",
            Op::SolveQrFullpiv => "solve-qr-fullpiv",
            Op::SolveLlt => "solve-llt",
            Op::Inverse => "inverse",
            Op::Logabsdet => "logabsdet",
        }
    }

    /// Solver backing the op, if any. The log-determinant uses QR.
    pub fn solver_kind(self) -> Option<SolverKind> {
        match self {
            Op::Matmul => None,
            Op::SolveLu | Op::Inverse => Some(SolverKind::Lu),
            Op::SolveQrColpiv | Op::Logabsdet => Some(SolverKind::QrColPiv),
            Op::SolveQrFullpiv => Some(SolverKind::QrFullPiv),
            Op::SolveLlt => Some(SolverKind::Cholesky),
        }
    }

    /// The factorization reads only one triangle of a symmetric input.
    pub fn symmetric_input(self) -> bool {
        self == Op::SolveLlt
    }

    pub fn output_shape(self, n: usize) -> (usize, usize) {
        match self {
            Op::Matmul | Op::Inverse => (n, n),
            Op::SolveLu | Op::SolveQrColpiv | Op::SolveQrFullpiv | Op::SolveLlt => (n, 1),
            Op::Logabsdet => (1, 1),
        }
    }

    /// The op written once over any scalar type. Over `AReal` this is the
    /// algorithmic baseline; over `f64` it is the primal.
    pub fn kernel<S: Scalar>(self, a: &DenseMatrix<S>, b: Option<&DenseMatrix<S>>) -> Result<DenseMatrix<S>, LinalgError> {
        let rhs = || b.expect("op takes a second operand");
        Ok(match self {
            Op::Matmul => a.matmul(rhs())?,
            Op::SolveLu => lu_factor(a)?.solve(rhs())?,
            Op::SolveQrColpiv | Op::SolveQrFullpiv => qr_factor(a, QrPivoting::Column)?.solve(rhs())?,
            Op::SolveLlt => cholesky_factor(a)?.solve(rhs())?,
            Op::Inverse => lu_factor(a)?.inverse(),
            Op::Logabsdet => DenseMatrix::filled(1, 1, qr_factor(a, QrPivoting::Column)?.log_abs_det()),
        })
    }

    pub fn symbolic<'t>(
        self,
        a: &ActiveMatrix<'t>,
        b: Option<&ActiveMatrix<'t>>,
    ) -> Result<ActiveMatrix<'t>, SymbolicError> {
        let rhs = || b.expect("op takes a second operand");
        match self {
            Op::Matmul => a.matmul(rhs()),
            Op::Inverse => SymbolicSolver::new(a, SolverKind::Lu)?.inverse(),
            Op::Logabsdet => {
                let y = SymbolicSolver::new(a, SolverKind::QrColPiv)?.log_abs_det()?;
                ActiveMatrix::from_scalars(a.tape(), &DenseMatrix::filled(1, 1, y))
            }
            _ => {
                let kind = self.solver_kind().expect("solve ops have a solver");
                SymbolicSolver::new(a, kind)?.solve(rhs())
            }
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Symbolic,
    Algorithmic,
    Primal,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Symbolic => "symbolic",
            Mode::Algorithmic => "algorithmic",
            Mode::Primal => "primal",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("no usable input for {op} at n={n} after {attempts} draws: {last}")]
    Resample {
        op: Op,
        n: usize,
        attempts: usize,
        last: LinalgError,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error(transparent)]
    Tape(#[from] TapeError),
}

pub const MAX_DRAWS: usize = 8;

/// Uniform `[-1, 1]` from the top 53 bits of each draw: `2 k 2^-53 - 1`.
pub fn unit_uniform(rng: &mut impl RngCore) -> f64 {
    let k = rng.next_u64() >> 11;
    2.0 * (k as f64) * (1.0 / (1u64 << 53) as f64) - 1.0
}

/// Input stream for one size. Depends on `(seed, n)` only, so every op and
/// mode sees the same draws at a given size.
pub fn stream(seed: u64, n: usize) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn uniform(rng: &mut impl RngCore, rows: usize, cols: usize) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(rows, cols, |_, _| unit_uniform(rng))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Workload {
    pub a: DenseMatrix<f64>,
    pub b: Option<DenseMatrix<f64>>,
}

impl Workload {
    /// Draws inputs for `op` at size `n`, redrawing from the same stream while
    /// the factorization the op needs fails.
    pub fn generate(op: Op, n: usize, seed: u64) -> Result<Workload, RunError> {
        let mut rng = stream(seed, n);
        let mut last = None;
        for _ in 0..MAX_DRAWS {
            let w = Workload::draw(op, n, &mut rng);
            match w.check(op) {
                Ok(()) => return Ok(w),
                Err(e) => last = Some(e),
            }
        }
        Err(RunError::Resample {
            op,
            n,
            attempts: MAX_DRAWS,
            last: last.expect("at least one draw"),
        })
    }

    fn draw(op: Op, n: usize, rng: &mut impl RngCore) -> Workload {
        let m = uniform(rng, n, n);
        let a = if op.symmetric_input() {
            // M^T M + n I, symmetrized exactly
            let mut s = m.matmul_transpose_a(&m).expect("square");
            for i in 0..n {
                s[(i, i)] += n as f64;
            }
            DenseMatrix::from_fn(n, n, |i, j| if i >= j { s[(i, j)] } else { s[(j, i)] })
        } else {
            m
        };
        let b = match op {
            Op::Matmul => Some(uniform(rng, n, n)),
            Op::Inverse | Op::Logabsdet => None,
            _ => Some(uniform(rng, n, 1)),
        };
        Workload { a, b }
    }

    fn check(&self, op: Op) -> Result<(), LinalgError> {
        match op.solver_kind() {
            None => Ok(()),
            Some(SolverKind::Lu) => lu_factor(&self.a).map(drop),
            Some(SolverKind::Cholesky) => cholesky_factor(&self.a).map(drop),
            Some(_) => qr_factor(&self.a, QrPivoting::Column).map(drop),
        }
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }
}

/// Timings of one execution in seconds, plus the tape it left behind.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sample {
    pub stats: TapeStats,
    pub t_primal: f64,
    pub t_adjoint: f64,
}

impl Sample {
    pub fn t_total(&self) -> f64 {
        self.t_primal + self.t_adjoint
    }
}

/// Output seeds for the reverse sweep.
pub enum Seeds<'a> {
    Ones,
    Values(&'a DenseMatrix<f64>),
}

impl Seeds<'_> {
    fn get(&self, k: usize) -> f64 {
        match self {
            Seeds::Ones => 1.0,
            Seeds::Values(m) => m.as_slice()[k],
        }
    }
}

/// Adjoints of the inputs after one reverse sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct InputAdjoints {
    pub a: DenseMatrix<f64>,
    pub b: Option<DenseMatrix<f64>>,
}

/// Runs `op` once in `mode` on a clean `tape`: the augmented primal run, then
/// the seeded reverse sweep. Primal mode records nothing and has no adjoint
/// phase. The tape is left as recorded so its stats can be read.
pub fn execute(
    op: Op,
    mode: Mode,
    w: &Workload,
    tape: &Tape,
    seeds: Seeds<'_>,
) -> Result<(Sample, Option<InputAdjoints>), RunError> {
    match mode {
        Mode::Primal => {
            let t0 = Instant::now();
            let y = op.kernel(black_box(&w.a), black_box(w.b.as_ref()))?;
            let t_primal = t0.elapsed().as_secs_f64();
            black_box(y);
            Ok((
                Sample {
                    t_primal,
                    ..Sample::default()
                },
                None,
            ))
        }
        Mode::Symbolic => {
            let t0 = Instant::now();
            let a = ActiveMatrix::register(tape, w.a.clone())?;
            let b = w.b.as_ref().map(|b| ActiveMatrix::register(tape, b.clone())).transpose()?;
            let y = op.symbolic(&a, b.as_ref())?;
            let t1 = Instant::now();
            for (k, &r) in y.refs().iter().enumerate() {
                tape.set_adjoint(r, seeds.get(k))?;
            }
            tape.interpret_reverse()?;
            let t2 = Instant::now();
            let sample = Sample {
                stats: tape.stats(),
                t_primal: (t1 - t0).as_secs_f64(),
                t_adjoint: (t2 - t1).as_secs_f64(),
            };
            let adj = InputAdjoints {
                a: a.adjoints(),
                b: b.as_ref().map(ActiveMatrix::adjoints),
            };
            Ok((sample, Some(adj)))
        }
        Mode::Algorithmic => {
            let t0 = Instant::now();
            let a = w.a.map(|&v| AReal::new(tape, v));
            let b = w.b.as_ref().map(|b| b.map(|&v| AReal::new(tape, v)));
            let y = op.kernel(&a, b.as_ref())?;
            if let Some(e) = tape.fault() {
                return Err(e.into());
            }
            let t1 = Instant::now();
            for (k, v) in y.as_slice().iter().enumerate() {
                if v.is_active() {
                    v.seed(seeds.get(k));
                }
            }
            tape.interpret_reverse()?;
            let t2 = Instant::now();
            let sample = Sample {
                stats: tape.stats(),
                t_primal: (t1 - t0).as_secs_f64(),
                t_adjoint: (t2 - t1).as_secs_f64(),
            };
            let adj = InputAdjoints {
                a: a.map(|v| v.adjoint()),
                b: b.as_ref().map(|b| b.map(|v| v.adjoint())),
            };
            Ok((sample, Some(adj)))
        }
    }
}
