use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hyad_bench::{vector, well_conditioned};
use hyad_core::{
    lu_factor, qr_factor, AReal, ActiveMatrix, DenseMatrix, QrPivoting, SolverKind, SymbolicSolver, Tape,
};

const SIZES: [usize; 3] = [16, 32, 64];

#[derive(Clone, Copy)]
enum Case {
    Matmul,
    SolveLu,
    Inverse,
    LogDet,
}

impl Case {
    fn name(self) -> &'static str {
        match self {
            Case::Matmul => "matmul",
            Case::SolveLu => "solve-lu",
            Case::Inverse => "inverse",
            Case::LogDet => "logabsdet",
        }
    }

    fn rhs(self, n: usize) -> DenseMatrix<f64> {
        match self {
            Case::Matmul => well_conditioned(n, 2),
            _ => vector(n, 2),
        }
    }
}

fn symbolic(case: Case, tape: &Tape, a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> DenseMatrix<f64> {
    let a = ActiveMatrix::register(tape, a.clone()).unwrap();
    let b = ActiveMatrix::register(tape, b.clone()).unwrap();
    let y = match case {
        Case::Matmul => a.matmul(&b).unwrap(),
        Case::SolveLu => SymbolicSolver::new(&a, SolverKind::Lu).unwrap().solve(&b).unwrap(),
        Case::Inverse => SymbolicSolver::new(&a, SolverKind::Lu).unwrap().inverse().unwrap(),
        Case::LogDet => {
            let d = SymbolicSolver::new(&a, SolverKind::QrColPiv).unwrap().log_abs_det().unwrap();
            d.seed(1.0);
            tape.interpret_reverse().unwrap();
            return a.adjoints();
        }
    };
    y.seed_all(1.0).unwrap();
    tape.interpret_reverse().unwrap();
    a.adjoints()
}

fn algorithmic(case: Case, tape: &Tape, a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> DenseMatrix<f64> {
    let a = a.map(|&v| AReal::new(tape, v));
    let b = b.map(|&v| AReal::new(tape, v));
    let y = match case {
        Case::Matmul => a.matmul(&b).unwrap(),
        Case::SolveLu => lu_factor(&a).unwrap().solve(&b).unwrap(),
        Case::Inverse => lu_factor(&a).unwrap().inverse(),
        Case::LogDet => DenseMatrix::filled(1, 1, qr_factor(&a, QrPivoting::Column).unwrap().log_abs_det()),
    };
    for v in y.as_slice() {
        v.seed(1.0);
    }
    tape.interpret_reverse().unwrap();
    a.map(AReal::adjoint)
}

fn bench_case(c: &mut Criterion, case: Case) {
    let mut group = c.benchmark_group(case.name());
    let tape = Tape::new();
    for n in SIZES {
        let a = well_conditioned(n, 1);
        let b = case.rhs(n);
        group.bench_with_input(BenchmarkId::new("symbolic", n), &n, |bench, _| {
            bench.iter(|| {
                tape.reset();
                symbolic(case, &tape, &a, &b)
            })
        });
        group.bench_with_input(BenchmarkId::new("algorithmic", n), &n, |bench, _| {
            bench.iter(|| {
                tape.reset();
                algorithmic(case, &tape, &a, &b)
            })
        });
    }
    group.finish();
}

fn benches(c: &mut Criterion) {
    for case in [Case::Matmul, Case::SolveLu, Case::Inverse, Case::LogDet] {
        bench_case(c, case);
    }
}

criterion_group!(name = group; config = Criterion::default().sample_size(10); targets = benches);
criterion_main!(group);
