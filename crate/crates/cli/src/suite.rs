//! Verification checks with fixed tolerances. Each returns a [`Verdict`];
//! [`run`] adds wall-clock budgets and formats one line per check.

use std::fmt;
use std::time::{Duration, Instant};

use hyad_core::elementwise::{negate, Policy};
use hyad_core::{AReal, DenseMatrix, Tape};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::bench::{factor_report, nonincreasing, run_bench, BenchConfig};
use crate::fit::{fit_slope, Field};
use crate::ops::{execute, InputAdjoints, Mode, Op, Seeds, Workload};
use crate::programs::{self, Adjoints, Composite, Tree};

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            passed,
            detail: detail.into(),
        }
    }
}

pub struct Check {
    pub id: u8,
    pub name: &'static str,
    pub budget: Option<Duration>,
    pub run: fn() -> Verdict,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] {}: {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

pub fn run(check: &Check) -> Outcome {
    let t0 = Instant::now();
    let v = (check.run)();
    let elapsed = t0.elapsed();
    let mut passed = v.passed;
    let mut detail = v.detail;
    if let Some(budget) = check.budget {
        if elapsed > budget {
            passed = false;
            detail.push_str(&format!("; over the {} s budget", budget.as_secs()));
        }
    }
    Outcome {
        id: check.id,
        name: check.name,
        passed,
        detail,
        elapsed,
    }
}

pub const CHECKS: [Check; 8] = [
    Check {
        id: 1,
        name: "worked 2x2 matmul example",
        budget: Some(Duration::from_secs(1)),
        run: worked_example,
    },
    Check {
        id: 2,
        name: "symbolic vs algorithmic adjoints",
        budget: Some(Duration::from_secs(30)),
        run: oracle_equivalence,
    },
    Check {
        id: 3,
        name: "central differences at n=6",
        budget: Some(Duration::from_secs(30)),
        run: finite_differences,
    },
    Check {
        id: 4,
        name: "tape_bytes slopes",
        budget: Some(Duration::from_secs(600)),
        run: memory_slopes,
    },
    Check {
        id: 5,
        name: "symbolic solve-lu time slopes",
        budget: None,
        run: solve_time_slopes,
    },
    Check {
        id: 6,
        name: "symbolic-to-primal factor trend",
        budget: None,
        run: factor_trend,
    },
    Check {
        id: 7,
        name: "expression fusion",
        budget: None,
        run: fusion,
    },
    Check {
        id: 8,
        name: "dot-product identity",
        budget: None,
        run: dot_product_identity,
    },
];

fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

fn uniform(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..=1.0))
}

fn max_abs_diff(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn dot(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

/// The 2x2 product written as `C(i,j) += A(i,k) * B(k,j)` over eager active
/// scalars, against the hand expansions `A_bar = C_bar B^T`, `B_bar = A^T C_bar`.
pub fn worked_example() -> Verdict {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let mut int = || r.gen_range(-9..=9) as f64;
        let a: Vec<f64> = (0..4).map(|_| int()).collect();
        let b: Vec<f64> = (0..4).map(|_| int()).collect();
        let cb: Vec<f64> = (0..4).map(|_| int()).collect();

        let tape = Tape::new();
        let av: Vec<AReal> = a.iter().map(|&v| AReal::new(&tape, v)).collect();
        let bv: Vec<AReal> = b.iter().map(|&v| AReal::new(&tape, v)).collect();
        let mut c = [AReal::constant(0.0); 4];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    c[2 * i + j] += av[2 * i + k] * bv[2 * k + j];
                }
            }
        }
        for (ci, s) in c.iter().zip(&cb) {
            ci.seed(*s);
        }
        if tape.interpret_reverse().is_err() {
            return Verdict::new(false, "reverse sweep failed");
        }

        let at = |m: &[f64], i: usize, j: usize| m[2 * i + j];
        let a_bar = [
            at(&cb, 0, 0) * at(&b, 0, 0) + at(&cb, 0, 1) * at(&b, 0, 1),
            at(&cb, 0, 0) * at(&b, 1, 0) + at(&cb, 0, 1) * at(&b, 1, 1),
            at(&cb, 1, 0) * at(&b, 0, 0) + at(&cb, 1, 1) * at(&b, 0, 1),
            at(&cb, 1, 0) * at(&b, 1, 0) + at(&cb, 1, 1) * at(&b, 1, 1),
        ];
        let b_bar = [
            at(&a, 0, 0) * at(&cb, 0, 0) + at(&a, 1, 0) * at(&cb, 1, 0),
            at(&a, 0, 0) * at(&cb, 0, 1) + at(&a, 1, 0) * at(&cb, 1, 1),
            at(&a, 0, 1) * at(&cb, 0, 0) + at(&a, 1, 1) * at(&cb, 1, 0),
            at(&a, 0, 1) * at(&cb, 0, 1) + at(&a, 1, 1) * at(&cb, 1, 1),
        ];
        for (v, h) in av.iter().zip(&a_bar).chain(bv.iter().zip(&b_bar)) {
            worst = worst.max((v.adjoint() - h).abs());
        }
    }
    Verdict::new(worst <= 1e-14, format!("10 integer instances, max |diff| {worst:e} (tol 1e-14)"))
}

/// Uniform entries plus `+-max(n, 2)` on a random permutation; for the
/// Cholesky op `M^T M + n I`.
fn well_conditioned(op: Op, r: &mut impl Rng, n: usize) -> Workload {
    let a = if op.symmetric_input() {
        let m = uniform(r, n, n);
        let s = m.matmul_transpose_a(&m).expect("square");
        DenseMatrix::from_fn(n, n, |i, j| {
            let v = if i >= j { s[(i, j)] } else { s[(j, i)] };
            if i == j {
                v + n as f64
            } else {
                v
            }
        })
    } else {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, r.gen_range(0..=i));
        }
        let shift = (n as f64).max(2.0);
        let mut a = uniform(r, n, n);
        for (i, &j) in perm.iter().enumerate() {
            a[(i, j)] += if r.gen_bool(0.5) { shift } else { -shift };
        }
        a
    };
    let b = match op {
        Op::Matmul => Some(uniform(r, n, n)),
        Op::Inverse | Op::Logabsdet => None,
        _ => Some(uniform(r, n, 1)),
    };
    Workload { a, b }
}

/// Gradient with respect to the independent entries of a symmetric input:
/// the strict upper triangle folded onto the lower.
fn fold_symmetric(g: &DenseMatrix<f64>) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(g.rows(), g.cols(), |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => g[(i, j)] + g[(j, i)],
        std::cmp::Ordering::Equal => g[(i, i)],
        std::cmp::Ordering::Less => 0.0,
    })
}

fn adjoints(op: Op, mode: Mode, w: &Workload, seed: &DenseMatrix<f64>) -> Result<InputAdjoints, String> {
    let tape = Tape::new();
    let (_, adj) = execute(op, mode, w, &tape, Seeds::Values(seed)).map_err(|e| e.to_string())?;
    let mut adj = adj.expect("active modes return adjoints");
    if op.symmetric_input() {
        adj.a = fold_symmetric(&adj.a);
    }
    Ok(adj)
}

pub fn oracle_equivalence() -> Verdict {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for op in Op::ALL {
        for n in [1usize, 2, 3, 5, 8] {
            for _ in 0..20 {
                let w = well_conditioned(op, &mut r, n);
                let (rows, cols) = op.output_shape(n);
                let seed = uniform(&mut r, rows, cols);
                let (s, a) = match (
                    adjoints(op, Mode::Symbolic, &w, &seed),
                    adjoints(op, Mode::Algorithmic, &w, &seed),
                ) {
                    (Ok(s), Ok(a)) => (s, a),
                    (Err(e), _) | (_, Err(e)) => return Verdict::new(false, format!("{op} n={n}: {e}")),
                };
                worst = worst.max(max_abs_diff(&s.a, &a.a));
                if let (Some(sb), Some(ab)) = (&s.b, &a.b) {
                    worst = worst.max(max_abs_diff(sb, ab));
                }
                cases += 1;
            }
        }
    }
    Verdict::new(
        worst <= 1e-10,
        format!("{cases} cases over 7 ops, max |diff| {worst:e} (tol 1e-10)"),
    )
}

pub fn finite_differences() -> Verdict {
    const H: f64 = 1e-6;
    let mut r = rng(3);
    let n = 6;
    let mut worst: f64 = 0.0;
    for op in Op::ALL {
        let w = well_conditioned(op, &mut r, n);
        let (rows, cols) = op.output_shape(n);
        let seed = uniform(&mut r, rows, cols);
        let g = match adjoints(op, Mode::Symbolic, &w, &seed) {
            Ok(g) => g,
            Err(e) => return Verdict::new(false, format!("{op}: {e}")),
        };
        let f = |w: &Workload| dot(&seed, &op.kernel(&w.a, w.b.as_ref()).expect("well conditioned"));
        let central = |perturb: &dyn Fn(&mut Workload, f64)| {
            let mut up = w.clone();
            perturb(&mut up, H);
            let mut down = w.clone();
            perturb(&mut down, -H);
            (f(&up) - f(&down)) / (2.0 * H)
        };
        let fd_a = DenseMatrix::from_fn(n, n, |i, j| {
            if op.symmetric_input() && i < j {
                return 0.0;
            }
            central(&|w: &mut Workload, h| {
                w.a[(i, j)] += h;
                if op.symmetric_input() && i != j {
                    w.a[(j, i)] += h;
                }
            })
        });
        let mut err = max_abs_diff(&fd_a, &g.a) / g.a.max_abs();
        if let Some(gb) = &g.b {
            let fd_b = DenseMatrix::from_fn(gb.rows(), gb.cols(), |i, j| {
                central(&|w: &mut Workload, h| w.b.as_mut().expect("has rhs")[(i, j)] += h)
            });
            err = err.max(max_abs_diff(&fd_b, gb) / gb.max_abs());
        }
        worst = worst.max(err);
    }
    Verdict::new(worst <= 1e-5, format!("7 ops, max relative error {worst:e} (tol 1e-5)"))
}

fn sweep(op: Op, mode: Mode, sizes: &[usize], repeats: usize) -> Result<Vec<crate::BenchRecord>, String> {
    let mut cfg = BenchConfig::new(op, mode, sizes.to_vec());
    cfg.repeats = repeats;
    run_bench(&cfg).map_err(|e| e.to_string())
}

pub fn memory_slopes() -> Verdict {
    let sizes = [32, 64, 128, 256];
    let mut passed = true;
    let mut parts = Vec::new();
    for (mode, lo, hi) in [(Mode::Symbolic, 1.8, 2.2), (Mode::Algorithmic, 2.7, 3.3)] {
        for op in Op::ALL {
            let slope = sweep(op, mode, &sizes, 1).and_then(|recs| {
                fit_slope(&recs, Field::TapeBytes).map_err(|e| e.to_string())
            });
            match slope {
                Ok(s) => {
                    let ok = (lo..=hi).contains(&s);
                    passed &= ok;
                    parts.push(format!("{op}/{mode} {s:.3}{}", if ok { "" } else { " OUT" }));
                }
                Err(e) => {
                    passed = false;
                    parts.push(format!("{op}/{mode} error: {e}"));
                }
            }
        }
    }
    Verdict::new(passed, format!("symbolic in [1.8, 2.2], algorithmic in [2.7, 3.3]: {}", parts.join(", ")))
}

const TIMING_SIZES: [usize; 4] = [64, 128, 256, 512];
const TIMING_REPEATS: usize = 9;

pub fn solve_time_slopes() -> Verdict {
    let recs = match sweep(Op::SolveLu, Mode::Symbolic, &TIMING_SIZES, TIMING_REPEATS) {
        Ok(r) => r,
        Err(e) => return Verdict::new(false, e),
    };
    match (fit_slope(&recs, Field::TAdjoint), fit_slope(&recs, Field::TTotal)) {
        (Ok(adj), Ok(total)) => Verdict::new(
            (1.7..=2.4).contains(&adj) && (2.6..=3.4).contains(&total),
            format!("t_adjoint slope {adj:.3} in [1.7, 2.4], t_total slope {total:.3} in [2.6, 3.4]"),
        ),
        (Err(e), _) | (_, Err(e)) => Verdict::new(false, e.to_string()),
    }
}

pub fn factor_trend() -> Verdict {
    let mut cfg = BenchConfig::new(Op::SolveLu, Mode::Symbolic, TIMING_SIZES.to_vec());
    cfg.repeats = TIMING_REPEATS;
    let points = match factor_report(&cfg) {
        Ok(p) => p,
        Err(e) => return Verdict::new(false, e.to_string()),
    };
    let shown: Vec<String> = points
        .iter()
        .map(|p| match p.factor {
            Some(f) => format!("n={} {f:.3}", p.n),
            None => format!("n={} unreliable", p.n),
        })
        .collect();
    let last = points.last().and_then(|p| p.factor);
    let passed = nonincreasing(&points) && last.is_some_and(|f| f < 2.5);
    Verdict::new(passed, format!("nonincreasing, final < 2.5: {}", shown.join(", ")))
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.fold(0.0, |m: f64, x| m.max(x.abs()));
    let d = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    d / norm(&mut b.iter().copied()).max(f64::MIN_POSITIVE)
}

pub fn fusion() -> Verdict {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let vars = r.gen_range(1..=5);
        let t = Tree::random(&mut r, 8, vars);
        let x: Vec<f64> = (0..vars).map(|_| r.gen_range(0.5..1.5)).collect();
        let fused = programs::tree_gradient(&t, &x, true);
        let eager = programs::tree_gradient(&t, &x, false);
        if fused.entries != 1 {
            return Verdict::new(false, format!("tree {k}: fused recorded {} entries", fused.entries));
        }
        if eager.entries != t.active_ops() as u64 {
            return Verdict::new(
                false,
                format!("tree {k}: eager recorded {} entries for {} ops", eager.entries, t.active_ops()),
            );
        }
        worst = worst.max(rel_err(&fused.grad, &eager.grad));
    }

    // A = -B
    let tape = Tape::new();
    let b = DenseMatrix::from_fn(4, 3, |i, j| AReal::new(&tape, (i * 3 + j) as f64 - 5.5));
    let before = tape.stats();
    let a = negate(&b, Policy::Fused);
    let fused = tape.stats();
    negate(&b, Policy::Eager);
    let eager = tape.stats();
    let outputs = (b.rows() * b.cols()) as u64;
    let fused_entries = fused.num_entries - before.num_entries;
    let eager_entries = eager.num_entries - fused.num_entries;
    let values_ok = a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.value() == -y.value());

    let passed = worst <= 1e-13 && fused_entries == outputs && values_ok;
    Verdict::new(
        passed,
        format!(
            "1000 trees: 1 entry each, max relative adjoint diff {worst:e} (tol 1e-13); \
             A = -B on 4x3: fused {fused_entries} entries for {outputs} outputs, eager {eager_entries}"
        ),
    )
}

pub fn dot_product_identity() -> Verdict {
    let mut r = rng(8);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let p = Composite::random(&mut r);
        let n = p.n;
        let seeds = programs::Seeds {
            matrix: uniform(&mut r, n, n),
            scalar: r.gen_range(-1.0..=1.0),
        };
        let dirs = Adjoints {
            matrices: p.matrices.iter().map(|_| uniform(&mut r, n, n)).collect(),
            scalars: p.scalars.iter().map(|_| r.gen_range(-1.0..=1.0)).collect(),
        };
        let x_bar = match p.reverse(&seeds) {
            Ok(a) => a,
            Err(e) => return Verdict::new(false, format!("program {k}: {e}")),
        };
        let (y_dot_m, y_dot_s) = p.tangent(&dirs);
        let lhs = dot(&seeds.matrix, &y_dot_m) + seeds.scalar * y_dot_s;
        let rhs = x_bar.matrices.iter().zip(&dirs.matrices).map(|(g, d)| dot(g, d)).sum::<f64>()
            + x_bar.scalars.iter().zip(&dirs.scalars).map(|(g, d)| g * d).sum::<f64>();
        let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    Verdict::new(worst <= 1e-10, format!("100 programs, max relative gap {worst:e} (tol 1e-10)"))
}
