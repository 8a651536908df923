//! Randomized programs for the fusion and dot-product checks.
//!
//! [`Tree`] is a scalar expression evaluated under fused recording, eager
//! recording, tangent mode, or plain `f64`. [`Composite`] chains symbolic
//! matrix operations with elementwise scalar code; it runs once in reverse
//! mode through the symbolic rules and once in tangent mode through the
//! generic kernels.

use hyad_core::{
    cholesky_factor, lu_factor, qr_factor, AReal, ActiveMatrix, DenseMatrix, Expr, QrPivoting, Scalar, SolverKind,
    SymbolicError, SymbolicSolver, TReal, Tape,
};
use rand::Rng;

/// Arithmetic shared by every evaluation of a [`Tree`].
pub trait Num: Sized {
    fn lit(v: f64) -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
}

macro_rules! impl_num {
    ($t:ty, $lit:expr) => {
        impl<'t> Num for $t {
            fn lit(v: f64) -> Self {
                $lit(v)
            }
            fn add(self, o: Self) -> Self {
                self + o
            }
            fn sub(self, o: Self) -> Self {
                self - o
            }
            fn mul(self, o: Self) -> Self {
                self * o
            }
            fn div(self, o: Self) -> Self {
                self / o
            }
            fn neg(self) -> Self {
                -self
            }
            fn sin(self) -> Self {
                <$t>::sin(self)
            }
            fn cos(self) -> Self {
                <$t>::cos(self)
            }
            fn exp(self) -> Self {
                <$t>::exp(self)
            }
            fn ln(self) -> Self {
                <$t>::ln(self)
            }
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
        }
    };
}

impl_num!(f64, |v| v);
impl_num!(AReal<'t>, AReal::constant);
impl_num!(Expr<'t>, Expr::from);
impl_num!(TReal, TReal::constant);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unary {
    Neg,
    Sin,
    Cos,
    /// `exp(sin t)`
    ExpSin,
    /// `ln(t*t + 1)`
    LnSq,
    /// `sqrt(t*t + 1)`
    SqrtSq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Binary {
    Add,
    Sub,
    Mul,
    /// `a / (b*b + 1)`
    DivSq,
}

/// Scalar expression whose compound nodes keep every intermediate inside
/// the domain of `ln` and `sqrt` and away from overflow.
#[derive(Clone, Debug, PartialEq)]
pub enum Tree {
    Var(usize),
    Const(f64),
    Unary(Unary, Box<Tree>),
    Binary(Binary, Box<Tree>, Box<Tree>),
}

const UNARY: [Unary; 6] = [Unary::Neg, Unary::Sin, Unary::Cos, Unary::ExpSin, Unary::LnSq, Unary::SqrtSq];
const BINARY: [Binary; 4] = [Binary::Add, Binary::Sub, Binary::Mul, Binary::DivSq];

impl Tree {
    /// Random tree of depth at most `depth` over `vars` variables that
    /// contains at least one variable.
    pub fn random(rng: &mut impl Rng, depth: usize, vars: usize) -> Tree {
        loop {
            let t = Tree::grow(rng, depth, vars);
            if t.is_active() {
                return t;
            }
        }
    }

    fn grow(rng: &mut impl Rng, depth: usize, vars: usize) -> Tree {
        if depth == 0 || rng.gen_bool(0.2) {
            return if rng.gen_bool(0.75) {
                Tree::Var(rng.gen_range(0..vars))
            } else {
                Tree::Const(rng.gen_range(0.5..2.0))
            };
        }
        if rng.gen_bool(0.4) {
            let op = UNARY[rng.gen_range(0..UNARY.len())];
            Tree::Unary(op, Box::new(Tree::grow(rng, depth - 1, vars)))
        } else {
            let op = BINARY[rng.gen_range(0..BINARY.len())];
            let a = Tree::grow(rng, depth - 1, vars);
            let b = Tree::grow(rng, depth - 1, vars);
            Tree::Binary(op, Box::new(a), Box::new(b))
        }
    }

    pub fn eval<N: Num>(&self, leaf: &dyn Fn(usize) -> N) -> N {
        let sq1 = |t: &Tree| t.eval(leaf).mul(t.eval(leaf)).add(N::lit(1.0));
        match self {
            Tree::Var(i) => leaf(*i),
            Tree::Const(c) => N::lit(*c),
            Tree::Unary(op, a) => match op {
                Unary::Neg => a.eval(leaf).neg(),
                Unary::Sin => a.eval(leaf).sin(),
                Unary::Cos => a.eval(leaf).cos(),
                Unary::ExpSin => a.eval(leaf).sin().exp(),
                Unary::LnSq => sq1(a).ln(),
                Unary::SqrtSq => sq1(a).sqrt(),
            },
            Tree::Binary(op, a, b) => match op {
                Binary::Add => a.eval(leaf).add(b.eval(leaf)),
                Binary::Sub => a.eval(leaf).sub(b.eval(leaf)),
                Binary::Mul => a.eval(leaf).mul(b.eval(leaf)),
                Binary::DivSq => a.eval(leaf).div(sq1(b)),
            },
        }
    }

    pub fn is_active(&self) -> bool {
        match self {
            Tree::Var(_) => true,
            Tree::Const(_) => false,
            Tree::Unary(_, a) => a.is_active(),
            Tree::Binary(_, a, b) => a.is_active() || b.is_active(),
        }
    }

    /// Scalar operations performed on active operands; eager recording
    /// writes one entry for each.
    pub fn active_ops(&self) -> usize {
        if !self.is_active() {
            return 0;
        }
        match self {
            Tree::Var(_) | Tree::Const(_) => 0,
            Tree::Unary(op, a) => match op {
                Unary::Neg | Unary::Sin | Unary::Cos => 1 + a.active_ops(),
                Unary::ExpSin => 2 + a.active_ops(),
                Unary::LnSq | Unary::SqrtSq => 3 + 2 * a.active_ops(),
            },
            Tree::Binary(op, a, b) => {
                let base = a.active_ops() + b.active_ops();
                match op {
                    Binary::DivSq if b.is_active() => 3 + a.active_ops() + 2 * b.active_ops(),
                    Binary::DivSq => 1 + a.active_ops(),
                    _ => 1 + base,
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeGradient {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Entries recorded by the expression itself, inputs excluded.
    pub entries: u64,
}

/// Reverse-mode gradient of `t` at `x`, fused into one assignment or eager.
pub fn tree_gradient(t: &Tree, x: &[f64], fused: bool) -> TreeGradient {
    let tape = Tape::new();
    let vars: Vec<AReal> = x.iter().map(|&v| AReal::new(&tape, v)).collect();
    let before = tape.stats().num_entries;
    let y = if fused {
        t.eval::<Expr>(&|i| vars[i].expr()).assign()
    } else {
        t.eval::<AReal>(&|i| vars[i])
    };
    let entries = tape.stats().num_entries - before;
    y.seed(1.0);
    tape.interpret_reverse().expect("fresh tape");
    TreeGradient {
        value: y.value(),
        grad: vars.iter().map(AReal::adjoint).collect(),
        entries,
    }
}

/// Elementwise functions used by [`Composite`]; all are smooth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Map {
    Sin,
    ExpSin,
    Square,
    /// `x * sin(x) + 1`
    Mixed,
}

const MAPS: [Map; 4] = [Map::Sin, Map::ExpSin, Map::Square, Map::Mixed];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Step {
    Matmul(usize, usize),
    Add(usize, usize),
    Map(usize, Map),
    /// Matrix times a pooled scalar.
    Scale(usize, usize),
    Solve { a: usize, b: usize, kind: SolverKind },
    Inverse(usize),
    LogDet { a: usize, kind: SolverKind },
}

/// Matrix program over a pool of `n x n` matrices and a pool of scalars.
/// Operand indices are taken modulo the current pool length.
#[derive(Clone, Debug, PartialEq)]
pub struct Composite {
    pub n: usize,
    pub matrices: Vec<DenseMatrix<f64>>,
    pub scalars: Vec<f64>,
    pub steps: Vec<Step>,
}

const KINDS: [SolverKind; 4] = [SolverKind::Lu, SolverKind::QrColPiv, SolverKind::QrFullPiv, SolverKind::Cholesky];

impl Composite {
    pub fn random<R: Rng>(rng: &mut R) -> Composite {
        let n = rng.gen_range(1..=6);
        let matrices = vec![random_matrix(rng, n), random_matrix(rng, n)];
        let scalars = vec![rng.gen_range(0.5..1.5)];
        let len = rng.gen_range(3..=8);
        let ix = |rng: &mut R| rng.gen_range(0..64usize);
        let mut steps = Vec::with_capacity(len);
        for _ in 0..len {
            steps.push(match rng.gen_range(0..7) {
                0 => Step::Matmul(ix(rng), ix(rng)),
                1 => Step::Add(ix(rng), ix(rng)),
                2 => Step::Map(ix(rng), MAPS[rng.gen_range(0..MAPS.len())]),
                3 => Step::Scale(ix(rng), ix(rng)),
                4 => Step::Solve {
                    a: ix(rng),
                    b: ix(rng),
                    kind: KINDS[rng.gen_range(0..KINDS.len())],
                },
                5 => Step::Inverse(ix(rng)),
                _ => Step::LogDet {
                    a: ix(rng),
                    kind: KINDS[rng.gen_range(0..3)],
                },
            });
        }
        Composite {
            n,
            matrices,
            scalars,
            steps,
        }
    }

    /// Reverse mode through the symbolic rules. Returns the adjoints of the
    /// input matrices and scalars for the given output seeds.
    pub fn reverse(&self, seeds: &Seeds) -> Result<Adjoints, SymbolicError> {
        let tape = Tape::new();
        let inputs: Vec<ActiveMatrix> = self
            .matrices
            .iter()
            .map(|m| ActiveMatrix::register(&tape, m.clone()))
            .collect::<Result<_, _>>()?;
        let s_in: Vec<AReal> = self.scalars.iter().map(|&v| AReal::new(&tape, v)).collect();
        let mut mats = inputs.clone();
        let mut scal = s_in.clone();
        let n = self.n;
        for step in &self.steps {
            let m = |i: usize| &mats[i % mats.len()];
            match *step {
                Step::Matmul(i, j) => {
                    let c = m(i).matmul(m(j))?;
                    mats.push(c);
                }
                Step::Add(i, j) => {
                    let (a, b) = (m(i).to_scalars(), m(j).to_scalars());
                    let c = DenseMatrix::from_fn(n, n, |r, c| (a[(r, c)].expr() + b[(r, c)]).assign());
                    mats.push(ActiveMatrix::from_scalars(&tape, &c)?);
                }
                Step::Map(i, f) => {
                    let a = m(i).to_scalars().map(|&x| map_expr(f, x.expr()).assign());
                    mats.push(ActiveMatrix::from_scalars(&tape, &a)?);
                }
                Step::Scale(i, k) => {
                    let s = scal[k % scal.len()];
                    let a = m(i).to_scalars().map(|&x| x * s);
                    mats.push(ActiveMatrix::from_scalars(&tape, &a)?);
                }
                Step::Solve { a, b, kind } => {
                    let k = condition(&m(a).to_scalars(), kind == SolverKind::Cholesky);
                    let k = ActiveMatrix::from_scalars(&tape, &k)?;
                    let x = SymbolicSolver::new(&k, kind)?.solve(m(b))?;
                    mats.push(x);
                }
                Step::Inverse(a) => {
                    let k = ActiveMatrix::from_scalars(&tape, &condition(&m(a).to_scalars(), false))?;
                    mats.push(SymbolicSolver::new(&k, SolverKind::Lu)?.inverse()?);
                }
                Step::LogDet { a, kind } => {
                    let k = ActiveMatrix::from_scalars(&tape, &condition(&m(a).to_scalars(), false))?;
                    scal.push(SymbolicSolver::new(&k, kind)?.log_abs_det()?);
                }
            }
        }
        let out_m = mats.last().expect("nonempty pool");
        let out_s = scal.last().expect("nonempty pool");
        out_m.seed(&seeds.matrix)?;
        if out_s.is_active() {
            out_s.seed(seeds.scalar);
        }
        tape.interpret_reverse()?;
        Ok(Adjoints {
            matrices: inputs.iter().map(ActiveMatrix::adjoints).collect(),
            scalars: s_in.iter().map(AReal::adjoint).collect(),
        })
    }

    /// Tangent mode through the generic kernels. Returns the directional
    /// derivatives of the final matrix and final scalar.
    pub fn tangent(&self, dirs: &Adjoints) -> (DenseMatrix<f64>, f64) {
        let n = self.n;
        let mut mats: Vec<DenseMatrix<TReal>> = self
            .matrices
            .iter()
            .zip(&dirs.matrices)
            .map(|(m, d)| DenseMatrix::from_fn(n, n, |i, j| TReal::new(m[(i, j)], d[(i, j)])))
            .collect();
        let mut scal: Vec<TReal> = self
            .scalars
            .iter()
            .zip(&dirs.scalars)
            .map(|(&v, &d)| TReal::new(v, d))
            .collect();
        for step in &self.steps {
            let m = |i: usize| &mats[i % mats.len()];
            let next = match *step {
                Step::Matmul(i, j) => m(i).matmul(m(j)).expect("square"),
                Step::Add(i, j) => DenseMatrix::from_fn(n, n, |r, c| m(i)[(r, c)] + m(j)[(r, c)]),
                Step::Map(i, f) => m(i).map(|&x| map_expr(f, x)),
                Step::Scale(i, k) => {
                    let s = scal[k % scal.len()];
                    m(i).map(|&x| x * s)
                }
                Step::Solve { a, b, kind } => {
                    let k = condition(m(a), kind == SolverKind::Cholesky);
                    match kind {
                        SolverKind::Lu => lu_factor(&k).and_then(|f| f.solve(m(b))),
                        SolverKind::Cholesky => cholesky_factor(&k).and_then(|f| f.solve(m(b))),
                        _ => qr_factor(&k, QrPivoting::Column).and_then(|f| f.solve(m(b))),
                    }
                    .expect("conditioned")
                }
                Step::Inverse(a) => lu_factor(&condition(m(a), false)).expect("conditioned").inverse(),
                Step::LogDet { a, kind } => {
                    let k = condition(m(a), false);
                    let y = match kind {
                        SolverKind::Lu => lu_factor(&k).expect("conditioned").log_abs_det(),
                        _ => qr_factor(&k, QrPivoting::Column).expect("conditioned").log_abs_det(),
                    };
                    scal.push(y);
                    continue;
                }
            };
            mats.push(next);
        }
        let out_m = mats.last().expect("nonempty pool").map(|t| t.deriv);
        (out_m, scal.last().expect("nonempty pool").deriv)
    }
}

pub fn random_matrix(rng: &mut impl Rng, n: usize) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..=1.0))
}

/// Output seeds of a [`Composite`].
#[derive(Clone, Debug, PartialEq)]
pub struct Seeds {
    pub matrix: DenseMatrix<f64>,
    pub scalar: f64,
}

/// Per-input values: adjoints from the reverse run or tangent directions.
#[derive(Clone, Debug, PartialEq)]
pub struct Adjoints {
    pub matrices: Vec<DenseMatrix<f64>>,
    pub scalars: Vec<f64>,
}

fn map_expr<N: MapNum>(f: Map, x: N) -> N {
    match f {
        Map::Sin => x.sin_(),
        Map::ExpSin => x.sin_().exp_(),
        Map::Square => x.clone() * x,
        Map::Mixed => x.clone() * x.sin_() + N::one(),
    }
}

trait MapNum: Clone + std::ops::Mul<Output = Self> + std::ops::Add<Output = Self> {
    fn one() -> Self;
    fn sin_(self) -> Self;
    fn exp_(self) -> Self;
}

impl MapNum for Expr<'_> {
    fn one() -> Self {
        Expr::from(1.0)
    }
    fn sin_(self) -> Self {
        self.sin()
    }
    fn exp_(self) -> Self {
        self.exp()
    }
}

impl MapNum for TReal {
    fn one() -> Self {
        TReal::constant(1.0)
    }
    fn sin_(self) -> Self {
        self.sin()
    }
    fn exp_(self) -> Self {
        self.exp()
    }
}

/// `2 I + E` with `E = M / (n (1 + max|M|))`, so `|E|_2 < 1`. With
/// `symmetric` the lower triangle of `M` is mirrored first, which keeps the
/// result positive definite. The scale is a constant taken from the values.
fn condition<S: Scalar>(m: &DenseMatrix<S>, symmetric: bool) -> DenseMatrix<S> {
    let n = m.rows();
    let scale = S::from_f64(1.0 / (n as f64 * (1.0 + m.values().max_abs())));
    DenseMatrix::from_fn(n, n, |i, j| {
        let e = if symmetric { m[(i.max(j), i.min(j))] } else { m[(i, j)] };
        let e = e * scale;
        if i == j {
            e + S::from_f64(2.0)
        } else {
            e
        }
    })
}
