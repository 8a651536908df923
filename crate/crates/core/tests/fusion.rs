use hyad_core::{AReal, Expr, TReal, Tape};
use proptest::prelude::*;

const VARS: usize = 5;

#[derive(Clone, Debug)]
enum Tree {
    Var(usize),
    Const(f64),
    Neg(Box<Tree>),
    Sin(Box<Tree>),
    Cos(Box<Tree>),
    // exp(sin t), ln(t*t + 1), sqrt(t*t + 1): bounded and inside the domain
    ExpSin(Box<Tree>),
    LnSq(Box<Tree>),
    SqrtSq(Box<Tree>),
    Add(Box<Tree>, Box<Tree>),
    Sub(Box<Tree>, Box<Tree>),
    Mul(Box<Tree>, Box<Tree>),
    // a / (b*b + 1)
    DivSq(Box<Tree>, Box<Tree>),
}

trait Num: Sized {
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

impl Tree {
    fn eval<N: Num>(&self, leaf: &dyn Fn(usize) -> N) -> N {
        use Tree::*;
        let sq1 = |t: &Tree| t.eval(leaf).mul(t.eval(leaf)).add(N::lit(1.0));
        match self {
            Var(i) => leaf(*i),
            Const(c) => N::lit(*c),
            Neg(a) => a.eval(leaf).neg(),
            Sin(a) => a.eval(leaf).sin(),
            Cos(a) => a.eval(leaf).cos(),
            ExpSin(a) => a.eval(leaf).sin().exp(),
            LnSq(a) => sq1(a).ln(),
            SqrtSq(a) => sq1(a).sqrt(),
            Add(a, b) => a.eval(leaf).add(b.eval(leaf)),
            Sub(a, b) => a.eval(leaf).sub(b.eval(leaf)),
            Mul(a, b) => a.eval(leaf).mul(b.eval(leaf)),
            DivSq(a, b) => a.eval(leaf).div(sq1(b)),
        }
    }

    fn is_active(&self) -> bool {
        use Tree::*;
        match self {
            Var(_) => true,
            Const(_) => false,
            Neg(a) | Sin(a) | Cos(a) | ExpSin(a) | LnSq(a) | SqrtSq(a) => a.is_active(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | DivSq(a, b) => a.is_active() || b.is_active(),
        }
    }

    /// Operations that touch an active operand; each is one eager entry.
    fn active_ops(&self) -> usize {
        use Tree::*;
        if !self.is_active() {
            return 0;
        }
        match self {
            Var(_) | Const(_) => 0,
            Neg(a) | Sin(a) | Cos(a) => 1 + a.active_ops(),
            ExpSin(a) => 2 + a.active_ops(),
            LnSq(a) | SqrtSq(a) => 3 + 2 * a.active_ops(),
            Add(a, b) | Sub(a, b) | Mul(a, b) => 1 + a.active_ops() + b.active_ops(),
            DivSq(a, b) => a.active_ops() + 2 * b.active_ops() + if b.is_active() { 3 } else { 1 },
        }
    }

    fn ops(&self) -> usize {
        use Tree::*;
        match self {
            Var(_) | Const(_) => 0,
            Neg(a) | Sin(a) | Cos(a) => 1 + a.ops(),
            ExpSin(a) => 2 + a.ops(),
            LnSq(a) | SqrtSq(a) => 3 + 2 * a.ops(),
            Add(a, b) | Sub(a, b) | Mul(a, b) => 1 + a.ops() + b.ops(),
            DivSq(a, b) => 3 + a.ops() + 2 * b.ops(),
        }
    }
}

fn tree() -> impl Strategy<Value = Tree> {
    let leaf = prop_oneof![
        3 => (0..VARS).prop_map(Tree::Var),
        1 => (0.5f64..2.0).prop_map(Tree::Const),
    ];
    leaf.prop_recursive(8, 48, 2, |inner| {
        let b = |t: Tree| Box::new(t);
        prop_oneof![
            inner.clone().prop_map(move |a| Tree::Neg(b(a))),
            inner.clone().prop_map(move |a| Tree::Sin(b(a))),
            inner.clone().prop_map(move |a| Tree::Cos(b(a))),
            inner.clone().prop_map(move |a| Tree::ExpSin(b(a))),
            inner.clone().prop_map(move |a| Tree::LnSq(b(a))),
            inner.clone().prop_map(move |a| Tree::SqrtSq(b(a))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Tree::Add(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Tree::Sub(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Tree::Mul(b(x), b(y))),
            (inner.clone(), inner).prop_map(move |(x, y)| Tree::DivSq(b(x), b(y))),
        ]
    })
    .prop_filter("needs an active leaf", Tree::is_active)
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.5f64..1.5, VARS)
}

struct Gradient {
    value: f64,
    grad: Vec<f64>,
    entries: usize,
}

fn reverse(t: &Tree, x: &[f64], fused: bool) -> Gradient {
    let tape = Tape::new();
    let vars: Vec<AReal> = x.iter().map(|&v| AReal::new(&tape, v)).collect();
    let before = tape.position().0;
    let y = if fused {
        t.eval::<Expr>(&|i| vars[i].expr()).assign()
    } else {
        t.eval::<AReal>(&|i| vars[i])
    };
    let entries = tape.position().0 - before;
    y.seed(1.0);
    tape.interpret_reverse().unwrap();
    Gradient {
        value: y.value(),
        grad: vars.iter().map(|v| v.adjoint()).collect(),
        entries,
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn fused_matches_eager(t in tree(), x in point()) {
        let fused = reverse(&t, &x, true);
        let eager = reverse(&t, &x, false);
        prop_assert_eq!(fused.entries, 1);
        prop_assert_eq!(eager.entries, t.active_ops());
        prop_assert_eq!(fused.value, eager.value);
        prop_assert!(rel_err(&fused.grad, &eager.grad) <= 1e-13,
            "{:?} vs {:?}", fused.grad, eager.grad);
    }

    #[test]
    fn tangent_matches_adjoint(t in tree(), x in point()) {
        let g = reverse(&t, &x, true);
        let tangent: Vec<f64> = (0..VARS)
            .map(|d| t.eval::<TReal>(&|i| TReal::new(x[i], if i == d { 1.0 } else { 0.0 })).deriv)
            .collect();
        prop_assert!(rel_err(&tangent, &g.grad) <= 1e-12, "{:?} vs {:?}", tangent, g.grad);
    }

    #[test]
    fn reverse_matches_central_differences(t in tree(), x in point()) {
        let g = reverse(&t, &x, true);
        let f = |p: &[f64]| t.eval::<f64>(&|i| p[i]);
        prop_assert_eq!(f(&x), g.value);
        let fd: Vec<f64> = (0..VARS)
            .map(|i| {
                let h = 1e-6 * x[i].abs().max(1.0);
                let mut p = x.clone();
                p[i] = x[i] + h;
                let up = f(&p);
                p[i] = x[i] - h;
                (up - f(&p)) / (2.0 * h)
            })
            .collect();
        let scale = norm(&g.grad).max(1.0);
        let err = norm(&fd.iter().zip(&g.grad).map(|(a, b)| a - b).collect::<Vec<_>>());
        prop_assert!(err <= 1e-5 * scale, "{:?} vs {:?}", fd, g.grad);
    }
}

#[test]
fn chain_of_ops_records_one_fused_entry() {
    let tree = (0..10).fold(Tree::Var(0), |acc, k| {
        Tree::Add(Box::new(Tree::Mul(Box::new(acc), Box::new(Tree::Var(1)))), Box::new(Tree::Const(0.5 + k as f64)))
    });
    let x = [0.9, 1.1, 1.0, 1.0, 1.0];
    assert_eq!(tree.ops(), 20);
    assert_eq!(reverse(&tree, &x, true).entries, 1);
    assert_eq!(reverse(&tree, &x, false).entries, 20);
}

#[test]
fn log_of_square_at_three() {
    let tape = Tape::new();
    let x = AReal::new(&tape, 3.0);
    let y = (x.expr() * x).ln().assign();
    y.seed(1.0);
    tape.interpret_reverse().unwrap();
    let f = |v: f64| (v * v).ln();
    let h = 1e-6;
    let fd = (f(3.0 + h) - f(3.0 - h)) / (2.0 * h);
    assert!((x.adjoint() - fd).abs() <= 1e-6 * fd.abs());
    assert!((x.adjoint() - 2.0 / 3.0).abs() <= 1e-15);
}

#[test]
fn exp_of_sin_tangent() {
    let y = TReal::new(1.0, 1.0).sin().exp();
    let f = |v: f64| v.sin().exp();
    let h = 1e-6;
    let fd = (f(1.0 + h) - f(1.0 - h)) / (2.0 * h);
    assert!((y.deriv - fd).abs() <= 1e-8);
    assert!((y.deriv - 1f64.sin().exp() * 1f64.cos()).abs() <= 1e-15);
}
