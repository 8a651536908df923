//! Adjoint-mode active scalars.
//!
//! Two recording policies coexist:
//!
//! * **Eager.** Arithmetic between [`AReal`] values returns an `AReal` and
//!   records one tape entry per operation. This is what the generic dense
//!   kernels see, and it produces the temporaries of a naive computational
//!   graph.
//! * **Fused.** As soon as an [`Expr`] takes part, the right-hand side is
//!   accumulated as a flat list of `(variable, partial)` pairs with the chain
//!   rule applied eagerly to the weights. [`Expr::assign`] records the whole
//!   expression as a single entry, so no temporaries reach the tape.
//!
//! An `Expr` is consumed by every operation and by `assign`; it cannot be
//! shared between two right-hand sides.
//!
//! Division by zero and out-of-domain math functions yield non-finite values
//! and partials, which propagate through the sweep instead of panicking.
//! Comparisons look at values only.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::scalar::{abs_slope, Scalar};
use crate::tape::{Tape, VarRef};

/// Active scalar bound to a [`Tape`].
///
/// Passive values (constants, and results computed from constants only) hold
/// [`VarRef::PASSIVE`] and no tape.
#[derive(Clone, Copy)]
pub struct AReal<'t> {
    value: f64,
    var: VarRef,
    tape: Option<&'t Tape>,
}

impl fmt::Debug for AReal<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AReal({}, {:?})", self.value, self.var)
    }
}

fn common_tape<'t>(a: Option<&'t Tape>, b: Option<&'t Tape>) -> Option<&'t Tape> {
    match (a, b) {
        (Some(x), Some(y)) => {
            debug_assert!(x.same(y), "operands are bound to different tapes");
            Some(x)
        }
        (x, y) => x.or(y),
    }
}

impl<'t> AReal<'t> {
    /// Registers an independent variable on `tape`.
    pub fn new(tape: &'t Tape, value: f64) -> Self {
        Self::recorded(tape, value, &[])
    }

    /// Rebinds a value to an existing tape entry without recording.
    pub(crate) fn from_parts(value: f64, var: VarRef, tape: &'t Tape) -> Self {
        AReal {
            value,
            var,
            tape: (!var.is_passive()).then_some(tape),
        }
    }

    pub fn constant(value: f64) -> Self {
        AReal {
            value,
            var: VarRef::PASSIVE,
            tape: None,
        }
    }

    fn recorded(tape: &'t Tape, value: f64, deps: &[(VarRef, f64)]) -> Self {
        let var = tape.record_or_fault(deps);
        AReal {
            value,
            var,
            tape: (!var.is_passive()).then_some(tape),
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn var(&self) -> VarRef {
        self.var
    }

    pub fn tape(&self) -> Option<&'t Tape> {
        self.tape
    }

    pub fn is_active(&self) -> bool {
        !self.var.is_passive()
    }

    /// Current adjoint; zero for passive values.
    pub fn adjoint(&self) -> f64 {
        self.tape.map_or(0.0, |t| t.adjoint_or_zero(self.var))
    }

    /// Sets the adjoint seed. Passive values cannot be seeded and are ignored.
    pub fn seed(&self, value: f64) {
        if let Some(t) = self.tape {
            // the ref is valid by construction
            let _ = t.set_adjoint(self.var, value);
        }
    }

    /// Starts a fused expression.
    pub fn expr(self) -> Expr<'t> {
        self.into()
    }

    fn unary(self, value: f64, partial: f64) -> Self {
        match self.tape {
            None => Self::constant(value),
            Some(t) => Self::recorded(t, value, &[(self.var, partial)]),
        }
    }

    fn binary(self, rhs: Self, value: f64, d_lhs: f64, d_rhs: f64) -> Self {
        match common_tape(self.tape, rhs.tape) {
            None => Self::constant(value),
            Some(t) => Self::recorded(t, value, &[(self.var, d_lhs), (rhs.var, d_rhs)]),
        }
    }

    pub fn sin(self) -> Self {
        self.unary(self.value.sin(), self.value.cos())
    }

    pub fn cos(self) -> Self {
        self.unary(self.value.cos(), -self.value.sin())
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.unary(e, e)
    }

    pub fn ln(self) -> Self {
        self.unary(self.value.ln(), 1.0 / self.value)
    }

    pub fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.unary(s, 0.5 / s)
    }

    pub fn abs(self) -> Self {
        self.unary(self.value.abs(), abs_slope(self.value))
    }

    pub fn powf(self, c: f64) -> Self {
        self.unary(self.value.powf(c), c * self.value.powf(c - 1.0))
    }
}

impl<'t> Add for AReal<'t> {
    type Output = AReal<'t>;
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, self.value + rhs.value, 1.0, 1.0)
    }
}

impl<'t> Sub for AReal<'t> {
    type Output = AReal<'t>;
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, self.value - rhs.value, 1.0, -1.0)
    }
}

impl<'t> Mul for AReal<'t> {
    type Output = AReal<'t>;
    fn mul(self, rhs: Self) -> Self {
        let value = self.value * rhs.value;
        // a passive zero factor annihilates the product and its derivative
        if (!self.is_active() && self.value == 0.0) || (!rhs.is_active() && rhs.value == 0.0) {
            return Self::constant(value);
        }
        self.binary(rhs, value, rhs.value, self.value)
    }
}

impl<'t> Div for AReal<'t> {
    type Output = AReal<'t>;
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.value;
        let q = self.value / rhs.value;
        if !self.is_active() && self.value == 0.0 && rhs.value != 0.0 {
            return Self::constant(q);
        }
        self.binary(rhs, q, inv, -q * inv)
    }
}

impl<'t> Neg for AReal<'t> {
    type Output = AReal<'t>;
    fn neg(self) -> Self {
        self.unary(-self.value, -1.0)
    }
}

macro_rules! areal_passive_ops {
    ($($trait:ident $method:ident $assign_trait:ident $assign_method:ident),*) => {$(
        impl<'t> $trait<f64> for AReal<'t> {
            type Output = AReal<'t>;
            fn $method(self, rhs: f64) -> AReal<'t> {
                self.$method(AReal::constant(rhs))
            }
        }

        impl<'t> $trait<AReal<'t>> for f64 {
            type Output = AReal<'t>;
            fn $method(self, rhs: AReal<'t>) -> AReal<'t> {
                AReal::constant(self).$method(rhs)
            }
        }

        impl<'t> $assign_trait for AReal<'t> {
            fn $assign_method(&mut self, rhs: AReal<'t>) {
                *self = (*self).$method(rhs);
            }
        }

        impl<'t> $assign_trait<f64> for AReal<'t> {
            fn $assign_method(&mut self, rhs: f64) {
                *self = (*self).$method(rhs);
            }
        }
    )*};
}

areal_passive_ops!(
    Add add AddAssign add_assign,
    Sub sub SubAssign sub_assign,
    Mul mul MulAssign mul_assign,
    Div div DivAssign div_assign
);

impl PartialEq for AReal<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl PartialOrd for AReal<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value.partial_cmp(&other.value)
    }
}

impl<'t> Scalar for AReal<'t> {
    fn from_f64(v: f64) -> Self {
        AReal::constant(v)
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn sqrt(self) -> Self {
        AReal::sqrt(self)
    }

    fn abs(self) -> Self {
        AReal::abs(self)
    }

    fn ln(self) -> Self {
        AReal::ln(self)
    }
}

/// Deferred right-hand side of an assignment.
///
/// Holds the eagerly computed value and the accumulated partial derivatives
/// with respect to every active leaf. Duplicate leaves are kept until
/// [`Expr::assign`], which merges them by summing their weights.
#[derive(Clone)]
pub struct Expr<'t> {
    value: f64,
    deps: Vec<(VarRef, f64)>,
    tape: Option<&'t Tape>,
}

impl fmt::Debug for Expr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Expr")
            .field("value", &self.value)
            .field("deps", &self.deps)
            .finish()
    }
}

impl<'t> From<AReal<'t>> for Expr<'t> {
    fn from(x: AReal<'t>) -> Self {
        let deps = if x.is_active() { vec![(x.var, 1.0)] } else { Vec::new() };
        Expr {
            value: x.value,
            deps,
            tape: x.tape,
        }
    }
}

impl From<f64> for Expr<'_> {
    fn from(value: f64) -> Self {
        Expr {
            value,
            deps: Vec::new(),
            tape: None,
        }
    }
}

impl<'t> Expr<'t> {
    pub fn value(&self) -> f64 {
        self.value
    }

    /// Accumulated `(variable, partial)` pairs, unmerged.
    pub fn deps(&self) -> &[(VarRef, f64)] {
        &self.deps
    }

    /// Records the expression as one tape entry. A passive expression records
    /// nothing and yields a passive scalar.
    pub fn assign(self) -> AReal<'t> {
        let Some(tape) = self.tape else {
            return AReal::constant(self.value);
        };
        let mut deps = self.deps;
        deps.sort_by_key(|&(r, _)| r);
        let mut merged: Vec<(VarRef, f64)> = Vec::with_capacity(deps.len());
        for (r, w) in deps {
            match merged.last_mut() {
                Some((last, acc)) if *last == r => *acc += w,
                _ => merged.push((r, w)),
            }
        }
        AReal::recorded(tape, self.value, &merged)
    }

    fn chain(mut self, value: f64, partial: f64) -> Self {
        self.value = value;
        for (_, w) in &mut self.deps {
            *w *= partial;
        }
        self
    }

    fn join(self, rhs: Expr<'t>, value: f64, d_lhs: f64, d_rhs: f64) -> Self {
        let tape = common_tape(self.tape, rhs.tape);
        let mut deps = self.deps;
        for (_, w) in &mut deps {
            *w *= d_lhs;
        }
        deps.extend(rhs.deps.into_iter().map(|(r, w)| (r, w * d_rhs)));
        Expr { value, deps, tape }
    }

    pub fn sin(self) -> Self {
        let x = self.value;
        self.chain(x.sin(), x.cos())
    }

    pub fn cos(self) -> Self {
        let x = self.value;
        self.chain(x.cos(), -x.sin())
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e)
    }

    pub fn ln(self) -> Self {
        let x = self.value;
        self.chain(x.ln(), 1.0 / x)
    }

    pub fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s)
    }

    pub fn abs(self) -> Self {
        let x = self.value;
        self.chain(x.abs(), abs_slope(x))
    }

    pub fn powf(self, c: f64) -> Self {
        let x = self.value;
        self.chain(x.powf(c), c * x.powf(c - 1.0))
    }
}

impl<'t> Neg for Expr<'t> {
    type Output = Expr<'t>;
    fn neg(self) -> Self {
        let v = -self.value;
        self.chain(v, -1.0)
    }
}

impl<'t, R: Into<Expr<'t>>> Add<R> for Expr<'t> {
    type Output = Expr<'t>;
    fn add(self, rhs: R) -> Self {
        let rhs = rhs.into();
        let v = self.value + rhs.value;
        self.join(rhs, v, 1.0, 1.0)
    }
}

impl<'t, R: Into<Expr<'t>>> Sub<R> for Expr<'t> {
    type Output = Expr<'t>;
    fn sub(self, rhs: R) -> Self {
        let rhs = rhs.into();
        let v = self.value - rhs.value;
        self.join(rhs, v, 1.0, -1.0)
    }
}

impl<'t, R: Into<Expr<'t>>> Mul<R> for Expr<'t> {
    type Output = Expr<'t>;
    fn mul(self, rhs: R) -> Self {
        let rhs = rhs.into();
        let (a, b) = (self.value, rhs.value);
        self.join(rhs, a * b, b, a)
    }
}

impl<'t, R: Into<Expr<'t>>> Div<R> for Expr<'t> {
    type Output = Expr<'t>;
    fn div(self, rhs: R) -> Self {
        let rhs = rhs.into();
        let inv = 1.0 / rhs.value;
        let q = self.value / rhs.value;
        self.join(rhs, q, inv, -q * inv)
    }
}

macro_rules! into_expr_lhs {
    ($lhs:ty; $($trait:ident $method:ident),*) => {$(
        impl<'t> $trait<Expr<'t>> for $lhs {
            type Output = Expr<'t>;
            fn $method(self, rhs: Expr<'t>) -> Expr<'t> {
                Expr::from(self).$method(rhs)
            }
        }
    )*};
}

into_expr_lhs!(AReal<'t>; Add add, Sub sub, Mul mul, Div div);
into_expr_lhs!(f64; Add add, Sub sub, Mul mul, Div div);
