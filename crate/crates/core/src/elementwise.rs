//! Elementwise matrix assignment under the two recording policies.
//!
//! `dst = f(src)` is evaluated per element. Under [`Policy::Eager`] the
//! functor's result is first materialized as an active scalar (a temporary
//! tape entry) and then assigned to the destination, which records a second
//! entry. This is the graph produced when the matrix layer forces every
//! functor to return the scalar type. Under [`Policy::Fused`] the functor
//! returns a deferred expression that is assigned directly, one entry per
//! element.

use crate::adjoint::{AReal, Expr};
use crate::matrix::DenseMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Policy {
    Eager,
    #[default]
    Fused,
}

pub fn map_assign<'t, F>(src: &DenseMatrix<AReal<'t>>, policy: Policy, f: F) -> DenseMatrix<AReal<'t>>
where
    F: Fn(Expr<'t>) -> Expr<'t>,
{
    src.map(|&x| match policy {
        Policy::Eager => {
            let tmp = f(x.expr()).assign();
            tmp.expr().assign()
        }
        Policy::Fused => f(x.expr()).assign(),
    })
}

/// `dst = -src`.
pub fn negate<'t>(src: &DenseMatrix<AReal<'t>>, policy: Policy) -> DenseMatrix<AReal<'t>> {
    map_assign(src, policy, |e| -e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape::Tape;

    #[test]
    fn fused_negation_has_no_temporaries() {
        let t = Tape::new();
        let b = DenseMatrix::from_fn(3, 2, |i, j| AReal::new(&t, (i * 2 + j) as f64 - 2.5));
        let before = t.position().0;
        let a = negate(&b, Policy::Fused);
        assert_eq!(t.position().0 - before, 6);

        let before = t.position().0;
        let a_eager = negate(&b, Policy::Eager);
        assert_eq!(t.position().0 - before, 12);

        for (x, y) in a.as_slice().iter().zip(a_eager.as_slice()) {
            assert_eq!(x.value(), y.value());
        }
    }

    #[test]
    fn policies_agree_on_adjoints() {
        let t = Tape::new();
        let b = DenseMatrix::from_fn(2, 2, |i, j| AReal::new(&t, 0.3 + (i + 2 * j) as f64));
        let fused = map_assign(&b, Policy::Fused, |e| (e * 2.0).sin());
        let eager = map_assign(&b, Policy::Eager, |e| (e * 2.0).sin());
        for x in fused.as_slice() {
            x.seed(1.0);
        }
        t.interpret_reverse().unwrap();
        let g_fused: Vec<f64> = b.as_slice().iter().map(|x| x.adjoint()).collect();
        t.clear_adjoints();
        for x in eager.as_slice() {
            x.seed(1.0);
        }
        t.interpret_reverse().unwrap();
        for (x, gf) in b.as_slice().iter().zip(g_fused) {
            assert!((x.adjoint() - gf).abs() < 1e-15);
            assert!((gf - 2.0 * (2.0 * x.value()).cos()).abs() < 1e-15);
        }
    }
}
