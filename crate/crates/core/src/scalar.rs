use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar type accepted by the dense kernels.
///
/// Instantiated with `f64` the kernels are the passive primal code. With
/// [`AReal`](crate::AReal) every arithmetic operation is taped, which is the
/// plain-overloading baseline; with [`TReal`](crate::TReal) they propagate a
/// directional derivative. Pivoting decisions only look at [`Scalar::value`],
/// so all instantiations take the same branches.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A passive constant.
    fn from_f64(v: f64) -> Self;

    fn value(&self) -> f64;

    fn sqrt(self) -> Self;

    fn abs(self) -> Self;

    fn ln(self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn value(&self) -> f64 {
        *self
    }

    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }

    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }

    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
}

/// Derivative of `|x|`, with the subgradient 0 at the kink.
#[inline]
pub(crate) fn abs_slope(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
