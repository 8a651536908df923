//! Tangent-mode scalar: a value carrying one directional derivative.

use std::cmp::Ordering;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::scalar::{abs_slope, Scalar};

#[derive(Clone, Copy, Debug, Default)]
pub struct TReal {
    pub value: f64,
    pub deriv: f64,
}

impl TReal {
    pub fn new(value: f64, deriv: f64) -> Self {
        TReal { value, deriv }
    }

    pub fn constant(value: f64) -> Self {
        TReal { value, deriv: 0.0 }
    }

    fn chain(self, value: f64, slope: f64) -> Self {
        TReal {
            value,
            deriv: slope * self.deriv,
        }
    }

    pub fn sin(self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }

    pub fn cos(self) -> Self {
        self.chain(self.value.cos(), -self.value.sin())
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e)
    }

    pub fn ln(self) -> Self {
        self.chain(self.value.ln(), 1.0 / self.value)
    }

    pub fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s)
    }

    pub fn abs(self) -> Self {
        self.chain(self.value.abs(), abs_slope(self.value))
    }

    pub fn powf(self, c: f64) -> Self {
        self.chain(self.value.powf(c), c * self.value.powf(c - 1.0))
    }
}

impl Add for TReal {
    type Output = TReal;
    fn add(self, rhs: Self) -> Self {
        TReal::new(self.value + rhs.value, self.deriv + rhs.deriv)
    }
}

impl Sub for TReal {
    type Output = TReal;
    fn sub(self, rhs: Self) -> Self {
        TReal::new(self.value - rhs.value, self.deriv - rhs.deriv)
    }
}

impl Mul for TReal {
    type Output = TReal;
    fn mul(self, rhs: Self) -> Self {
        TReal::new(
            self.value * rhs.value,
            self.deriv * rhs.value + self.value * rhs.deriv,
        )
    }
}

impl Div for TReal {
    type Output = TReal;
    fn div(self, rhs: Self) -> Self {
        let q = self.value / rhs.value;
        TReal::new(q, (self.deriv - q * rhs.deriv) / rhs.value)
    }
}

impl Neg for TReal {
    type Output = TReal;
    fn neg(self) -> Self {
        TReal::new(-self.value, -self.deriv)
    }
}

macro_rules! treal_passive_ops {
    ($($trait:ident $method:ident $assign_trait:ident $assign_method:ident),*) => {$(
        impl $trait<f64> for TReal {
            type Output = TReal;
            fn $method(self, rhs: f64) -> TReal {
                self.$method(TReal::constant(rhs))
            }
        }

        impl $trait<TReal> for f64 {
            type Output = TReal;
            fn $method(self, rhs: TReal) -> TReal {
                TReal::constant(self).$method(rhs)
            }
        }

        impl $assign_trait for TReal {
            fn $assign_method(&mut self, rhs: TReal) {
                *self = (*self).$method(rhs);
            }
        }

        impl $assign_trait<f64> for TReal {
            fn $assign_method(&mut self, rhs: f64) {
                *self = (*self).$method(rhs);
            }
        }
    )*};
}

treal_passive_ops!(
    Add add AddAssign add_assign,
    Sub sub SubAssign sub_assign,
    Mul mul MulAssign mul_assign,
    Div div DivAssign div_assign
);

impl PartialEq for TReal {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl PartialOrd for TReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value.partial_cmp(&other.value)
    }
}

impl Scalar for TReal {
    fn from_f64(v: f64) -> Self {
        TReal::constant(v)
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn sqrt(self) -> Self {
        TReal::sqrt(self)
    }

    fn abs(self) -> Self {
        TReal::abs(self)
    }

    fn ln(self) -> Self {
        TReal::ln(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        let p = TReal::new(2.0, 1.0) * TReal::new(3.0, 0.0);
        assert_eq!((p.value, p.deriv), (6.0, 3.0));
    }

    #[test]
    fn sine_at_zero() {
        let s = TReal::new(0.0, 1.0).sin();
        assert_eq!((s.value, s.deriv), (0.0, 1.0));
    }

    #[test]
    fn composite_against_central_difference() {
        let f = |x: f64| x.sin().exp();
        let x = 1.0;
        let h = 1e-6;
        let fd = (f(x + h) - f(x - h)) / (2.0 * h);
        let t = TReal::new(x, 1.0).sin().exp();
        assert!((t.deriv - fd).abs() <= 1e-8 * fd.abs());
        assert!((t.deriv - 1f64.sin().exp() * 1f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn quotient_rule() {
        let q = TReal::new(1.0, 1.0) / TReal::new(2.0, 0.0);
        assert_eq!((q.value, q.deriv), (0.5, 0.5));
        let q = 1.0 / TReal::new(2.0, 1.0);
        assert_eq!(q.deriv, -0.25);
    }
}
