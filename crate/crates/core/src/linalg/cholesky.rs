use super::{require_rhs, require_square, singular_tol, LinalgError};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// `A = L L^T` for symmetric positive definite `A`.
///
/// Only the lower triangle of `A` is read once symmetry has been checked.
#[derive(Clone, Debug)]
pub struct CholeskyFactors<S> {
    l: DenseMatrix<S>,
}

pub fn cholesky_factor<S: Scalar>(a: &DenseMatrix<S>) -> Result<CholeskyFactors<S>, LinalgError> {
    let n = require_square(a)?;
    let tol = singular_tol(a);
    for i in 0..n {
        for j in 0..i {
            if (a[(i, j)].value() - a[(j, i)].value()).abs() > tol {
                return Err(LinalgError::NotSymmetric { row: i, col: j });
            }
        }
    }

    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d = d - l[(j, k)] * l[(j, k)];
        }
        // written so that NaN is rejected too
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(d.value() > 0.0) {
            return Err(LinalgError::NotPositiveDefinite {
                index: j,
                pivot: d.value(),
            });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(CholeskyFactors { l })
}

impl<S: Scalar> CholeskyFactors<S> {
    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn l(&self) -> &DenseMatrix<S> {
        &self.l
    }

    /// Solves `A X = B` by `L Y = B`, `L^T X = Y`.
    pub fn solve(&self, b: &DenseMatrix<S>) -> Result<DenseMatrix<S>, LinalgError> {
        let n = self.dim();
        require_rhs(n, b, "cholesky_solve")?;
        let mut x = b.clone();
        for c in 0..x.cols() {
            for i in 0..n {
                let mut acc = x[(i, c)];
                for k in 0..i {
                    acc = acc - self.l[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = acc / self.l[(i, i)];
            }
            // L^T, sweeping rows of L
            for k in (0..n).rev() {
                let xk = x[(k, c)] / self.l[(k, k)];
                x[(k, c)] = xk;
                for i in 0..k {
                    x[(i, c)] = x[(i, c)] - self.l[(k, i)] * xk;
                }
            }
        }
        Ok(x)
    }

    /// `A` is symmetric, so this is [`solve`](Self::solve).
    pub fn solve_transposed(&self, b: &DenseMatrix<S>) -> Result<DenseMatrix<S>, LinalgError> {
        self.solve(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factor() {
        let f = cholesky_factor(&DenseMatrix::<f64>::identity(3)).unwrap();
        assert_eq!(f.l(), &DenseMatrix::identity(3));
    }

    #[test]
    fn hand_elimination() {
        let a = DenseMatrix::from_vec(2, 2, vec![4.0, 2.0, 2.0, 3.0]).unwrap();
        let f = cholesky_factor(&a).unwrap();
        let l = f.l();
        assert_eq!(l[(0, 0)], 2.0);
        assert_eq!(l[(0, 1)], 0.0);
        assert_eq!(l[(1, 0)], 1.0);
        assert!((l[(1, 1)] - 2f64.sqrt()).abs() < 1e-15);
        let llt = l.matmul_transpose_b(l).unwrap();
        for (p, q) in llt.as_slice().iter().zip(a.as_slice()) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_symmetric_and_indefinite() {
        let a = DenseMatrix::from_vec(2, 2, vec![4.0, 2.0, 1.0, 3.0]).unwrap();
        assert!(matches!(cholesky_factor(&a), Err(LinalgError::NotSymmetric { row: 1, col: 0 })));
        let b = DenseMatrix::from_vec(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            cholesky_factor(&b),
            Err(LinalgError::NotPositiveDefinite { index: 1, .. })
        ));
    }
}
