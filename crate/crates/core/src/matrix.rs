//! Row-major dense matrix, generic over its scalar.

use std::ops::{Index, IndexMut};

use crate::linalg::LinalgError;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S> DenseMatrix<S> {
    /// Wraps row-major `data`, which must hold exactly `rows * cols` values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DataLength {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<S> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn map<T>(&self, f: impl FnMut(&S) -> T) -> DenseMatrix<T> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub(crate) fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub(crate) fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }
}

impl<S: Clone> DenseMatrix<S> {
    pub fn filled(rows: usize, cols: usize, value: S) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// `n x 1` matrix.
    pub fn column(values: Vec<S>) -> Self {
        DenseMatrix {
            rows: values.len(),
            cols: 1,
            data: values,
        }
    }

    pub fn transpose(&self) -> Self {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }
}

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, S::zero())
    }

    pub fn identity(n: usize) -> Self {
        DenseMatrix::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    /// Primal values, dropping derivative information.
    pub fn values(&self) -> DenseMatrix<f64> {
        self.map(Scalar::value)
    }

    /// Largest absolute entry value; zero for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.value().abs()))
    }

    /// Triple-loop product.
    ///
    /// Every `C(i,j)` starts from a passive zero and accumulates
    /// `A(i,k) * B(k,j)` in increasing `k`, one multiply and one add per term.
    /// The loops run in `i, k, j` order for locality; per element this is the
    /// same sequence of operations as the textbook `i, j, k` nest.
    pub fn matmul(&self, rhs: &DenseMatrix<S>) -> Result<DenseMatrix<S>, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let (n, m, p) = (self.rows, self.cols, rhs.cols);
        let mut c = DenseMatrix::zeros(n, p);
        for i in 0..n {
            let out = &mut c.data[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                let b = &rhs.data[k * p..(k + 1) * p];
                for (cij, &bkj) in out.iter_mut().zip(b) {
                    *cij = *cij + a * bkj;
                }
            }
        }
        Ok(c)
    }

    /// `self^T * rhs` without forming the transpose.
    pub fn matmul_transpose_a(&self, rhs: &DenseMatrix<S>) -> Result<DenseMatrix<S>, LinalgError> {
        if self.rows != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul_transpose_a",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let (m, n, p) = (self.rows, self.cols, rhs.cols);
        let mut c = DenseMatrix::zeros(n, p);
        for k in 0..m {
            let b = &rhs.data[k * p..(k + 1) * p];
            for i in 0..n {
                let a = self.data[k * n + i];
                let out = &mut c.data[i * p..(i + 1) * p];
                for (cij, &bkj) in out.iter_mut().zip(b) {
                    *cij = *cij + a * bkj;
                }
            }
        }
        Ok(c)
    }

    /// `self * rhs^T` without forming the transpose.
    pub fn matmul_transpose_b(&self, rhs: &DenseMatrix<S>) -> Result<DenseMatrix<S>, LinalgError> {
        if self.cols != rhs.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul_transpose_b",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let (n, m, p) = (self.rows, self.cols, rhs.rows);
        let mut c = DenseMatrix::zeros(n, p);
        for i in 0..n {
            let a = &self.data[i * m..(i + 1) * m];
            for j in 0..p {
                let b = &rhs.data[j * m..(j + 1) * m];
                let mut acc = S::zero();
                for (&x, &y) in a.iter().zip(b) {
                    acc = acc + x * y;
                }
                c.data[i * p + j] = acc;
            }
        }
        Ok(c)
    }
}

impl<S> Index<(usize, usize)> for DenseMatrix<S> {
    type Output = S;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for DenseMatrix<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> DenseMatrix<f64> {
        DenseMatrix::from_vec(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn two_by_two_product() {
        let a = m(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = m(2, 2, &[5.0, 6.0, 7.0, 8.0]);
        assert_eq!(a.matmul(&b).unwrap(), m(2, 2, &[19.0, 22.0, 43.0, 50.0]));
    }

    #[test]
    fn identity_is_neutral() {
        let a = m(3, 3, &[0.3, -1.0, 2.5, 4.0, 0.0, -0.5, 1.5, 2.0, -3.0]);
        assert_eq!(DenseMatrix::identity(3).matmul(&a).unwrap(), a);
    }

    #[test]
    fn dimension_mismatch() {
        let a = DenseMatrix::<f64>::zeros(2, 3);
        assert!(matches!(
            a.matmul(&a),
            Err(LinalgError::DimensionMismatch { left: (2, 3), right: (2, 3), .. })
        ));
        assert!(DenseMatrix::from_vec(2, 2, vec![1.0]).is_err());
    }

    #[test]
    fn transposed_products() {
        let a = m(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = m(2, 2, &[1.0, -1.0, 0.5, 2.0]);
        assert_eq!(
            a.matmul_transpose_a(&b).unwrap(),
            a.transpose().matmul(&b).unwrap()
        );
        let c = m(4, 3, &[1.0, 0.0, 2.0, -1.0, 3.0, 1.0, 0.0, 0.5, 0.25, 2.0, 2.0, 2.0]);
        assert_eq!(
            a.matmul_transpose_b(&c).unwrap(),
            a.matmul(&c.transpose()).unwrap()
        );
    }
}
