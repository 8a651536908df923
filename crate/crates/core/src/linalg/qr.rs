use super::{is_negligible, require_rhs, require_square, singular_tol, LinalgError};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QrPivoting {
    None,
    /// Each step brings the remaining column of largest norm to the front.
    Column,
}

/// Householder QR, `A P = Q R`.
///
/// `qr` holds `R` on and above the diagonal and the reflector tails below it
/// (the leading reflector component is an implicit 1). Reflector `k` is
/// `H_k = I - tau[k] v_k v_k^T` and `Q = H_0 H_1 ... H_{n-1}`. Column `j` of
/// `A P` is column `col_pivots[j]` of `A`.
#[derive(Clone, Debug)]
pub struct QrFactors<S> {
    qr: DenseMatrix<S>,
    tau: Vec<S>,
    col_pivots: Vec<usize>,
}

pub fn qr_factor<S: Scalar>(a: &DenseMatrix<S>, pivoting: QrPivoting) -> Result<QrFactors<S>, LinalgError> {
    let n = require_square(a)?;
    let tol = singular_tol(a);
    let mut qr = a.clone();
    let mut tau = Vec::with_capacity(n);
    let mut col_pivots: Vec<usize> = (0..n).collect();

    for k in 0..n {
        if pivoting == QrPivoting::Column {
            // pivot choice only inspects values, so every scalar type agrees
            let norm2 = |j: usize| (k..n).map(|i| qr[(i, j)].value().powi(2)).sum::<f64>();
            let (best, _) = (k..n)
                .map(|j| (j, norm2(j)))
                .fold((k, -1.0), |b, c| if c.1 > b.1 { c } else { b });
            qr.swap_cols(k, best);
            col_pivots.swap(k, best);
        }

        let x0 = qr[(k, k)];
        let mut norm2 = S::zero();
        for i in k..n {
            norm2 = norm2 + qr[(i, k)] * qr[(i, k)];
        }
        let alpha = norm2.sqrt();
        if is_negligible(alpha.value(), tol) {
            return Err(LinalgError::Singular {
                index: k,
                magnitude: alpha.value(),
            });
        }
        let beta = if x0.value() >= 0.0 { -alpha } else { alpha };
        let t = (beta - x0) / beta;
        let scale = S::one() / (x0 - beta);
        for i in k + 1..n {
            qr[(i, k)] = qr[(i, k)] * scale;
        }
        qr[(k, k)] = beta;

        for j in k + 1..n {
            let mut w = qr[(k, j)];
            for i in k + 1..n {
                w = w + qr[(i, k)] * qr[(i, j)];
            }
            let w = t * w;
            qr[(k, j)] = qr[(k, j)] - w;
            for i in k + 1..n {
                qr[(i, j)] = qr[(i, j)] - w * qr[(i, k)];
            }
        }
        tau.push(t);
    }

    for i in 0..n {
        let magnitude = qr[(i, i)].value().abs();
        if is_negligible(magnitude, tol) {
            return Err(LinalgError::Singular { index: i, magnitude });
        }
    }
    Ok(QrFactors { qr, tau, col_pivots })
}

impl<S: Scalar> QrFactors<S> {
    pub fn dim(&self) -> usize {
        self.qr.rows()
    }

    pub fn packed(&self) -> &DenseMatrix<S> {
        &self.qr
    }

    pub fn tau(&self) -> &[S] {
        &self.tau
    }

    pub fn col_pivots(&self) -> &[usize] {
        &self.col_pivots
    }

    pub fn r(&self) -> DenseMatrix<S> {
        DenseMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            if i <= j {
                self.qr[(i, j)]
            } else {
                S::zero()
            }
        })
    }

    pub fn q(&self) -> DenseMatrix<S> {
        let mut q = DenseMatrix::identity(self.dim());
        self.apply_q(&mut q);
        q
    }

    fn apply_reflector(&self, k: usize, b: &mut DenseMatrix<S>) {
        let n = self.dim();
        for c in 0..b.cols() {
            let mut w = b[(k, c)];
            for i in k + 1..n {
                w = w + self.qr[(i, k)] * b[(i, c)];
            }
            let w = self.tau[k] * w;
            b[(k, c)] = b[(k, c)] - w;
            for i in k + 1..n {
                b[(i, c)] = b[(i, c)] - w * self.qr[(i, k)];
            }
        }
    }

    /// `b <- Q^T b`.
    pub fn apply_qt(&self, b: &mut DenseMatrix<S>) {
        for k in 0..self.dim() {
            self.apply_reflector(k, b);
        }
    }

    /// `b <- Q b`.
    pub fn apply_q(&self, b: &mut DenseMatrix<S>) {
        for k in (0..self.dim()).rev() {
            self.apply_reflector(k, b);
        }
    }

    /// Solves `A X = B`: `R W = Q^T B`, then `X = P W`.
    pub fn solve(&self, b: &DenseMatrix<S>) -> Result<DenseMatrix<S>, LinalgError> {
        let n = self.dim();
        require_rhs(n, b, "qr_solve")?;
        let mut w = b.clone();
        self.apply_qt(&mut w);
        for c in 0..w.cols() {
            for i in (0..n).rev() {
                let mut acc = w[(i, c)];
                for k in i + 1..n {
                    acc = acc - self.qr[(i, k)] * w[(k, c)];
                }
                w[(i, c)] = acc / self.qr[(i, i)];
            }
        }
        let mut x = w.clone();
        for (j, &p) in self.col_pivots.iter().enumerate() {
            for c in 0..w.cols() {
                x[(p, c)] = w[(j, c)];
            }
        }
        Ok(x)
    }

    /// Solves `A^T X = B`: `R^T Z = P^T B`, then `X = Q Z`.
    pub fn solve_transposed(&self, b: &DenseMatrix<S>) -> Result<DenseMatrix<S>, LinalgError> {
        let n = self.dim();
        require_rhs(n, b, "qr_solve_transposed")?;
        let mut z = DenseMatrix::from_fn(n, b.cols(), |j, c| b[(self.col_pivots[j], c)]);
        for c in 0..z.cols() {
            // R^T y = z, sweeping rows of R
            for k in 0..n {
                let yk = z[(k, c)] / self.qr[(k, k)];
                z[(k, c)] = yk;
                for i in k + 1..n {
                    z[(i, c)] = z[(i, c)] - self.qr[(k, i)] * yk;
                }
            }
        }
        self.apply_q(&mut z);
        Ok(z)
    }

    pub fn log_abs_det(&self) -> S {
        (0..self.dim()).fold(S::zero(), |acc, i| acc + self.qr[(i, i)].abs().ln())
    }
}
