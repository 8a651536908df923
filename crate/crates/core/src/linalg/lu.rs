use super::{is_negligible, require_rhs, require_square, singular_tol, LinalgError};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// `P A = L U` with partial (row) pivoting.
///
/// `lu` holds the unit-lower `L` strictly below the diagonal and `U` on and
/// above it. `pivots[k]` is the row swapped with row `k` at elimination step
/// `k`; applying the swaps in order to the identity yields `P`.
#[derive(Clone, Debug)]
pub struct LuFactors<S> {
    lu: DenseMatrix<S>,
    pivots: Vec<usize>,
    sign: f64,
}

pub fn lu_factor<S: Scalar>(a: &DenseMatrix<S>) -> Result<LuFactors<S>, LinalgError> {
    let n = require_square(a)?;
    let tol = singular_tol(a);
    let mut lu = a.clone();
    let mut pivots = Vec::with_capacity(n);
    let mut sign = 1.0;

    for k in 0..n {
        let (p, magnitude) = (k..n)
            .map(|i| (i, lu[(i, k)].value().abs()))
            .fold((k, -1.0), |best, cand| if cand.1 > best.1 { cand } else { best });
        if is_negligible(magnitude, tol) {
            return Err(LinalgError::Singular { index: k, magnitude });
        }
        if p != k {
            lu.swap_rows(p, k);
            sign = -sign;
        }
        pivots.push(p);

        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let l = lu[(i, k)] / pivot;
            lu[(i, k)] = l;
            for j in k + 1..n {
                lu[(i, j)] = lu[(i, j)] - l * lu[(k, j)];
            }
        }
    }
    Ok(LuFactors { lu, pivots, sign })
}

impl<S: Scalar> LuFactors<S> {
    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// Packed `L` and `U`.
    pub fn packed(&self) -> &DenseMatrix<S> {
        &self.lu
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Parity of the row permutation, `+1` or `-1`.
    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn l(&self) -> DenseMatrix<S> {
        DenseMatrix::from_fn(self.dim(), self.dim(), |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.lu[(i, j)],
            std::cmp::Ordering::Equal => S::one(),
            std::cmp::Ordering::Less => S::zero(),
        })
    }

    pub fn u(&self) -> DenseMatrix<S> {
        DenseMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            if i <= j {
                self.lu[(i, j)]
            } else {
                S::zero()
            }
        })
    }

    /// Applies the recorded row swaps to `m`, i.e. computes `P m`.
    pub fn permute_rows(&self, m: &mut DenseMatrix<S>) {
        for (k, &p) in self.pivots.iter().enumerate() {
            m.swap_rows(k, p);
        }
    }

    /// Solves `A X = B` for every column of `B`.
    pub fn solve(&self, b: &DenseMatrix<S>) -> Result<DenseMatrix<S>, LinalgError> {
        let n = self.dim();
        require_rhs(n, b, "lu_solve")?;
        let mut x = b.clone();
        self.permute_rows(&mut x);
        for c in 0..x.cols() {
            // L y = P b, unit diagonal
            for i in 0..n {
                let mut acc = x[(i, c)];
                for k in 0..i {
                    acc = acc - self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = acc;
            }
            // U x = y
            for i in (0..n).rev() {
                let mut acc = x[(i, c)];
                for k in i + 1..n {
                    acc = acc - self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = acc / self.lu[(i, i)];
            }
        }
        Ok(x)
    }

    /// Solves `A^T X = B` with the same factors: `U^T L^T P X = B`.
    pub fn solve_transposed(&self, b: &DenseMatrix<S>) -> Result<DenseMatrix<S>, LinalgError> {
        let n = self.dim();
        require_rhs(n, b, "lu_solve_transposed")?;
        let mut x = b.clone();
        // both sweeps walk rows of the packed factors, not columns
        for c in 0..x.cols() {
            // U^T z = b
            for k in 0..n {
                let zk = x[(k, c)] / self.lu[(k, k)];
                x[(k, c)] = zk;
                for i in k + 1..n {
                    x[(i, c)] = x[(i, c)] - self.lu[(k, i)] * zk;
                }
            }
            // L^T w = z, unit diagonal
            for k in (0..n).rev() {
                let wk = x[(k, c)];
                for i in 0..k {
                    x[(i, c)] = x[(i, c)] - self.lu[(k, i)] * wk;
                }
            }
        }
        // X = P^T W: undo the swaps in reverse order
        for (k, &p) in self.pivots.iter().enumerate().rev() {
            x.swap_rows(k, p);
        }
        Ok(x)
    }

    /// `A^{-1}` by solving against the identity columns.
    pub fn inverse(&self) -> DenseMatrix<S> {
        self.solve(&DenseMatrix::identity(self.dim()))
            .expect("identity has matching shape")
    }

    pub fn log_abs_det(&self) -> S {
        (0..self.dim()).fold(S::zero(), |acc, i| acc + self.lu[(i, i)].abs().ln())
    }

    pub fn det(&self) -> S {
        (0..self.dim()).fold(S::from_f64(self.sign), |acc, i| acc * self.lu[(i, i)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n: usize, v: &[f64]) -> DenseMatrix<f64> {
        DenseMatrix::from_vec(n, n, v.to_vec()).unwrap()
    }

    #[test]
    fn permutation_matrix_swaps_once() {
        let f = lu_factor(&m(2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert_eq!(f.pivots(), &[1, 1]);
        assert_eq!(f.sign(), -1.0);
        assert_eq!(f.det(), -1.0);
    }

    #[test]
    fn diagonal_needs_no_swaps() {
        let f = lu_factor(&m(2, &[2.0, 0.0, 0.0, 4.0])).unwrap();
        assert_eq!(f.pivots(), &[0, 1]);
        assert_eq!(f.u(), m(2, &[2.0, 0.0, 0.0, 4.0]));
        let x = f.solve(&DenseMatrix::column(vec![2.0, 8.0])).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0]);
        assert_eq!(f.inverse(), m(2, &[0.5, 0.0, 0.0, 0.25]));
    }

    #[test]
    fn log_abs_det_of_diagonal() {
        let f = lu_factor(&m(2, &[2.0, 0.0, 0.0, -4.0])).unwrap();
        assert!((f.log_abs_det() - 8f64.ln()).abs() < 1e-15);
        let f = lu_factor(&DenseMatrix::<f64>::identity(3)).unwrap();
        assert_eq!(f.log_abs_det(), 0.0);
        assert_eq!(f.inverse(), DenseMatrix::identity(3));
    }

    #[test]
    fn singular_and_non_square() {
        assert!(matches!(
            lu_factor(&m(2, &[1.0, 2.0, 2.0, 4.0])),
            Err(LinalgError::Singular { index: 1, .. })
        ));
        assert!(matches!(
            lu_factor(&DenseMatrix::<f64>::zeros(2, 2)),
            Err(LinalgError::Singular { index: 0, .. })
        ));
        assert!(matches!(
            lu_factor(&DenseMatrix::<f64>::zeros(2, 3)),
            Err(LinalgError::NotSquare { .. })
        ));
    }

    #[test]
    fn transposed_solve_on_symmetric_matches() {
        let a = m(3, &[4.0, 1.0, -2.0, 1.0, 3.0, 0.5, -2.0, 0.5, 5.0]);
        let f = lu_factor(&a).unwrap();
        let b = DenseMatrix::column(vec![1.0, -2.0, 0.5]);
        let x = f.solve(&b).unwrap();
        let y = f.solve_transposed(&b).unwrap();
        for (p, q) in x.as_slice().iter().zip(y.as_slice()) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn det_sign_matches_cofactor_expansion() {
        fn cofactor(a: &DenseMatrix<f64>) -> f64 {
            let n = a.rows();
            if n == 1 {
                return a[(0, 0)];
            }
            (0..n)
                .map(|j| {
                    let minor = DenseMatrix::from_fn(n - 1, n - 1, |r, c| {
                        a[(r + 1, if c < j { c } else { c + 1 })]
                    });
                    let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                    s * a[(0, j)] * cofactor(&minor)
                })
                .sum()
        }
        for n in [2usize, 3] {
            let cells = n * n;
            let total = 5usize.pow(cells as u32);
            for code in 0..total {
                let mut c = code;
                let a = DenseMatrix::from_fn(n, n, |_, _| {
                    let v = (c % 5) as f64 - 2.0;
                    c /= 5;
                    v
                });
                let det = cofactor(&a);
                match lu_factor(&a) {
                    Ok(f) => {
                        let sign = f.sign()
                            * (0..n).map(|i| f.packed()[(i, i)].signum()).product::<f64>();
                        assert_eq!(sign, det.signum(), "{a:?}");
                        assert!((f.det() - det).abs() < 1e-12, "{a:?}");
                    }
                    Err(_) => assert!(det.abs() < 1e-9, "{a:?}"),
                }
            }
        }
    }
}
