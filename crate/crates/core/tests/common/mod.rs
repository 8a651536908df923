#![allow(dead_code)]

use hyad_core::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn uniform(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..=1.0))
}

/// Uniform entries plus a scaled random permutation matrix: pivoting is
/// exercised and the condition number stays small.
pub fn well_conditioned(rng: &mut impl Rng, n: usize) -> DenseMatrix<f64> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let shift = (n as f64).max(2.0);
    let mut a = uniform(rng, n, n);
    for (i, &j) in perm.iter().enumerate() {
        a[(i, j)] += if rng.gen_bool(0.5) { shift } else { -shift };
    }
    a
}

/// `M^T M + n I`.
pub fn spd(rng: &mut impl Rng, n: usize) -> DenseMatrix<f64> {
    let m = uniform(rng, n, n);
    let mut a = m.matmul_transpose_a(&m).unwrap();
    for i in 0..n {
        a[(i, i)] += n as f64;
    }
    // exact symmetry
    DenseMatrix::from_fn(n, n, |i, j| if i >= j { a[(i, j)] } else { a[(j, i)] })
}

pub fn max_abs_diff(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn sub(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] - b[(i, j)])
}

/// Folds the strict upper triangle onto the lower one: the gradient with
/// respect to the independent entries of a symmetric matrix.
pub fn fold_symmetric(g: &DenseMatrix<f64>) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(g.rows(), g.cols(), |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => g[(i, j)] + g[(j, i)],
        std::cmp::Ordering::Equal => g[(i, i)],
        std::cmp::Ordering::Less => 0.0,
    })
}

pub fn dot(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

/// Central difference of `f` at `x` along `dir`.
pub fn central_difference(
    f: impl Fn(&DenseMatrix<f64>) -> f64,
    x: &DenseMatrix<f64>,
    dir: &DenseMatrix<f64>,
    h: f64,
) -> f64 {
    let step = |s: f64| DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] + s * dir[(i, j)]);
    (f(&step(h)) - f(&step(-h))) / (2.0 * h)
}

/// Gradient of `f` by central differences, one coordinate at a time.
pub fn fd_gradient(f: impl Fn(&DenseMatrix<f64>) -> f64, x: &DenseMatrix<f64>, h: f64) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| {
        let e = DenseMatrix::from_fn(x.rows(), x.cols(), |r, c| if (r, c) == (i, j) { 1.0 } else { 0.0 });
        central_difference(&f, x, &e, h)
    })
}
