//! Input fixtures shared by the criterion benchmarks.

use hyad_core::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Uniform `[-1, 1]` entries plus `n` on a shuffled permutation diagonal, so
/// factorizations pivot but stay well conditioned.
pub fn well_conditioned(n: usize, seed: u64) -> DenseMatrix<f64> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    DenseMatrix::from_fn(n, n, |i, j| {
        let u = rng.gen_range(-1.0..=1.0);
        if perm[i] == j {
            u + n as f64
        } else {
            u
        }
    })
}

pub fn vector(n: usize, seed: u64) -> DenseMatrix<f64> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    DenseMatrix::column((0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
}
