//! The 2x2 matrix product taped scalar by scalar, against the hand-expanded
//! adjoint formulas `A_bar = C_bar B^T` and `B_bar = A^T C_bar`.

mod common;

use hyad_core::{AReal, DenseMatrix, Tape};
use rand::Rng;

fn kernel<'t>(a: &DenseMatrix<AReal<'t>>, b: &DenseMatrix<AReal<'t>>) -> DenseMatrix<AReal<'t>> {
    let mut c = DenseMatrix::<AReal>::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                c[(i, j)] += a[(i, k)] * b[(k, j)];
            }
        }
    }
    c
}

#[test]
fn hand_expansion_matches_reverse_sweep() {
    let mut rng = common::rng(11);
    for _ in 0..10 {
        let av: Vec<f64> = (0..4).map(|_| f64::from(rng.gen_range(-9..=9))).collect();
        let bv: Vec<f64> = (0..4).map(|_| f64::from(rng.gen_range(-9..=9))).collect();
        let cb: Vec<f64> = (0..4).map(|_| f64::from(rng.gen_range(-9..=9))).collect();
        let t = Tape::new();
        let a = DenseMatrix::from_fn(2, 2, |i, j| AReal::new(&t, av[2 * i + j]));
        let b = DenseMatrix::from_fn(2, 2, |i, j| AReal::new(&t, bv[2 * i + j]));
        let c = kernel(&a, &b);
        for (x, s) in c.as_slice().iter().zip(&cb) {
            x.seed(*s);
        }
        t.interpret_reverse().unwrap();

        let (b00, b01, b10, b11) = (bv[0], bv[1], bv[2], bv[3]);
        let (a00, a01, a10, a11) = (av[0], av[1], av[2], av[3]);
        let (c00, c01, c10, c11) = (cb[0], cb[1], cb[2], cb[3]);
        let a_bar = [
            c00 * b00 + c01 * b01,
            c00 * b10 + c01 * b11,
            c10 * b00 + c11 * b01,
            c10 * b10 + c11 * b11,
        ];
        let b_bar = [
            c00 * a00 + c10 * a10,
            c01 * a00 + c11 * a10,
            c00 * a01 + c10 * a11,
            c01 * a01 + c11 * a11,
        ];
        for (x, e) in a.as_slice().iter().zip(a_bar) {
            assert!((x.adjoint() - e).abs() <= 1e-14, "{} vs {e}", x.adjoint());
        }
        for (x, e) in b.as_slice().iter().zip(b_bar) {
            assert!((x.adjoint() - e).abs() <= 1e-14, "{} vs {e}", x.adjoint());
        }
    }
}

#[test]
fn eager_census() {
    let t = Tape::new();
    let a = DenseMatrix::from_fn(2, 2, |i, j| AReal::new(&t, 1.0 + (2 * i + j) as f64));
    let b = DenseMatrix::from_fn(2, 2, |i, j| AReal::new(&t, 5.0 + (2 * i + j) as f64));
    let c = kernel(&a, &b);
    assert_eq!(c.values(), DenseMatrix::from_vec(2, 2, vec![19.0, 22.0, 43.0, 50.0]).unwrap());
    let s = t.stats();
    // 8 inputs, 8 products z, 8 accumulations; the first accumulation into
    // each C(i,j) adds to a passive zero and keeps a single edge
    assert_eq!(s.num_entries, 24);
    assert_eq!(s.num_edges, 8 * 2 + 4 + 4 * 2);
    assert_eq!(s.num_callbacks, 0);

    // library kernel gives the same graph size
    let t2 = Tape::new();
    let a2 = DenseMatrix::from_fn(2, 2, |i, j| AReal::new(&t2, a[(i, j)].value()));
    let b2 = DenseMatrix::from_fn(2, 2, |i, j| AReal::new(&t2, b[(i, j)].value()));
    a2.matmul(&b2).unwrap();
    assert_eq!(t2.stats(), s);
}

#[test]
fn all_ones_seed() {
    let t = Tape::new();
    let av = [1.0, 2.0, 3.0, 4.0];
    let bv = [5.0, 6.0, 7.0, 8.0];
    let a = DenseMatrix::from_fn(2, 2, |i, j| AReal::new(&t, av[2 * i + j]));
    let b = DenseMatrix::from_fn(2, 2, |i, j| AReal::new(&t, bv[2 * i + j]));
    let c = a.matmul(&b).unwrap();
    c.as_slice().iter().for_each(|x| x.seed(1.0));
    t.interpret_reverse().unwrap();
    // rows of A_bar are the row sums of B; columns of B_bar the column sums of A
    let a_bar: Vec<f64> = a.as_slice().iter().map(|x| x.adjoint()).collect();
    let b_bar: Vec<f64> = b.as_slice().iter().map(|x| x.adjoint()).collect();
    assert_eq!(a_bar, vec![11.0, 15.0, 11.0, 15.0]);
    assert_eq!(b_bar, vec![4.0, 4.0, 6.0, 6.0]);
}
