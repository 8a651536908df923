//! Log-log slopes of record fields against `n`.

use thiserror::Error;

use crate::bench::BenchRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    TapeEntries,
    TapeEdges,
    TapePayloadScalars,
    TapeBytes,
    TPrimal,
    TAdjoint,
    TTotal,
}

impl Field {
    pub fn get(self, r: &BenchRecord) -> f64 {
        match self {
            Field::TapeEntries => r.tape_entries as f64,
            Field::TapeEdges => r.tape_edges as f64,
            Field::TapePayloadScalars => r.tape_payload_scalars as f64,
            Field::TapeBytes => r.tape_bytes as f64,
            Field::TPrimal => r.t_primal_s,
            Field::TAdjoint => r.t_adjoint_s,
            Field::TTotal => r.t_total_s,
        }
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("need at least {MIN_POINTS} sizes with positive values, found {found}")]
pub struct FitError {
    pub found: usize,
}

pub const MIN_POINTS: usize = 3;

/// Least-squares slope of `ln y` against `ln n` over the largest sizes.
///
/// Nonpositive values are dropped. Of the `k` that remain, the largest
/// `max(3, ceil(k / 2))` are fitted, so four sizes use their top three.
pub fn fit_slope(records: &[BenchRecord], field: Field) -> Result<f64, FitError> {
    let mut pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.n as f64, field.get(r)))
        .filter(|&(n, y)| n > 0.0 && y > 0.0)
        .collect();
    if pts.len() < MIN_POINTS {
        return Err(FitError { found: pts.len() });
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let keep = MIN_POINTS.max(pts.len().div_ceil(2));
    let pts: Vec<(f64, f64)> = pts[pts.len() - keep..].iter().map(|&(n, y)| (n.ln(), y.ln())).collect();
    Ok(slope(&pts))
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{Mode, Op};

    fn synthetic(ns: &[usize], f: impl Fn(f64) -> f64) -> Vec<BenchRecord> {
        ns.iter()
            .map(|&n| BenchRecord {
                op: Op::Matmul,
                mode: Mode::Symbolic,
                n,
                tape_entries: 0,
                tape_edges: 0,
                tape_payload_scalars: 0,
                tape_bytes: 0,
                t_primal_s: 0.0,
                t_adjoint_s: 0.0,
                t_total_s: f(n as f64),
            })
            .collect()
    }

    #[test]
    fn cubic_and_quadratic() {
        let ns = [32, 64, 128, 256];
        let s3 = fit_slope(&synthetic(&ns, |n| n * n * n), Field::TTotal).unwrap();
        assert!((s3 - 3.0).abs() < 1e-12);
        let s2 = fit_slope(&synthetic(&ns, |n| 5.0 * n * n), Field::TTotal).unwrap();
        assert!((s2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn uses_upper_half() {
        // small sizes follow a different law and must not matter
        let ns = [2, 4, 8, 16, 32, 64, 128, 256];
        let recs = synthetic(&ns, |n| if n < 32.0 { 1.0 } else { n * n });
        assert!((fit_slope(&recs, Field::TTotal).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn drops_nonpositive_values() {
        let recs = synthetic(&[8, 16, 32, 64], |n| if n == 8.0 { 0.0 } else { n });
        assert!((fit_slope(&recs, Field::TTotal).unwrap() - 1.0).abs() < 1e-12);
        let recs = synthetic(&[8, 16, 32, 64], |n| if n < 32.0 { -1.0 } else { n });
        assert_eq!(fit_slope(&recs, Field::TTotal), Err(FitError { found: 2 }));
    }
}
