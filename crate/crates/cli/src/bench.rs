//! Size sweeps: one [`BenchRecord`] per size, medians over repeats.

use std::path::PathBuf;

use hyad_core::Tape;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ops::{execute, Mode, Op, RunError, Sample, Seeds, Workload};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_REPEATS: usize = 5;
pub const DEFAULT_SIZES: [usize; 5] = [16, 32, 64, 128, 256];

/// Estimated-byte cap for one recording; algorithmic runs past it fail
/// cleanly instead of exhausting memory.
pub const TAPE_BYTE_LIMIT: u64 = 4 << 30;

/// Primal times below this are treated as timer noise by [`factor_report`].
pub const TIMER_FLOOR_S: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub op: Op,
    pub mode: Mode,
    pub sizes: Vec<usize>,
    pub seed: u64,
    pub repeats: usize,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("sizes must be nonempty")]
    NoSizes,
    #[error("sizes must be strictly ascending and positive")]
    SizesOrder,
    #[error("repeats must be at least 1")]
    NoRepeats,
    #[error("{op} {mode} at n={n}: {source}")]
    Run {
        op: Op,
        mode: Mode,
        n: usize,
        #[source]
        source: RunError,
    },
}

impl BenchConfig {
    pub fn new(op: Op, mode: Mode, sizes: Vec<usize>) -> Self {
        BenchConfig {
            op,
            mode,
            sizes,
            seed: DEFAULT_SEED,
            repeats: DEFAULT_REPEATS,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.sizes.is_empty() {
            return Err(BenchError::NoSizes);
        }
        if self.sizes[0] == 0 || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BenchError::SizesOrder);
        }
        if self.repeats == 0 {
            return Err(BenchError::NoRepeats);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub op: Op,
    pub mode: Mode,
    pub n: usize,
    pub tape_entries: u64,
    pub tape_edges: u64,
    pub tape_payload_scalars: u64,
    pub tape_bytes: u64,
    pub t_primal_s: f64,
    pub t_adjoint_s: f64,
    pub t_total_s: f64,
}

pub fn median(xs: &mut [f64]) -> f64 {
    assert!(!xs.is_empty());
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

fn record(op: Op, mode: Mode, n: usize, samples: &[Sample]) -> BenchRecord {
    let stats = samples[0].stats;
    let col = |f: fn(&Sample) -> f64| median(&mut samples.iter().map(f).collect::<Vec<_>>());
    BenchRecord {
        op,
        mode,
        n,
        tape_entries: stats.num_entries,
        tape_edges: stats.num_edges,
        tape_payload_scalars: stats.num_callback_payload_scalars,
        tape_bytes: stats.estimated_bytes,
        t_primal_s: col(|s| s.t_primal),
        t_adjoint_s: col(|s| s.t_adjoint),
        t_total_s: col(Sample::t_total),
    }
}

fn sample(tape: &Tape, op: Op, mode: Mode, w: &Workload) -> Result<Sample, RunError> {
    tape.reset();
    let (s, _) = execute(op, mode, w, tape, Seeds::Ones)?;
    tape.reset();
    Ok(s)
}

pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    cfg.validate()?;
    let tape = Tape::with_byte_limit(TAPE_BYTE_LIMIT);
    cfg.sizes
        .iter()
        .map(|&n| {
            let wrap = |source| BenchError::Run {
                op: cfg.op,
                mode: cfg.mode,
                n,
                source,
            };
            let w = Workload::generate(cfg.op, n, cfg.seed).map_err(wrap)?;
            let samples = (0..cfg.repeats)
                .map(|_| sample(&tape, cfg.op, cfg.mode, &w))
                .collect::<Result<Vec<_>, _>>()
                .map_err(wrap)?;
            Ok(record(cfg.op, cfg.mode, n, &samples))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FactorPoint {
    pub n: usize,
    /// `None` when the primal time is below [`TIMER_FLOOR_S`].
    pub factor: Option<f64>,
}

/// `t_total(cfg.mode) / t_total(primal)` per size.
///
/// The two modes are measured alternately within each repeat so slow drift
/// in machine speed affects numerator and denominator alike.
pub fn factor_report(cfg: &BenchConfig) -> Result<Vec<FactorPoint>, BenchError> {
    cfg.validate()?;
    let tape = Tape::with_byte_limit(TAPE_BYTE_LIMIT);
    cfg.sizes
        .iter()
        .map(|&n| {
            let wrap = |mode| {
                move |source| BenchError::Run {
                    op: cfg.op,
                    mode,
                    n,
                    source,
                }
            };
            let w = Workload::generate(cfg.op, n, cfg.seed).map_err(wrap(cfg.mode))?;
            let mut num = Vec::with_capacity(cfg.repeats);
            let mut den = Vec::with_capacity(cfg.repeats);
            for _ in 0..cfg.repeats {
                num.push(sample(&tape, cfg.op, cfg.mode, &w).map_err(wrap(cfg.mode))?.t_total());
                den.push(sample(&tape, cfg.op, Mode::Primal, &w).map_err(wrap(Mode::Primal))?.t_total());
            }
            let (num, den) = (median(&mut num), median(&mut den));
            Ok(FactorPoint {
                n,
                factor: (den >= TIMER_FLOOR_S).then(|| num / den),
            })
        })
        .collect()
}

/// True when the reliable factors never increase with `n`.
pub fn nonincreasing(points: &[FactorPoint]) -> bool {
    let f: Vec<f64> = points.iter().filter_map(|p| p.factor).collect();
    f.windows(2).all(|w| w[1] <= w[0])
}
