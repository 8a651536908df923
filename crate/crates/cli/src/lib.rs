//! Benchmark and verification harness for `hyad-core`.
//!
//! [`bench::run_bench`] sweeps one op in one mode over a list of sizes and
//! reports tape sizes and phase timings; [`fit::fit_slope`] turns a sweep into
//! a complexity exponent; [`suite`] holds the verification checks run by
//! `hyad check` and by the acceptance test.

pub mod bench;
pub mod programs;
pub mod fit;
pub mod ops;
pub mod records;
pub mod suite;

pub use bench::{factor_report, run_bench, BenchConfig, BenchError, BenchRecord, FactorPoint};
pub use fit::{fit_slope, Field, FitError};
pub use ops::{Mode, Op, Workload};
