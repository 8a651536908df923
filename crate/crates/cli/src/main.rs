use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hyad_cli::bench::{nonincreasing, DEFAULT_REPEATS, DEFAULT_SEED};
use hyad_cli::records::write_csv;
use hyad_cli::suite::{self, CHECKS};
use hyad_cli::{factor_report, fit_slope, run_bench, BenchConfig, BenchError, Field, Mode, Op};

/// Tape-size and run-time benchmarks for symbolic versus algorithmic adjoints.
#[derive(Parser)]
#[command(name = "hyad", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep one op in one mode over sizes and write CSV records.
    Bench {
        #[command(flatten)]
        sweep: Sweep,
        #[arg(long, value_enum)]
        mode: Mode,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print fitted log-log slopes to stderr.
        #[arg(long)]
        slopes: bool,
    },
    /// Ratio of symbolic to primal total time per size.
    Factors {
        #[command(flatten)]
        sweep: Sweep,
    },
    /// Run the verification checks; exits with 1 if any fails.
    Check {
        /// Comma-separated check ids (1-8); all when omitted.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Args)]
struct Sweep {
    #[arg(long, value_enum)]
    op: Op,
    /// Ascending matrix sizes.
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    repeats: usize,
}

impl Sweep {
    fn config(&self, mode: Mode, out: Option<PathBuf>) -> BenchConfig {
        BenchConfig {
            op: self.op,
            mode,
            sizes: self.sizes.clone(),
            seed: self.seed,
            repeats: self.repeats,
            out,
        }
    }
}

const USAGE: u8 = 2;
const FAILURE: u8 = 1;

fn fail(e: &dyn std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(FAILURE)
}

fn bench_error(e: BenchError) -> ExitCode {
    match e {
        BenchError::Run { .. } => fail(&e),
        _ => {
            eprintln!("error: {e}");
            ExitCode::from(USAGE)
        }
    }
}

fn bench(cfg: BenchConfig, slopes: bool) -> ExitCode {
    let records = match run_bench(&cfg) {
        Ok(r) => r,
        Err(e) => return bench_error(e),
    };
    let written = match &cfg.out {
        Some(path) => File::create(path)
            .map_err(csv::Error::from)
            .and_then(|f| write_csv(BufWriter::new(f), &records)),
        None => write_csv(io::stdout().lock(), &records),
    };
    if let Err(e) = written {
        return fail(&e);
    }
    if slopes {
        for (name, field) in [
            ("tape_bytes", Field::TapeBytes),
            ("t_primal_s", Field::TPrimal),
            ("t_adjoint_s", Field::TAdjoint),
            ("t_total_s", Field::TTotal),
        ] {
            match fit_slope(&records, field) {
                Ok(s) => eprintln!("slope {name}: {s:.3}"),
                Err(e) => eprintln!("slope {name}: {e}"),
            }
        }
    }
    ExitCode::SUCCESS
}

fn factors(cfg: BenchConfig) -> ExitCode {
    let points = match factor_report(&cfg) {
        Ok(p) => p,
        Err(e) => return bench_error(e),
    };
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "n,factor");
    for p in &points {
        let _ = match p.factor {
            Some(f) => writeln!(out, "{},{f}", p.n),
            None => writeln!(out, "{},", p.n),
        };
    }
    let trend = if nonincreasing(&points) { "nonincreasing" } else { "not monotone" };
    eprintln!("trend: {trend}");
    ExitCode::SUCCESS
}

fn check(only: &[u8]) -> ExitCode {
    if let Some(bad) = only.iter().find(|id| !CHECKS.iter().any(|c| c.id == **id)) {
        eprintln!("error: no check with id {bad}");
        return ExitCode::from(USAGE);
    }
    let mut all_passed = true;
    for c in CHECKS.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let outcome = suite::run(c);
        println!("{outcome}");
        all_passed &= outcome.passed;
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(FAILURE)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Bench {
            sweep,
            mode,
            out,
            slopes,
        } => bench(sweep.config(mode, out), slopes),
        Command::Factors { sweep } => factors(sweep.config(Mode::Symbolic, None)),
        Command::Check { only } => check(&only),
    }
}
