//! Runs every verification check once, in order, on a quiet process and
//! prints one PASS/FAIL line per check. Runs without the libtest harness so
//! the timing checks never share the CPU with other tests.

use std::process::ExitCode;

use hyad_cli::suite::{run, CHECKS};

fn main() -> ExitCode {
    println!("acceptance: {} checks", CHECKS.len());
    let mut failed = 0;
    for check in &CHECKS {
        let outcome = run(check);
        println!("{outcome}");
        if !outcome.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", CHECKS.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
