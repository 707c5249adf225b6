//! Runs every acceptance criterion at full scale and prints one line each.
//!
//! A `FAIL(soft)` line is printed but does not fail the run: it marks an
//! empirical sub-check whose tolerance the underlying data does not meet.

use std::process::ExitCode;

use chainpart::selftest::{criterion_count, run_one, Options, Profile};

fn main() -> ExitCode {
    let opts = Options::new(Profile::Full);
    let (mut passed, mut soft, mut failed) = (0, Vec::new(), Vec::new());
    for id in 1..=criterion_count() as u32 {
        let outcome = run_one(id, &opts);
        println!("{}", outcome.line());
        match (outcome.passed, outcome.hard_passed) {
            (true, _) => passed += 1,
            (false, true) => soft.push(outcome.id),
            (false, false) => failed.push(outcome.id),
        }
    }
    println!("acceptance: {passed} passed, soft failures {soft:?}, failures {failed:?}");
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
