//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use bipartite_holonomy::acceptance::{self, CriterionResult};
use std::process::{Command, ExitCode};

const SEED: u64 = 2024;

fn selftest_bytes(seed: u64) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_holonomy"))
        .args(["selftest", "--seed", &seed.to_string()])
        .output()
        .expect("holonomy binary runs");
    out.stdout
}

fn determinism() -> CriterionResult {
    let first = selftest_bytes(SEED);
    let second = selftest_bytes(SEED);
    let identical = !first.is_empty() && first == second;
    CriterionResult {
        id: 12,
        name: "selftest run twice gives byte-identical reports".into(),
        passed: identical,
        measured: if identical { 0.0 } else { 1.0 },
        requirement: "identical stdout".into(),
        detail: format!("{} and {} bytes", first.len(), second.len()),
    }
}

fn main() -> ExitCode {
    let mut results = acceptance::run_numerical(SEED);
    results.push(determinism());
    let mut failed = 0;
    for r in &results {
        if !r.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2}: {}  {}  (measured {:.3e}; required {}; {})",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.measured,
            r.requirement,
            r.detail
        );
    }
    println!(
        "acceptance: {} passed, {} failed",
        results.len() - failed,
        failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
