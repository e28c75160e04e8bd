//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//! Positional arguments select criteria by number; other arguments are
//! ignored so that `cargo test` flags pass through harmlessly.

use std::process::ExitCode;
use std::time::Instant;

use dqa_validation::criteria;

fn main() -> ExitCode {
    let selected: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| a.chars().all(|c| c.is_ascii_digit()))
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for c in criteria() {
        if !selected.is_empty() && !selected.iter().any(|s| s == c.id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let (pass, detail) = match (c.run)() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let status = if pass { "PASS" } else { "FAIL" };
        if !pass {
            failed += 1;
        }
        println!(
            "{status} [{:>2}] {}: {detail} ({:.1} s)",
            c.id,
            c.name,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
