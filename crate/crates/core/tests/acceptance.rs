//! Acceptance battery: one pass/fail line per criterion.

use std::process::ExitCode;

use pme_lab::battery::{battery, BatteryOptions, CRITERIA};

fn main() -> ExitCode {
    let out = tempfile::tempdir().expect("temporary directory");
    let opts = BatteryOptions { seed: 1, out: Some(out.path().to_path_buf()), ..Default::default() };
    let report = match battery(&opts) {
        Ok(r) => r,
        Err(e) => {
            println!("battery aborted: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!();
    for c in &report.criteria {
        println!("{}", c.line());
    }
    let passed = report.criteria.iter().filter(|c| c.passed()).count();
    println!("\n{passed}/{} criteria passed", CRITERIA.len());
    for check in report.checks().iter().filter(|c| !c.pass) {
        println!("  failing check {}: measured {:.6e}, target {}", check.criterion, check.measured, check.target);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
