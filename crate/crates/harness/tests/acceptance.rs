//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//! Uses a plain `main` so the lines are shown without `--nocapture`.

use std::process::ExitCode;

use protoselect_harness::validation::run_all;

fn main() -> ExitCode {
    let outcomes = run_all(|_| {});
    println!("acceptance criteria:");
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<u8> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.id)
        .collect();
    if failed.is_empty() {
        println!("all {} criteria passed", outcomes.len());
        ExitCode::SUCCESS
    } else {
        println!("criteria failed: {failed:?}");
        ExitCode::FAILURE
    }
}
