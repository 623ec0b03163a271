//! Runs every acceptance criterion once and prints one verdict line per criterion.
//!
//! `SUBMAX_ACCEPTANCE_SEED` overrides the seed and `SUBMAX_ACCEPTANCE_ONLY` takes a
//! comma-separated list of criterion names or ids to run a subset.

use std::process::ExitCode;

use submax::acceptance::Criterion;

const DEFAULT_SEED: u64 = 2024;

fn selected(filter: Option<&str>, c: Criterion) -> bool {
    match filter {
        None => true,
        Some(list) => list
            .split(',')
            .map(str::trim)
            .any(|item| item == c.name() || item.parse::<u8>().ok() == Some(c.id())),
    }
}

fn main() -> ExitCode {
    // `cargo test -- --list` and similar harness flags: nothing to enumerate here.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let seed = std::env::var("SUBMAX_ACCEPTANCE_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED);
    let filter = std::env::var("SUBMAX_ACCEPTANCE_ONLY").ok();

    println!("acceptance criteria, seed {seed}");
    let mut failed = 0;
    let mut ran = 0;
    for c in Criterion::ALL.into_iter().filter(|&c| selected(filter.as_deref(), c)) {
        ran += 1;
        match c.run(seed) {
            Ok(report) => {
                println!("{report}");
                failed += usize::from(!report.passed);
            }
            Err(e) => {
                println!("[FAIL] {:>2} {:<22} error: {e}", c.id(), c.name());
                failed += 1;
            }
        }
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
