//! Runs the quick invariant suite and prints its table.

use softdock::verify::{run_checks, standard_checks, Level};

fn main() {
    let report = run_checks(&standard_checks(), Level::Quick, 0);
    print!("{}", report.table());
    std::process::exit(if report.all_passed() { 0 } else { 1 });
}
