//! Run every built-in scenario as one campaign and print the class by
//! technique matrix and the probe budget.

use tnt::report::classify_stats;
use tnt::sim::{self, catalog};

fn main() {
    let traces: Vec<_> = catalog::names()
        .map(|n| sim::run(&sim::builtin(n).expect("built-in scenarios load")))
        .collect();
    println!("{}", classify_stats(&traces));
}
