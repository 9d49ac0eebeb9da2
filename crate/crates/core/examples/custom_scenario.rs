//! Write a scenario inline, extending a built-in base, and trace it.

use tnt::report::dump_text;
use tnt::sim;

const SCENARIO: &str = r#"
extends = "cisco-base"
name = "short-uhp"
description = "no propagation, explicit-null: the egress shows up twice"

[core]
propagate = false
explicit_null = true

[engine]
t_frpla = 2
"#;

fn main() {
    let topo = sim::load_str(SCENARIO).expect("scenario parses");
    let trace = sim::run(&topo);
    print!("{}", dump_text(&trace));
    let revealed: usize = trace.hops.iter().map(|h| h.annotation.revealed.len()).sum();
    println!(
        "revealed {revealed} hidden hop(s) with {} probes",
        trace.probe_counts.total()
    );
}
