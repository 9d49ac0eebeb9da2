//! Trace a built-in scenario and print the transcript.
//!
//! cargo run --example simulate_scenario -- junos-vmx-invisible-php

use tnt::report::dump_text;
use tnt::sim;

fn main() {
    let name = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "cisco-15.2-invisible-php".into());
    let topo = match sim::load(&name) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{name}: {e}");
            eprintln!("built-in scenarios:");
            for n in sim::catalog::names() {
                eprintln!("  {n}");
            }
            std::process::exit(2);
        }
    };
    println!("# {}: {}", topo.name, topo.description);
    print!("{}", dump_text(&sim::run(&topo)));
}
