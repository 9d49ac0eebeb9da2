//! An RSVP-TE tunnel and the same network running LDP look identical to
//! the prober.

use tnt::report::dump_text;
use tnt::sim::{self, catalog, ldp_twin};

fn main() {
    for name in catalog::names().filter(|n| n.contains("rsvp")) {
        let topo = sim::builtin(name).unwrap();
        let twin = ldp_twin(&topo);
        let (a, b) = (dump_text(&sim::run(&topo)), dump_text(&sim::run(&twin)));
        println!(
            "{name}: {} tunnel(s) vs none, transcripts {}",
            topo.tunnels.len(),
            if a == b { "identical" } else { "differ" }
        );
    }
}
