//! Vary the tunnel length on generated chains and watch the metrics follow.
//!
//! Implicit tunnels: UTURN at each LSR shrinks by two per position.
//! Opaque tunnels: the quoted LSE-TTL at the egress is 255 minus the length.

use tnt::classifier::HopMetrics;
use tnt::sim::gen::ChainSpec;
use tnt::sim::{self, Os};

fn main() {
    println!("implicit, Cisco 12.4: UTURN per LSR");
    for ll in 1..=6 {
        let spec = ChainSpec::implicit(Os::CiscoIos124, ll);
        let trace = sim::run(&spec.build().unwrap());
        let row: Vec<String> = (1..=ll)
            .filter_map(|i| {
                let a = ChainSpec::lsr_address(i).parse().ok()?;
                let h = trace.hops.iter().find(|h| h.hop.address == Some(a))?;
                HopMetrics::of(&h.hop).uturn().map(|u| u.to_string())
            })
            .collect();
        println!("  LL {ll}: {}", row.join(" "));
    }

    println!("opaque, Cisco 15.2: LSE-TTL at the egress");
    for ll in [2, 4, 8, 12, 18] {
        let spec = ChainSpec::opaque(Os::CiscoIos152, ll);
        let trace = sim::run(&spec.build().unwrap());
        let egress = spec.egress_address().parse().ok();
        let h = trace.hops.iter().find(|h| h.hop.address == egress).unwrap();
        let q = h.hop.top_lse().map(|e| e.lse_ttl);
        println!(
            "  LL {ll:2}: lse-ttl {q:?}, code {}, estimate {:?}",
            h.annotation.code, h.annotation.length_estimate
        );
    }
}
