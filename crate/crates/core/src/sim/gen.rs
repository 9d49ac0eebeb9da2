//! Generated chain topologies: VP, CE1, PE1, `lsrs` core routers, PE2, CE2, CE3.
//!
//! Used for parameter sweeps (tunnel length, OS, popping mode) where writing
//! one scenario file per point would be silly.

use std::fmt::Write;

use super::topology::{Os, ScenarioError, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainSpec {
    pub os: Os,
    pub lsrs: usize,
    pub mpls: bool,
    pub propagate: bool,
    pub explicit_null: bool,
    pub opaque: bool,
    pub rfc4950: bool,
    pub icmp_tunneling: bool,
}

impl ChainSpec {
    pub fn plain(os: Os, routers: usize) -> Self {
        Self {
            os,
            lsrs: routers,
            mpls: false,
            propagate: true,
            explicit_null: false,
            opaque: false,
            rfc4950: true,
            icmp_tunneling: false,
        }
    }

    pub fn invisible(os: Os, lsrs: usize) -> Self {
        Self {
            mpls: true,
            propagate: false,
            ..Self::plain(os, lsrs)
        }
    }

    pub fn explicit(os: Os, lsrs: usize) -> Self {
        Self {
            mpls: true,
            ..Self::plain(os, lsrs)
        }
    }

    /// Propagating, UHP, no RFC 4950: only TTL arithmetic gives it away.
    pub fn implicit(os: Os, lsrs: usize) -> Self {
        Self {
            explicit_null: true,
            rfc4950: false,
            ..Self::explicit(os, lsrs)
        }
    }

    pub fn opaque(os: Os, lsrs: usize) -> Self {
        Self {
            opaque: true,
            ..Self::invisible(os, lsrs)
        }
    }

    pub fn uhp(mut self) -> Self {
        self.explicit_null = true;
        self
    }

    pub fn name(&self) -> String {
        let os = match self.os {
            Os::CiscoIos124 => "cisco-12.4",
            Os::CiscoIos152 => "cisco-15.2",
            Os::JunosOlive => "junos-olive",
            Os::JunosVmx => "junos-vmx",
            Os::PlainIp => "linux",
            Os::Host => "host",
        };
        let kind = match (self.mpls, self.opaque, self.propagate, self.rfc4950) {
            (false, ..) => "plain",
            (true, true, ..) => "opaque",
            (true, false, false, _) => "invisible",
            (true, false, true, true) => "explicit",
            (true, false, true, false) => "implicit",
        };
        let pop = if self.explicit_null { "uhp" } else { "php" };
        let tun = if self.icmp_tunneling {
            "-tunneling"
        } else {
            ""
        };
        format!("gen-{os}-{kind}-{pop}{tun}-{}", self.lsrs)
    }

    /// Address of core router `k` (1-based) on its ingress-side link.
    pub fn lsr_address(k: usize) -> String {
        format!("10.{k}.0.2")
    }

    pub fn egress_address(&self) -> String {
        Self::lsr_address(self.lsrs + 1)
    }

    pub fn target(&self) -> &'static str {
        "192.168.22.1"
    }

    pub fn to_toml(&self) -> String {
        let os = match self.os {
            Os::CiscoIos124 => "cisco-12.4",
            Os::CiscoIos152 => "cisco-15.2",
            Os::JunosOlive => "junos-olive",
            Os::JunosVmx => "junos-vmx",
            Os::PlainIp | Os::Host => "linux",
        };
        let mut s = String::new();
        let _ = writeln!(s, "format = 1\nname = \"{}\"", self.name());
        let _ = writeln!(s, "vantage = \"VP\"\ntarget = \"{}\"", self.target());
        let _ = writeln!(s, "\n[engine]\nstarting_ttl = 1");
        let _ = writeln!(s, "\n[routers.VP]\nos = \"host\"");
        for ce in ["CE1", "CE2"] {
            let _ = writeln!(s, "\n[routers.{ce}]\nos = \"{os}\"");
        }
        let _ = writeln!(
            s,
            "\n[routers.CE3]\nos = \"{os}\"\naddresses = [\"{}\"]",
            self.target()
        );
        let core: Vec<String> = std::iter::once("PE1".to_string())
            .chain((1..=self.lsrs).map(|k| format!("P{k}")))
            .chain(std::iter::once("PE2".to_string()))
            .collect();
        for (i, r) in core.iter().enumerate() {
            let _ = writeln!(s, "\n[routers.{r}]\nos = \"{os}\"");
            if !self.mpls {
                continue;
            }
            let _ = writeln!(
                s,
                "mpls = true\nloopback = \"10.255.0.{}\"\npropagate = {}\nexplicit_null = {}\n\
                 rfc4950 = {}\nicmp_tunneling = {}\nlabel = {}",
                i + 1,
                self.propagate,
                self.explicit_null,
                self.rfc4950,
                self.icmp_tunneling,
                100 + i
            );
            if self.opaque && r == "PE2" {
                let _ = writeln!(s, "opaque = true");
            }
        }
        let link = |s: &mut String, a: &str, aa: String, b: &str, ba: String| {
            let _ = writeln!(
                s,
                "\n[[links]]\na = \"{a}\"\na_addr = \"{aa}\"\nb = \"{b}\"\nb_addr = \"{ba}\""
            );
        };
        link(
            &mut s,
            "VP",
            "172.16.9.1".into(),
            "CE1",
            "172.16.9.2".into(),
        );
        link(
            &mut s,
            "CE1",
            "172.16.10.1".into(),
            "PE1",
            "172.16.10.2".into(),
        );
        for (k, w) in core.windows(2).enumerate() {
            let k = k + 1;
            link(
                &mut s,
                &w[0],
                format!("10.{k}.0.1"),
                &w[1],
                format!("10.{k}.0.2"),
            );
        }
        link(
            &mut s,
            "PE2",
            "192.168.20.1".into(),
            "CE2",
            "192.168.20.2".into(),
        );
        link(
            &mut s,
            "CE2",
            "192.168.21.1".into(),
            "CE3",
            "192.168.21.2".into(),
        );
        s
    }

    pub fn build(&self) -> Result<Topology, ScenarioError> {
        super::load_str(&self.to_toml())
    }
}

/// Noise-free suite where every tunnel is meant to be caught by a trigger at
/// the default thresholds, plus tunnel-free and visible-tunnel controls.
pub fn clean_suite() -> Vec<Topology> {
    let mut specs = Vec::new();
    specs.extend((3..=6).map(|n| ChainSpec::invisible(Os::CiscoIos152, n)));
    specs.extend((1..=4).map(|n| ChainSpec::invisible(Os::JunosVmx, n)));
    specs.extend((2..=4).map(|n| ChainSpec::invisible(Os::CiscoIos152, n).uhp()));
    specs.push(ChainSpec::explicit(Os::CiscoIos152, 3));
    specs.push(ChainSpec::explicit(Os::JunosVmx, 3));
    specs.push(ChainSpec::plain(Os::CiscoIos152, 4));
    specs.push(ChainSpec::plain(Os::JunosVmx, 4));
    specs
        .iter()
        .map(|s| s.build().expect("generated chains are valid"))
        .collect()
}
