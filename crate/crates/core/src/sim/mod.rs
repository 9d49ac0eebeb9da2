//! Deterministic MPLS data-plane simulator.
//!
//! A scenario file describes routers, links and per-router MPLS behaviour;
//! [`SimProber`] answers probes by walking packets hop by hop through it.

pub mod catalog;
pub mod forward;
pub mod gen;
pub mod golden;
pub mod topology;

use std::net::Ipv4Addr;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use forward::{Observation, ProbeKind};
pub use topology::{LdpMode, Os, ScenarioDoc, ScenarioError, Topology};

use crate::engine::trace_naughty_tunnel;
use crate::engine::{EngineConfig, ProbeError, ProbeReply, Prober};
use crate::model::{AnnotatedTrace, ReplyKind};

fn parse_resolved(
    text: &str,
    lookup: &dyn Fn(&str) -> Option<String>,
) -> Result<Topology, ScenarioError> {
    let table = topology::resolve_document(text, lookup)?;
    let doc: ScenarioDoc = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ScenarioError::Schema(e.message().to_string()))?;
    Topology::from_doc(doc)
}

/// Parse scenario text. Bases named by `extends` come from the catalog.
pub fn load_str(text: &str) -> Result<Topology, ScenarioError> {
    parse_resolved(text, &|name| catalog::get(name).map(str::to_string))
}

/// Parse a scenario file. Bases are looked up next to it first, then in the catalog.
pub fn load_file(path: &Path) -> Result<Topology, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_resolved(&text, &|name| {
        std::fs::read_to_string(dir.join(format!("{name}.toml")))
            .ok()
            .or_else(|| catalog::get(name).map(str::to_string))
    })
}

pub fn builtin(name: &str) -> Result<Topology, ScenarioError> {
    let text = catalog::get(name).ok_or_else(|| ScenarioError::UnknownBase(name.to_string()))?;
    load_str(text)
}

/// A built-in name, or a path to a scenario file.
pub fn load(name_or_path: &str) -> Result<Topology, ScenarioError> {
    if catalog::get(name_or_path).is_some() {
        builtin(name_or_path)
    } else {
        load_file(Path::new(name_or_path))
    }
}

impl Topology {
    /// Engine settings with the scenario's `[engine]` overrides applied.
    pub fn engine_config(&self, mut base: EngineConfig) -> EngineConfig {
        if let Some(s) = self.engine.starting_ttl {
            base.starting_ttl = s;
        }
        self.engine.apply(&mut base.thresholds);
        base
    }
}

/// Trace the scenario's own target with its engine overrides over `base`,
/// naming each hop after the router that owns its address.
pub fn run_with(topo: &Topology, base: EngineConfig) -> AnnotatedTrace {
    let mut p = SimProber::new(topo);
    let mut t = trace_naughty_tunnel(topo.target, topo.engine_config(base), &mut p);
    name_hops(&mut t, topo);
    t
}

pub fn run(topo: &Topology) -> AnnotatedTrace {
    run_with(topo, EngineConfig::default())
}

pub fn name_hops(trace: &mut AnnotatedTrace, topo: &Topology) {
    for h in &mut trace.hops {
        h.name = h
            .hop
            .address
            .and_then(|a| topo.name_of(a))
            .map(str::to_string);
    }
}

/// Same routers and links, RSVP-TE tunnels replaced by LDP everywhere.
pub fn ldp_twin(topo: &Topology) -> Topology {
    let mut twin = topo.clone();
    twin.tunnels.clear();
    for r in twin.routers.iter_mut().filter(|r| r.spec.mpls) {
        r.ldp = if r.os().is_junos() {
            LdpMode::LoopbackOnly
        } else {
            LdpMode::AllPrefixes
        };
    }
    twin
}

/// Perturb return TTLs on a `fraction` of routers by 1 to `max` hops,
/// either direction. Seeded, so the same seed gives the same topology.
pub fn with_return_noise(topo: &Topology, seed: u64, fraction: f64, max: i8) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = topo.clone();
    let vp = out.vantage;
    for (i, r) in out.routers.iter_mut().enumerate() {
        if i == vp || !rng.gen_bool(fraction) {
            continue;
        }
        let mag = rng.gen_range(1..=max.max(1));
        r.spec.return_noise = if rng.gen_bool(0.5) { mag } else { -mag };
    }
    out
}

/// Prober backed by a topology. Every probe is a fresh packet walk.
pub struct SimProber<'t> {
    topo: &'t Topology,
    pub sent: u64,
}

impl<'t> SimProber<'t> {
    pub fn new(topo: &'t Topology) -> Self {
        Self { topo, sent: 0 }
    }

    fn send(
        &mut self,
        target: Ipv4Addr,
        ttl: u8,
        kind: ProbeKind,
    ) -> Result<Option<Observation>, ProbeError> {
        self.sent += 1;
        self.topo.send(target, ttl, kind).map_err(ProbeError::Sim)
    }
}

fn reply(o: Observation) -> ProbeReply {
    ProbeReply {
        address: o.source,
        kind: o.kind,
        reply_ttl: o.ttl,
        qttl: o.qttl,
        lse_stack: o.lse_stack,
        // Half a millisecond per router crossed, both ways.
        rtt: Some(f64::from(o.steps) * 0.5),
    }
}

impl Prober for SimProber<'_> {
    fn trace_hop(
        &mut self,
        target: Ipv4Addr,
        ttl: u8,
        _flow_id: u16,
    ) -> Result<Option<ProbeReply>, ProbeError> {
        Ok(self.send(target, ttl, ProbeKind::Udp)?.map(reply))
    }

    fn echo(&mut self, target: Ipv4Addr) -> Result<Option<u8>, ProbeError> {
        Ok(self
            .send(target, 64, ProbeKind::Echo)?
            .filter(|o| o.kind == ReplyKind::EchoReply)
            .map(|o| o.ttl))
    }

    fn udp(&mut self, target: Ipv4Addr, ttl: u8) -> Result<Option<ProbeReply>, ProbeError> {
        Ok(self.send(target, ttl, ProbeKind::Udp)?.map(reply))
    }
}
