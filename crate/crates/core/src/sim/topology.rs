//! Scenario documents and the validated topology built from them.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::model::Thresholds;

pub const SCENARIO_FORMAT: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario syntax: {0}")]
    Syntax(String),
    #[error("scenario schema: {0}")]
    Schema(String),
    #[error("unsupported scenario format {0} (expected {SCENARIO_FORMAT})")]
    Format(u32),
    #[error("unknown base scenario `{0}`")]
    UnknownBase(String),
    #[error("address {addr} inconsistent with {prefix}")]
    Address { addr: Ipv4Addr, prefix: Prefix },
    #[error("link references unknown router `{0}`")]
    DanglingLink(String),
    #[error("address {0} assigned twice")]
    DuplicateAddress(Ipv4Addr),
    #[error("empty scenario")]
    Empty,
    #[error("cannot read scenario: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Prefix {
    pub network: Ipv4Addr,
    pub len: u8,
}

impl Prefix {
    pub fn new(addr: Ipv4Addr, len: u8) -> Self {
        let mask = Self::mask(len);
        Self {
            network: Ipv4Addr::from(u32::from(addr) & mask),
            len,
        }
    }

    fn mask(len: u8) -> u32 {
        if len == 0 {
            0
        } else {
            u32::MAX << (32 - u32::from(len))
        }
    }

    pub fn contains(&self, addr: Ipv4Addr) -> bool {
        u32::from(addr) & Self::mask(self.len) == u32::from(self.network)
    }

    pub fn host(addr: Ipv4Addr) -> Self {
        Self::new(addr, 32)
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.network, self.len)
    }
}

impl FromStr for Prefix {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, l) = s.split_once('/').unwrap_or((s, "32"));
        let addr: Ipv4Addr = a.parse().map_err(|e| format!("{s}: {e}"))?;
        let len: u8 = l.parse().map_err(|e| format!("{s}: {e}"))?;
        if len > 32 {
            return Err(format!("{s}: prefix length > 32"));
        }
        Ok(Prefix::new(addr, len))
    }
}

impl<'de> Deserialize<'de> for Prefix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Os {
    #[serde(rename = "cisco-12.4")]
    CiscoIos124,
    #[serde(rename = "cisco-15.2")]
    CiscoIos152,
    #[serde(rename = "junos-olive")]
    JunosOlive,
    #[serde(rename = "junos-vmx")]
    JunosVmx,
    #[default]
    #[serde(rename = "linux")]
    PlainIp,
    #[serde(rename = "host")]
    Host,
}

impl Os {
    pub fn is_cisco(self) -> bool {
        matches!(self, Os::CiscoIos124 | Os::CiscoIos152)
    }

    pub fn is_junos(self) -> bool {
        matches!(self, Os::JunosOlive | Os::JunosVmx)
    }

    pub fn initial_ttls(self) -> (u8, u8) {
        match self {
            Os::CiscoIos124 | Os::CiscoIos152 => (255, 255),
            Os::JunosOlive | Os::JunosVmx => (255, 64),
            Os::PlainIp | Os::Host => (64, 64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LdpMode {
    None,
    AllPrefixes,
    LoopbackOnly,
    HostRoutes,
    Acl,
}

impl LdpMode {
    pub fn binds(self, p: &Prefix) -> bool {
        match self {
            LdpMode::None => false,
            LdpMode::AllPrefixes | LdpMode::Acl => true,
            LdpMode::LoopbackOnly | LdpMode::HostRoutes => p.len == 32,
        }
    }
}

fn yes() -> bool {
    true
}

fn default_label() -> u32 {
    16
}

/// One router as written in a scenario file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouterSpec {
    #[serde(default)]
    pub os: Os,
    #[serde(default)]
    pub mpls: bool,
    pub ldp: Option<LdpMode>,
    #[serde(default = "yes")]
    pub propagate: bool,
    #[serde(default)]
    pub explicit_null: bool,
    /// With `ldp = "acl"`: prefixes advertised with explicit-null, implicit-null otherwise.
    #[serde(default)]
    pub explicit_null_for: Vec<Prefix>,
    #[serde(default = "yes")]
    pub rfc4950: bool,
    #[serde(default)]
    pub icmp_tunneling: bool,
    #[serde(default = "default_label")]
    pub label: u32,
    pub vpn_label: Option<u32>,
    /// Terminates LSPs with a real label and pops untagged.
    #[serde(default)]
    pub opaque: bool,
    pub loopback: Option<Ipv4Addr>,
    #[serde(default)]
    pub addresses: Vec<Ipv4Addr>,
    #[serde(default)]
    pub vrf_interfaces: Vec<Ipv4Addr>,
    pub te_initial: Option<u8>,
    pub er_initial: Option<u8>,
    #[serde(default)]
    pub egress_extra_decrement: u8,
    #[serde(default)]
    pub silent: bool,
    #[serde(default)]
    pub no_echo: bool,
    /// Extra (positive) or fewer (negative) hops on this router's return path.
    #[serde(default)]
    pub return_noise: i8,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub a: String,
    pub a_addr: Ipv4Addr,
    pub b: String,
    pub b_addr: Ipv4Addr,
    #[serde(default = "default_link_len")]
    pub prefix_len: u8,
}

fn default_link_len() -> u8 {
    30
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunnelSpec {
    pub head: String,
    pub tail: String,
}

/// Engine settings a scenario may pin for its golden run.
#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct EngineOverrides {
    pub starting_ttl: Option<u8>,
    pub t_frpla: Option<u8>,
    pub t_rtla: Option<u8>,
    pub t_lse_ttl: Option<u8>,
    pub t_uturn: Option<u8>,
}

impl EngineOverrides {
    pub fn apply(&self, th: &mut Thresholds) {
        if let Some(v) = self.t_frpla {
            th.t_frpla = v;
        }
        if let Some(v) = self.t_rtla {
            th.t_rtla = v;
        }
        if let Some(v) = self.t_lse_ttl {
            th.t_lse_ttl = v;
        }
        if let Some(v) = self.t_uturn {
            th.t_uturn = v;
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub format: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub vantage: String,
    pub target: Ipv4Addr,
    #[serde(default)]
    pub engine: EngineOverrides,
    /// Prefixes of CE-facing links carried in the IGP (and so in LDP) rather than BGP.
    #[serde(default)]
    pub igp_external: Vec<Prefix>,
    pub routers: BTreeMap<String, RouterSpec>,
    pub links: Vec<LinkSpec>,
    #[serde(default)]
    pub tunnels: Vec<TunnelSpec>,
}

#[derive(Debug, Clone)]
pub struct Router {
    pub name: String,
    pub spec: RouterSpec,
    pub ldp: LdpMode,
    pub te_initial: u8,
    pub er_initial: u8,
}

impl Router {
    pub fn os(&self) -> Os {
        self.spec.os
    }
}

#[derive(Debug, Clone)]
pub struct Link {
    pub ends: [(usize, Ipv4Addr); 2],
    pub prefix: Prefix,
}

#[derive(Debug, Clone)]
pub struct Tunnel {
    pub head: usize,
    pub tail: usize,
}

/// Validated, immutable topology with precomputed shortest-path next hops.
#[derive(Debug, Clone)]
pub struct Topology {
    pub name: String,
    pub description: String,
    pub vantage: usize,
    pub target: Ipv4Addr,
    pub engine: EngineOverrides,
    pub routers: Vec<Router>,
    pub links: Vec<Link>,
    pub tunnels: Vec<Tunnel>,
    pub igp_external: Vec<Prefix>,
    owners: HashMap<Ipv4Addr, usize>,
    /// neighbors[r] = (neighbor, link index)
    neighbors: Vec<Vec<(usize, usize)>>,
    /// next_hop[from][to]
    next_hop: Vec<Vec<Option<usize>>>,
}

/// Resolve `extends` chains and the `[core]` defaults into one TOML table.
pub fn resolve_document(
    text: &str,
    base_lookup: &dyn Fn(&str) -> Option<String>,
) -> Result<toml::Table, ScenarioError> {
    resolve_depth(text, base_lookup, 0)
}

fn resolve_depth(
    text: &str,
    base_lookup: &dyn Fn(&str) -> Option<String>,
    depth: usize,
) -> Result<toml::Table, ScenarioError> {
    if depth > 8 {
        return Err(ScenarioError::Schema("extends chain too deep".into()));
    }
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ScenarioError::Syntax(e.to_string()))?;
    if doc.is_empty() {
        return Err(ScenarioError::Empty);
    }
    let mut out = match doc.remove("extends") {
        Some(toml::Value::String(base)) => {
            let base_text =
                base_lookup(&base).ok_or_else(|| ScenarioError::UnknownBase(base.clone()))?;
            resolve_depth(&base_text, base_lookup, depth + 1)?
        }
        Some(_) => return Err(ScenarioError::Schema("`extends` must be a string".into())),
        None => toml::Table::new(),
    };
    let core = match doc.remove("core") {
        Some(toml::Value::Table(t)) => Some(t),
        Some(_) => return Err(ScenarioError::Schema("`core` must be a table".into())),
        None => None,
    };
    let doc_routers = match doc.remove("routers") {
        Some(toml::Value::Table(t)) => t,
        Some(_) => return Err(ScenarioError::Schema("`routers` must be a table".into())),
        None => toml::Table::new(),
    };
    for (k, v) in doc {
        // Engine overrides layer key by key over the base's.
        match (k.as_str(), v, out.get_mut("engine")) {
            ("engine", toml::Value::Table(t), Some(toml::Value::Table(base))) => base.extend(t),
            (_, v, _) => {
                out.insert(k, v);
            }
        }
    }
    let routers = out
        .entry("routers")
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let toml::Value::Table(routers) = routers else {
        return Err(ScenarioError::Schema("`routers` must be a table".into()));
    };
    if let Some(core) = core {
        for (name, r) in routers.iter_mut() {
            let mpls =
                |t: Option<&toml::Value>| t.and_then(|t| t.get("mpls")).and_then(|m| m.as_bool());
            let is_mpls = mpls(doc_routers.get(name))
                .or(mpls(Some(r)))
                .unwrap_or(false);
            if let (true, toml::Value::Table(rt)) = (is_mpls, r) {
                for (k, v) in &core {
                    rt.insert(k.clone(), v.clone());
                }
            }
        }
    }
    for (name, v) in doc_routers {
        match (routers.get_mut(&name), v) {
            (Some(toml::Value::Table(rt)), toml::Value::Table(vt)) => {
                for (k, v) in vt {
                    rt.insert(k, v);
                }
            }
            (_, v) => {
                routers.insert(name, v);
            }
        }
    }
    Ok(out)
}

impl Topology {
    pub fn from_doc(doc: ScenarioDoc) -> Result<Self, ScenarioError> {
        if doc.format != SCENARIO_FORMAT {
            return Err(ScenarioError::Format(doc.format));
        }
        if doc.routers.is_empty() {
            return Err(ScenarioError::Empty);
        }
        let index: HashMap<&str, usize> = doc
            .routers
            .keys()
            .enumerate()
            .map(|(i, k)| (k.as_str(), i))
            .collect();
        let lookup = |n: &str| {
            index
                .get(n)
                .copied()
                .ok_or_else(|| ScenarioError::DanglingLink(n.to_string()))
        };
        let routers: Vec<Router> = doc
            .routers
            .iter()
            .map(|(name, spec)| {
                let (te, er) = spec.os.initial_ttls();
                let default_ldp = match (spec.mpls, spec.os) {
                    (false, _) => LdpMode::None,
                    (true, os) if os.is_junos() => LdpMode::LoopbackOnly,
                    _ => LdpMode::AllPrefixes,
                };
                Router {
                    name: name.clone(),
                    spec: spec.clone(),
                    ldp: if spec.mpls {
                        spec.ldp.unwrap_or(default_ldp)
                    } else {
                        LdpMode::None
                    },
                    te_initial: spec.te_initial.unwrap_or(te),
                    er_initial: spec.er_initial.unwrap_or(er),
                }
            })
            .collect();
        let vantage = lookup(&doc.vantage)
            .map_err(|_| ScenarioError::Schema(format!("unknown vantage `{}`", doc.vantage)))?;

        let mut owners = HashMap::new();
        let mut own = |a: Ipv4Addr, r: usize| -> Result<(), ScenarioError> {
            if owners.insert(a, r).is_some() {
                return Err(ScenarioError::DuplicateAddress(a));
            }
            Ok(())
        };
        let mut links = Vec::new();
        let mut neighbors = vec![Vec::new(); routers.len()];
        for l in &doc.links {
            if !matches!(l.prefix_len, 30 | 31) {
                return Err(ScenarioError::Schema(format!(
                    "link {}-{}: prefix length must be 30 or 31",
                    l.a, l.b
                )));
            }
            let (a, b) = (lookup(&l.a)?, lookup(&l.b)?);
            let prefix = Prefix::new(l.a_addr, l.prefix_len);
            for addr in [l.a_addr, l.b_addr] {
                let host = u32::from(addr) & 3;
                let bad_host = l.prefix_len == 30 && (host == 0 || host == 3);
                if !prefix.contains(addr) || bad_host || l.a_addr == l.b_addr {
                    return Err(ScenarioError::Address { addr, prefix });
                }
            }
            own(l.a_addr, a)?;
            own(l.b_addr, b)?;
            let li = links.len();
            links.push(Link {
                ends: [(a, l.a_addr), (b, l.b_addr)],
                prefix,
            });
            neighbors[a].push((b, li));
            neighbors[b].push((a, li));
        }
        for (i, r) in routers.iter().enumerate() {
            for a in r.spec.loopback.iter().chain(&r.spec.addresses) {
                own(*a, i)?;
            }
        }
        for (i, r) in routers.iter().enumerate() {
            for a in &r.spec.vrf_interfaces {
                if owners.get(a) != Some(&i) {
                    return Err(ScenarioError::Schema(format!(
                        "{}: vrf interface {a} is not one of its link addresses",
                        r.name
                    )));
                }
            }
        }
        if !owners.contains_key(&doc.target) {
            return Err(ScenarioError::Schema(format!(
                "target {} is not assigned to any router",
                doc.target
            )));
        }
        let tunnels = doc
            .tunnels
            .iter()
            .map(|t| {
                Ok(Tunnel {
                    head: lookup(&t.head)?,
                    tail: lookup(&t.tail)?,
                })
            })
            .collect::<Result<Vec<_>, ScenarioError>>()?;

        let next_hop = all_pairs_next_hop(&neighbors);
        Ok(Self {
            name: doc.name,
            description: doc.description,
            vantage,
            target: doc.target,
            engine: doc.engine,
            routers,
            links,
            tunnels,
            igp_external: doc.igp_external,
            owners,
            neighbors,
            next_hop,
        })
    }

    pub fn router_index(&self, name: &str) -> Option<usize> {
        self.routers.iter().position(|r| r.name == name)
    }

    pub fn owner(&self, addr: Ipv4Addr) -> Option<usize> {
        self.owners.get(&addr).copied()
    }

    pub fn vantage_address(&self) -> Ipv4Addr {
        self.neighbors[self.vantage]
            .first()
            .map(|&(_, li)| self.iface_on(self.vantage, li))
            .or(self.routers[self.vantage].spec.loopback)
            .expect("vantage has an address")
    }

    pub fn name_of(&self, addr: Ipv4Addr) -> Option<&str> {
        self.owner(addr).map(|r| self.routers[r].name.as_str())
    }

    pub fn iface_on(&self, r: usize, link: usize) -> Ipv4Addr {
        let l = &self.links[link];
        if l.ends[0].0 == r {
            l.ends[0].1
        } else {
            l.ends[1].1
        }
    }

    pub fn link_between(&self, a: usize, b: usize) -> Option<usize> {
        self.neighbors[a]
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, l)| l)
    }

    pub fn neighbors(&self, r: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors[r].iter().copied()
    }

    pub fn next_hop(&self, from: usize, to: usize) -> Option<usize> {
        self.next_hop[from][to]
    }

    /// Routers visited from `from` to `to`, both included.
    pub fn path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut out = vec![from];
        let mut cur = from;
        while cur != to {
            cur = self.next_hop(cur, to)?;
            out.push(cur);
            if out.len() > self.routers.len() {
                return None;
            }
        }
        Some(out)
    }

    /// Prefix an address is numbered from: its link prefix, else a host route.
    pub fn prefix_of(&self, addr: Ipv4Addr) -> Prefix {
        self.links
            .iter()
            .find(|l| l.ends.iter().any(|e| e.1 == addr))
            .map(|l| l.prefix)
            .unwrap_or_else(|| Prefix::host(addr))
    }

    /// Routers attached to a prefix.
    pub fn attached(&self, p: &Prefix, r: usize) -> bool {
        if p.len == 32 {
            return self.owner(p.network) == Some(r);
        }
        self.links
            .iter()
            .any(|l| l.prefix == *p && l.ends.iter().any(|e| e.0 == r))
    }

    pub fn is_mpls(&self, r: usize) -> bool {
        self.routers[r].spec.mpls
    }

    pub fn is_vrf_iface(&self, r: usize, addr: Ipv4Addr) -> bool {
        self.routers[r].spec.vrf_interfaces.contains(&addr)
    }

    /// An address reachable through the IGP rather than via a BGP next hop.
    pub fn is_internal(&self, addr: Ipv4Addr) -> bool {
        let Some(o) = self.owner(addr) else {
            return false;
        };
        let p = self.prefix_of(addr);
        if self.igp_external.contains(&p) {
            return true;
        }
        if p.len == 32 {
            return self.is_mpls(o) && self.routers[o].spec.loopback == Some(addr);
        }
        self.links
            .iter()
            .find(|l| l.prefix == p)
            .is_some_and(|l| l.ends.iter().all(|e| self.is_mpls(e.0)))
            && !self
                .links
                .iter()
                .any(|l| l.prefix == p && l.ends.iter().any(|e| self.is_vrf_iface(e.0, e.1)))
    }
}

/// BFS from every destination; ties go to the neighbor listed first.
fn all_pairs_next_hop(neighbors: &[Vec<(usize, usize)>]) -> Vec<Vec<Option<usize>>> {
    let n = neighbors.len();
    let mut table = vec![vec![None; n]; n];
    for dst in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[dst] = 0;
        let mut q = VecDeque::from([dst]);
        while let Some(u) = q.pop_front() {
            for &(v, _) in &neighbors[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
        for from in 0..n {
            if from == dst || dist[from] == usize::MAX {
                continue;
            }
            table[from][dst] = neighbors[from]
                .iter()
                .map(|&(v, _)| v)
                .find(|&v| dist[v] + 1 == dist[from]);
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefixes() {
        let p: Prefix = "10.4.0.2/30".parse().unwrap();
        assert_eq!(p.to_string(), "10.4.0.0/30");
        assert!(p.contains("10.4.0.1".parse().unwrap()));
        assert!(!p.contains("10.4.0.5".parse().unwrap()));
        assert_eq!("1.2.3.4".parse::<Prefix>().unwrap().len, 32);
        assert!("1.2.3.4/33".parse::<Prefix>().is_err());
    }
}
