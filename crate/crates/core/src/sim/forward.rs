//! Hop-by-hop packet walk over a [`Topology`].

use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::topology::{LdpMode, Os, Prefix, Topology};
use crate::model::{LabelStackEntry, ReplyKind};

const IMPLICIT_NULL: u32 = 3;
const EXPLICIT_NULL: u32 = 0;
const MAX_STEPS: u32 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fec {
    Prefix(Prefix),
    Rsvp(usize),
    Vpn(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimLse {
    pub label: u32,
    pub ttl: u8,
    pub fec: Fec,
}

/// TTL left on what lies under a popped LSE: the inner TTL (or the IP-TTL)
/// `inner`, against the decremented LSE-TTL `lse_ttl`. Everyone but Olive
/// keeps the smaller one. Olive copies the LSE-TTL out when it propagates
/// and otherwise leaves the inner TTL alone.
pub fn pop_ttl(os: Os, propagate: bool, inner: u8, lse_ttl: u8) -> u8 {
    match os {
        Os::JunosOlive if propagate => lse_ttl,
        Os::JunosOlive => inner,
        _ => inner.min(lse_ttl),
    }
}

fn quote(stack: &[SimLse]) -> Vec<LabelStackEntry> {
    let n = stack.len();
    stack
        .iter()
        .enumerate()
        .map(|(i, e)| LabelStackEntry::new(e.label, e.ttl, i + 1 == n))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeKind {
    /// Traceroute probe; the destination answers port-unreachable.
    Udp,
    Echo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplyMeta {
    pub kind: ReplyKind,
    pub origin: usize,
    pub qttl: Option<u8>,
    pub quoted: Vec<LabelStackEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Probe(ProbeKind),
    Reply(ReplyMeta),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimPacket {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub ttl: u8,
    pub stack: Vec<SimLse>,
    pub payload: Payload,
    /// Routed in the VRF rather than the global table.
    pub vrf: bool,
}

/// What a router does with a packet.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Forward(usize),
    Deliver {
        source: Ipv4Addr,
        vrf: bool,
    },
    Expire {
        source: Ipv4Addr,
        vrf: bool,
        qttl: u8,
        quote: Vec<LabelStackEntry>,
        /// LSR that sends its error down the LSP: next router and outgoing stack.
        uturn: Option<(usize, Vec<SimLse>)>,
    },
    Drop(String),
}

/// A reply as received by the vantage point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub source: Ipv4Addr,
    pub kind: ReplyKind,
    pub ttl: u8,
    pub qttl: Option<u8>,
    pub lse_stack: Vec<LabelStackEntry>,
    /// Router hops walked by probe and reply together.
    pub steps: u32,
    pub origin: String,
}

enum Act {
    Swap(usize, u32),
    PhPop(usize),
    EgressPop,
    VpnPop,
}

impl Topology {
    /// Label `n` advertises for `fec`, or implicit-null.
    fn label_from(&self, n: usize, fec: Fec) -> u32 {
        let r = &self.routers[n];
        match fec {
            Fec::Prefix(p) if self.attached(&p, n) => {
                if r.ldp == LdpMode::Acl {
                    if r.spec.explicit_null_for.contains(&p) {
                        EXPLICIT_NULL
                    } else {
                        IMPLICIT_NULL
                    }
                } else if r.spec.explicit_null {
                    EXPLICIT_NULL
                } else if r.spec.opaque {
                    r.spec.label
                } else {
                    IMPLICIT_NULL
                }
            }
            Fec::Rsvp(t) if self.tunnels[t].tail == n => {
                if r.spec.explicit_null {
                    EXPLICIT_NULL
                } else {
                    IMPLICIT_NULL
                }
            }
            Fec::Vpn(_) => r.spec.vpn_label.unwrap_or(16),
            _ => r.spec.label,
        }
    }

    /// Nearest router attached to `p`, seen from `at`.
    fn prefix_tail(&self, at: usize, p: &Prefix) -> Option<usize> {
        (0..self.routers.len())
            .filter(|&r| self.attached(p, r))
            .filter_map(|r| self.path(at, r).map(|path| (path.len(), r)))
            .min()
            .map(|(_, r)| r)
    }

    fn fec_tail(&self, at: usize, fec: Fec) -> Option<usize> {
        match fec {
            Fec::Prefix(p) => self.prefix_tail(at, &p),
            Fec::Rsvp(t) => Some(self.tunnels[t].tail),
            Fec::Vpn(pe) => Some(pe),
        }
    }

    /// LSP an unlabeled packet for `dst` would enter at `at`, with the first label.
    pub fn lsp_for(&self, at: usize, dst: Ipv4Addr) -> Option<(Fec, usize, u32)> {
        if !self.is_mpls(at) {
            return None;
        }
        let owner = self.owner(dst)?;
        let path = self.path(at, owner)?;
        let (p, tail) = if self.is_internal(dst) {
            let p = self.prefix_of(dst);
            let tail = *path.iter().find(|&&r| self.attached(&p, r))?;
            (p, tail)
        } else {
            let exit = *path.iter().take_while(|&&r| self.is_mpls(r)).last()?;
            (Prefix::host(self.routers[exit].spec.loopback?), exit)
        };
        if tail == at {
            return None;
        }
        let nh = self.next_hop(at, tail)?;
        if let Some(t) = self
            .tunnels
            .iter()
            .position(|t| t.head == at && t.tail == tail)
        {
            let l = self.label_from(nh, Fec::Rsvp(t));
            return (l != IMPLICIT_NULL).then_some((Fec::Rsvp(t), nh, l));
        }
        let lsp_path = self.path(at, tail)?;
        if !lsp_path.iter().all(|&r| self.routers[r].ldp.binds(&p)) {
            return None;
        }
        let fec = Fec::Prefix(p);
        let l = self.label_from(nh, fec);
        (l != IMPLICIT_NULL).then_some((fec, nh, l))
    }

    fn in_addr(&self, at: usize, prev: Option<usize>) -> Option<Ipv4Addr> {
        let prev = prev?;
        self.link_between(at, prev).map(|l| self.iface_on(at, l))
    }

    /// VRF interface of `at` leading toward `dst`, else its first one.
    fn vrf_iface(&self, at: usize, dst: Ipv4Addr) -> Option<Ipv4Addr> {
        let vrfs = &self.routers[at].spec.vrf_interfaces;
        let toward = self
            .owner(dst)
            .and_then(|o| self.next_hop(at, o))
            .and_then(|n| self.link_between(at, n))
            .map(|l| self.iface_on(at, l))
            .filter(|a| vrfs.contains(a));
        toward.or_else(|| vrfs.first().copied())
    }

    fn neighbor_via(&self, at: usize, iface: Ipv4Addr) -> Option<usize> {
        self.neighbors(at)
            .find(|&(_, l)| self.iface_on(at, l) == iface)
            .map(|(n, _)| n)
    }

    /// One router's handling of `pkt`, which arrived from `prev` (`None` when
    /// generated locally).
    pub fn step(&self, at: usize, prev: Option<usize>, pkt: &mut SimPacket) -> Step {
        let in_addr = self.in_addr(at, prev);
        if !pkt.stack.is_empty() {
            let recv = pkt.stack.clone();
            return self.labeled(at, in_addr, pkt, &recv);
        }
        let local = prev.is_none();
        if !local {
            pkt.vrf = in_addr.is_some_and(|a| self.is_vrf_iface(at, a));
        }
        if self.owner(pkt.dst) == Some(at) {
            return Step::Deliver {
                source: in_addr.unwrap_or(pkt.dst),
                vrf: pkt.vrf,
            };
        }
        if self.routers[at].os() == Os::Host {
            return Step::Drop(format!("host {} does not forward", self.routers[at].name));
        }
        if !local {
            if pkt.ttl <= 1 {
                return Step::Expire {
                    source: in_addr.expect("forwarded packet has an ingress"),
                    vrf: pkt.vrf,
                    qttl: pkt.ttl,
                    quote: Vec::new(),
                    uturn: None,
                };
            }
            pkt.ttl -= 1;
        }
        self.route(at, pkt, local)
    }

    /// Lookup and possibly push, after TTL processing is done.
    fn route(&self, at: usize, pkt: &mut SimPacket, local: bool) -> Step {
        let r = &self.routers[at];
        let Some(owner) = self.owner(pkt.dst) else {
            return Step::Drop(format!("{} has no route to {}", r.name, pkt.dst));
        };
        let Some(nh) = self.next_hop(at, owner) else {
            return Step::Drop(format!("{} has no route to {}", r.name, pkt.dst));
        };
        let push_ttl = |pkt: &mut SimPacket| {
            if local && r.os() == Os::JunosOlive && !r.spec.propagate {
                pkt.ttl = pkt.ttl.saturating_sub(1).max(1);
            }
            if r.spec.propagate {
                pkt.ttl
            } else {
                255
            }
        };

        if pkt.vrf && !r.spec.vrf_interfaces.is_empty() {
            let out = self.link_between(at, nh).map(|l| self.iface_on(at, l));
            if out.is_some_and(|a| self.is_vrf_iface(at, a)) {
                return Step::Forward(nh);
            }
            let path = self.path(at, owner).unwrap_or_default();
            let Some(&pe) = path
                .iter()
                .skip(1)
                .rev()
                .find(|&&x| !self.routers[x].spec.vrf_interfaces.is_empty())
            else {
                return Step::Drop(format!("{}: no VPN route to {}", r.name, pkt.dst));
            };
            let Some(lo) = self.routers[pe].spec.loopback else {
                return Step::Drop(format!("{}: remote PE without loopback", r.name));
            };
            let lse = push_ttl(pkt);
            let vpn = Fec::Vpn(pe);
            let mut stack = vec![];
            let transport = Fec::Prefix(Prefix::host(lo));
            let first = self.next_hop(at, pe).unwrap_or(nh);
            let tl = self.label_from(first, transport);
            if tl != IMPLICIT_NULL {
                stack.push(SimLse {
                    label: tl,
                    ttl: lse,
                    fec: transport,
                });
            }
            stack.push(SimLse {
                label: self.label_from(pe, vpn),
                ttl: lse,
                fec: vpn,
            });
            pkt.stack = stack;
            return Step::Forward(first);
        }

        if let Some((fec, nh, label)) = self.lsp_for(at, pkt.dst) {
            let lse = push_ttl(pkt);
            pkt.stack = vec![SimLse {
                label,
                ttl: lse,
                fec,
            }];
            return Step::Forward(nh);
        }
        Step::Forward(nh)
    }

    fn labeled(
        &self,
        at: usize,
        in_addr: Option<Ipv4Addr>,
        pkt: &mut SimPacket,
        recv: &[SimLse],
    ) -> Step {
        let r = &self.routers[at];
        let os = r.os();
        let top = pkt.stack[0];
        let t = pkt.ttl;
        let act = match top.fec {
            Fec::Vpn(pe) if pe == at => Act::VpnPop,
            Fec::Vpn(_) => return Step::Drop("VPN label away from its PE".into()),
            fec => match self.fec_tail(at, fec) {
                Some(tail) if tail == at => Act::EgressPop,
                Some(tail) => {
                    let Some(nh) = self.next_hop(at, tail) else {
                        return Step::Drop("broken LSP".into());
                    };
                    match self.label_from(nh, fec) {
                        IMPLICIT_NULL => Act::PhPop(nh),
                        l => Act::Swap(nh, l),
                    }
                }
                None => return Step::Drop("LSP without tail".into()),
            },
        };
        let vrf_source = || self.vrf_iface(at, pkt.dst).or(in_addr);
        let l1 = top.ttl.saturating_sub(1);
        if l1 == 0 {
            let qttl = match act {
                Act::Swap(..) if os.is_cisco() => t,
                _ => t.min(top.ttl),
            };
            let uturn = match act {
                Act::Swap(nh, l) if os.is_cisco() || (os.is_junos() && r.spec.icmp_tunneling) => {
                    let mut out = pkt.stack.clone();
                    out[0].label = l;
                    Some((nh, out))
                }
                _ => None,
            };
            let (source, vrf) = match act {
                Act::VpnPop => (vrf_source(), true),
                _ => (in_addr, false),
            };
            // 15.2 stays quiet when its own explicit-null LSE expires.
            let quiet = matches!(act, Act::EgressPop)
                && top.label == EXPLICIT_NULL
                && os == Os::CiscoIos152;
            return Step::Expire {
                source: source.unwrap_or(pkt.dst),
                vrf,
                qttl,
                quote: if r.spec.rfc4950 && !quiet {
                    quote(recv)
                } else {
                    Vec::new()
                },
                uturn,
            };
        }
        let inner_ttl = |inner: u8| pop_ttl(os, r.spec.propagate, inner, l1);
        match act {
            Act::Swap(nh, l) => {
                pkt.stack[0] = SimLse {
                    label: l,
                    ttl: l1,
                    fec: top.fec,
                };
                Step::Forward(nh)
            }
            Act::PhPop(nh) => {
                pkt.stack.remove(0);
                match pkt.stack.first_mut() {
                    Some(inner) => inner.ttl = inner_ttl(inner.ttl),
                    None => pkt.ttl = inner_ttl(t),
                }
                Step::Forward(nh)
            }
            Act::EgressPop => {
                pkt.stack.remove(0);
                if let Some(inner) = pkt.stack.first_mut() {
                    inner.ttl = inner_ttl(inner.ttl);
                    return self.labeled(at, in_addr, pkt, recv);
                }
                let source = in_addr.unwrap_or(pkt.dst);
                if self.owner(pkt.dst) == Some(at) {
                    return Step::Deliver { source, vrf: false };
                }
                let explicit = top.label == EXPLICIT_NULL;
                let t = i32::from(t);
                let l1 = i32::from(l1);
                let t2 = if !explicit {
                    t - 1
                } else {
                    match os {
                        Os::CiscoIos152 if r.spec.propagate => l1,
                        Os::CiscoIos152 if t == 1 => 1,
                        Os::CiscoIos152 => t - 1 - i32::from(r.spec.egress_extra_decrement),
                        Os::JunosOlive if r.spec.propagate => l1,
                        Os::JunosOlive => t - 1,
                        _ => (t - 1).min(l1),
                    }
                };
                if t2 <= 0 {
                    // The explicit-null label is gone; this is a plain IP expiry.
                    let quiet = explicit;
                    return Step::Expire {
                        source,
                        vrf: false,
                        qttl: t as u8,
                        quote: if r.spec.rfc4950 && !quiet {
                            quote(recv)
                        } else {
                            Vec::new()
                        },
                        uturn: None,
                    };
                }
                pkt.ttl = t2 as u8;
                pkt.vrf = false;
                self.route(at, pkt, false)
            }
            Act::VpnPop => {
                pkt.stack.remove(0);
                pkt.vrf = true;
                let Some(vrf_if) = vrf_source() else {
                    return Step::Drop("VPN egress without VRF interface".into());
                };
                if os.is_junos() {
                    // Per-CE label: straight to the attached CE, no TTL check.
                    pkt.ttl = t.min(l1);
                    return match self.neighbor_via(at, vrf_if) {
                        Some(ce) => Step::Forward(ce),
                        None => Step::Drop("VRF interface without neighbor".into()),
                    };
                }
                if self.owner(pkt.dst) == Some(at) {
                    return Step::Deliver {
                        source: vrf_if,
                        vrf: true,
                    };
                }
                let t2 = t.saturating_sub(1).min(l1);
                if t2 == 0 {
                    return Step::Expire {
                        source: vrf_if,
                        vrf: true,
                        qttl: t,
                        quote: if r.spec.rfc4950 {
                            quote(recv)
                        } else {
                            Vec::new()
                        },
                        uturn: None,
                    };
                }
                pkt.ttl = t2;
                self.route(at, pkt, false)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn make_reply(
        &self,
        at: usize,
        probe: &SimPacket,
        kind: ReplyKind,
        source: Ipv4Addr,
        vrf: bool,
        qttl: Option<u8>,
        quoted: Vec<LabelStackEntry>,
    ) -> SimPacket {
        let r = &self.routers[at];
        let ttl = match kind {
            ReplyKind::EchoReply => r.er_initial,
            _ => r.te_initial,
        };
        SimPacket {
            src: source,
            dst: probe.src,
            ttl,
            stack: Vec::new(),
            payload: Payload::Reply(ReplyMeta {
                kind,
                origin: at,
                qttl,
                quoted,
            }),
            vrf,
        }
    }

    /// Send a probe from the vantage point and return what comes back.
    pub fn send(
        &self,
        dst: Ipv4Addr,
        ttl: u8,
        kind: ProbeKind,
    ) -> Result<Option<Observation>, String> {
        let vp = self.vantage;
        let Some(owner) = self.owner(dst) else {
            return Ok(None);
        };
        if owner == vp {
            return Ok(None);
        }
        let mut pkt = SimPacket {
            src: self.vantage_address(),
            dst,
            ttl,
            stack: Vec::new(),
            payload: Payload::Probe(kind),
            vrf: false,
        };
        let Some(mut at) = self.next_hop(vp, owner) else {
            return Ok(None);
        };
        let mut prev = Some(vp);
        let mut steps = 0u32;
        loop {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(format!("forwarding loop toward {dst}"));
            }
            let step = self.step(at, prev, &mut pkt);
            let reply = match step {
                Step::Forward(n) => {
                    prev = Some(at);
                    at = n;
                    continue;
                }
                Step::Drop(_) => return Ok(None),
                Step::Deliver { source, vrf } => match &pkt.payload {
                    Payload::Reply(meta) => {
                        if at != vp {
                            return Ok(None);
                        }
                        let noise = i32::from(self.routers[meta.origin].spec.return_noise);
                        let ttl = (i32::from(pkt.ttl) - noise).clamp(1, 255) as u8;
                        return Ok(Some(Observation {
                            source: pkt.src,
                            kind: meta.kind,
                            ttl,
                            qttl: meta.qttl,
                            lse_stack: meta.quoted.clone(),
                            steps,
                            origin: self.routers[meta.origin].name.clone(),
                        }));
                    }
                    Payload::Probe(ProbeKind::Echo) => {
                        if self.routers[at].spec.no_echo {
                            return Ok(None);
                        }
                        let src = pkt.dst;
                        self.make_reply(at, &pkt, ReplyKind::EchoReply, src, vrf, None, vec![])
                    }
                    Payload::Probe(ProbeKind::Udp) => {
                        if self.routers[at].spec.silent {
                            return Ok(None);
                        }
                        let q = Some(pkt.ttl);
                        self.make_reply(
                            at,
                            &pkt,
                            ReplyKind::DestUnreachable,
                            source,
                            vrf,
                            q,
                            vec![],
                        )
                    }
                },
                Step::Expire {
                    source,
                    vrf,
                    qttl,
                    quote,
                    uturn,
                } => {
                    if matches!(pkt.payload, Payload::Reply(_)) || self.routers[at].spec.silent {
                        return Ok(None);
                    }
                    let mut reply = self.make_reply(
                        at,
                        &pkt,
                        ReplyKind::TimeExceeded,
                        source,
                        vrf,
                        Some(qttl),
                        quote,
                    );
                    if let Some((nh, mut stack)) = uturn {
                        let r = &self.routers[at];
                        if r.os().is_junos() {
                            reply.ttl = 254;
                        }
                        stack[0].ttl = reply.ttl;
                        reply.stack = stack;
                        pkt = reply;
                        prev = Some(at);
                        at = nh;
                        continue;
                    }
                    reply
                }
            };
            pkt = reply;
            prev = None;
        }
    }
}
