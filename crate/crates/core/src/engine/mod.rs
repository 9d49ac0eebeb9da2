//! The hop loop: probe, ping, classify one hop behind the frontier, reveal.

pub mod live;

use std::collections::HashMap;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{check_indicators, check_triggers, length_estimate, HopMetrics};
use crate::model::{
    AnnotatedHop, AnnotatedTrace, Code, HopRecord, LabelStackEntry, ProbeCounts, ReplyKind,
    RevelationState, Thresholds, TriggerMark, TunnelAnnotation,
};
use crate::revelation::reveal_tunnel;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProbeError {
    #[error("raw socket unavailable: {0}")]
    Socket(String),
    #[error("probe i/o failure: {0}")]
    Io(String),
    #[error("simulator: {0}")]
    Sim(String),
}

/// A reply as seen by the vantage point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReply {
    pub address: Ipv4Addr,
    pub kind: ReplyKind,
    pub reply_ttl: u8,
    pub qttl: Option<u8>,
    pub lse_stack: Vec<LabelStackEntry>,
    pub rtt: Option<f64>,
}

/// Backend contract. `Ok(None)` is a timeout.
pub trait Prober {
    fn trace_hop(
        &mut self,
        target: Ipv4Addr,
        ttl: u8,
        flow_id: u16,
    ) -> Result<Option<ProbeReply>, ProbeError>;

    /// Raw IP-TTL of the echo-reply.
    fn echo(&mut self, target: Ipv4Addr) -> Result<Option<u8>, ProbeError>;

    fn udp(&mut self, target: Ipv4Addr, ttl: u8) -> Result<Option<ProbeReply>, ProbeError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub starting_ttl: u8,
    pub max_ttl: u8,
    pub gap_limit: u8,
    pub thresholds: Thresholds,
    pub brute_force: bool,
    /// Skip FRPLA/RTLA for LL hops after a fired revelation.
    pub suppress_shadow: bool,
    pub flow_id: u16,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            starting_ttl: 3,
            max_ttl: 32,
            gap_limit: 5,
            thresholds: Thresholds::default(),
            brute_force: false,
            suppress_shadow: true,
            flow_id: 0x4d2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Original,
    Revelation,
    Buddy,
}

/// Result of tracing toward one target from a given TTL.
#[derive(Debug, Clone, Default)]
pub struct Segment {
    /// Intermediate hops, timeouts included.
    pub hops: Vec<HopRecord>,
    /// The destination reply, if the target answered.
    pub reached: Option<HopRecord>,
}

/// One probing session: backend, counters and the per-trace echo cache.
pub struct Session<'a> {
    prober: &'a mut dyn Prober,
    pub config: EngineConfig,
    pub counts: ProbeCounts,
    echo_cache: HashMap<Ipv4Addr, Option<u8>>,
    pub error: Option<ProbeError>,
}

impl<'a> Session<'a> {
    pub fn new(prober: &'a mut dyn Prober, config: EngineConfig) -> Self {
        Self {
            prober,
            config,
            counts: ProbeCounts::default(),
            echo_cache: HashMap::new(),
            error: None,
        }
    }

    fn charge(&mut self, purpose: Purpose) {
        match purpose {
            Purpose::Original => self.counts.original += 1,
            Purpose::Revelation => self.counts.revelation += 1,
            Purpose::Buddy => self.counts.buddy += 1,
        }
    }

    fn fail(&mut self, e: ProbeError) {
        if self.error.is_none() {
            self.error = Some(e);
        }
    }

    /// Probe one TTL. Backend errors are latched and reported as timeouts.
    pub fn probe(&mut self, target: Ipv4Addr, ttl: u8, purpose: Purpose) -> HopRecord {
        self.charge(purpose);
        if self.error.is_some() {
            return HopRecord::timeout(ttl);
        }
        match self.prober.trace_hop(target, ttl, self.config.flow_id) {
            Ok(Some(r)) => HopRecord {
                probe_ttl: ttl,
                address: Some(r.address),
                reply: Some(r.kind),
                ttl_te: Some(r.reply_ttl),
                ttl_er: None,
                qttl: r.qttl,
                lse_stack: r.lse_stack,
                rtt: r.rtt,
            },
            Ok(None) => HopRecord::timeout(ttl),
            Err(e) => {
                self.fail(e);
                HopRecord::timeout(ttl)
            }
        }
    }

    pub fn ping(&mut self, address: Ipv4Addr) -> Option<u8> {
        if let Some(v) = self.echo_cache.get(&address) {
            return *v;
        }
        self.counts.ping += 1;
        let v = if self.error.is_some() {
            None
        } else {
            match self.prober.echo(address) {
                Ok(v) => v,
                Err(e) => {
                    self.fail(e);
                    None
                }
            }
        };
        self.echo_cache.insert(address, v);
        v
    }

    /// Source address of the reply to a UDP probe sent to `target`.
    pub fn udp_incoming_interface_probe(&mut self, target: Ipv4Addr) -> Option<Ipv4Addr> {
        self.counts.buddy += 1;
        if self.error.is_some() {
            return None;
        }
        match self.prober.udp(target, self.config.max_ttl) {
            Ok(r) => r
                .filter(|r| r.kind != ReplyKind::TimeExceeded)
                .map(|r| r.address),
            Err(e) => {
                self.fail(e);
                None
            }
        }
    }

    /// Trace toward `target` from `from_ttl` until it answers, the gap limit
    /// is hit, or `max_ttl` is passed.
    pub fn trace_from(&mut self, target: Ipv4Addr, from_ttl: u8, purpose: Purpose) -> Segment {
        let mut seg = Segment::default();
        let mut gap = 0;
        for ttl in from_ttl.max(1)..=self.config.max_ttl {
            let hop = self.probe(target, ttl, purpose);
            if hop.is_destination() {
                seg.reached = Some(hop);
                break;
            }
            if hop.address.is_none() {
                gap += 1;
                if gap >= self.config.gap_limit || self.error.is_some() {
                    seg.hops.push(hop);
                    break;
                }
            } else {
                gap = 0;
            }
            seg.hops.push(hop);
        }
        seg
    }
}

pub fn trace_naughty_tunnel(
    target: Ipv4Addr,
    config: EngineConfig,
    prober: &mut dyn Prober,
) -> AnnotatedTrace {
    let mut session = Session::new(prober, config);
    let mut trace = AnnotatedTrace::new(target, config.flow_id);
    let mut hops: Vec<HopRecord> = Vec::new();
    let mut loop_state = LoopState::default();
    let mut gap = 0u8;

    for ttl in config.starting_ttl.max(1)..=config.max_ttl {
        let mut hop = session.probe(target, ttl, Purpose::Original);
        if let Some(addr) = hop.address {
            hop.ttl_er = session.ping(addr);
        }
        let done = hop.is_destination() || hop.address == Some(target);
        if hop.address.is_none() {
            gap += 1;
        } else {
            gap = 0;
        }
        hops.push(hop);
        if hops.len() >= 2 {
            let i = hops.len() - 2;
            let a = classify(i, &hops, &mut loop_state, &mut session);
            trace.hops.push(a);
        }
        if session.error.is_some() {
            trace.truncated = true;
            break;
        }
        if done || gap >= config.gap_limit {
            break;
        }
    }
    if !hops.is_empty() {
        let i = hops.len() - 1;
        let a = classify(i, &hops, &mut loop_state, &mut session);
        trace.hops.push(a);
    }
    if let Some(e) = session.error.take() {
        trace.truncated = true;
        trace.diagnostics.push(e.to_string());
    }
    if trace.hops.iter().all(|h| h.hop.address.is_none()) {
        trace.hops.clear();
        trace.diagnostics.push("no hop responded".into());
    }
    trace.probe_counts = session.counts;
    trace
}

#[derive(Default)]
struct LoopState {
    /// Triggers are suppressed for hop indices up to and including this one.
    shadow_until: Option<usize>,
}

impl LoopState {
    fn extend_shadow(&mut self, until: usize) {
        self.shadow_until = self.shadow_until.max(Some(until));
    }
}

fn two_hop_uturn(i: usize, hops: &[HopRecord], th: &Thresholds) -> bool {
    let raw = |j: usize| -> Option<i32> {
        let h = hops.get(j)?;
        h.address?;
        h.top_lse().is_none().then_some(())?;
        let m = HopMetrics::of(h);
        let u = m.uturn()?;
        (!m.is_junos() && u.unsigned_abs() > u32::from(th.t_uturn)).then_some(u.abs())
    };
    let Some(u) = raw(i) else { return false };
    let best = [i.checked_sub(1), Some(i + 1)]
        .into_iter()
        .flatten()
        .filter_map(raw)
        .max()
        .unwrap_or(0);
    u + best >= i32::from(th.t_uturn_cumulated)
}

fn classify(
    i: usize,
    hops: &[HopRecord],
    st: &mut LoopState,
    session: &mut Session<'_>,
) -> AnnotatedHop {
    let config = session.config;
    let th = &config.thresholds;
    let cur = &hops[i];
    let prev = i.checked_sub(1).map(|j| &hops[j]);
    let next = hops.get(i + 1);
    let mut ann = TunnelAnnotation::default();

    let ind = check_indicators(Some(cur), th);
    ann.code = ind.code;
    if ann.code == Code::Uturn && !two_hop_uturn(i, hops, th) {
        ann.code = Code::None;
    }

    let in_shadow = config.suppress_shadow && st.shadow_until.is_some_and(|s| i <= s);
    let mut fire: Option<(Code, Option<i32>)> = None;
    let candidate = ann.code == Code::None && cur.address.is_some() && prev.is_some();
    if candidate {
        match check_triggers(prev, Some(cur), next, th) {
            Some(t) if t.code == Code::DupIp => {
                ann.trigger = TriggerMark::Fired;
                fire = Some((t.code, Some(t.value)));
            }
            Some(_) | None if in_shadow => ann.trigger = TriggerMark::Suppressed,
            Some(t) => {
                ann.trigger = TriggerMark::Fired;
                fire = Some((t.code, Some(t.value)));
            }
            None => ann.trigger = TriggerMark::Quiet,
        }
    } else if ann.code == Code::LseTtl && prev.is_some() {
        fire = Some((Code::LseTtl, None));
    }

    if let Some((code, value)) = fire {
        ann.code = code;
        ann.length_estimate = length_estimate(code, cur, value);
        let result = reveal_tunnel(prev.unwrap(), cur, code, session);
        ann.state = result.state;
        ann.revealed = result.revealed;
        let ll = ann.length_estimate.unwrap_or(0) as usize;
        if ll > 0 {
            st.extend_shadow(i + ll);
        }
    }
    // A trigger candidate shadows the hops after it by its own return-length
    // excess, fired or not, so the thresholds decide what fires but never
    // what is shadowed.
    if candidate && !in_shadow {
        let m = HopMetrics::of(cur);
        let excess = if m.is_junos() {
            m.rtla.max(m.frpla)
        } else {
            m.frpla
        };
        if let Some(n) = excess.filter(|&n| n > 0) {
            st.extend_shadow(i + n as usize);
        }
    }

    if config.brute_force && ann.state == RevelationState::NotAttempted {
        if let (Some(p), Some(a)) = (prev, cur.address) {
            if p.address.is_some_and(|pa| pa != a) {
                let result = reveal_tunnel(p, cur, Code::None, session);
                ann.state = result.state;
                ann.revealed = result.revealed;
                ann.brute_force = true;
            }
        }
    }

    if ann.code == Code::Rtla && ann.state == RevelationState::NothingToReveal {
        ann.code = Code::Uturn;
    }

    AnnotatedHop {
        hop: cur.clone(),
        annotation: ann,
        name: None,
    }
}
