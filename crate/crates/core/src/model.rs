//! Value types shared by the classifier, the revelation engine and the reports.

use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

pub const MAX_LABEL: u32 = (1 << 20) - 1;

/// One 32-bit MPLS label stack entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelStackEntry {
    pub label: u32,
    pub traffic_class: u8,
    pub bottom_of_stack: bool,
    pub lse_ttl: u8,
}

impl LabelStackEntry {
    pub fn new(label: u32, lse_ttl: u8, bottom_of_stack: bool) -> Self {
        debug_assert!(label <= MAX_LABEL);
        Self {
            label: label & MAX_LABEL,
            traffic_class: 0,
            bottom_of_stack,
            lse_ttl,
        }
    }

    /// Wire layout: label(20) | tc(3) | s(1) | ttl(8).
    pub fn to_bits(self) -> u32 {
        (self.label & MAX_LABEL) << 12
            | u32::from(self.traffic_class & 0x7) << 9
            | u32::from(self.bottom_of_stack) << 8
            | u32::from(self.lse_ttl)
    }

    pub fn from_bits(word: u32) -> Self {
        Self {
            label: word >> 12,
            traffic_class: ((word >> 9) & 0x7) as u8,
            bottom_of_stack: (word >> 8) & 1 == 1,
            lse_ttl: (word & 0xff) as u8,
        }
    }

    pub fn meaning(&self) -> ReservedLabel {
        reserved_label_meaning(self.label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReservedLabel {
    ExplicitNullV4,
    RouterAlert,
    ExplicitNullV6,
    ImplicitNull,
    Ordinary,
}

pub fn reserved_label_meaning(label: u32) -> ReservedLabel {
    match label {
        0 => ReservedLabel::ExplicitNullV4,
        1 => ReservedLabel::RouterAlert,
        2 => ReservedLabel::ExplicitNullV6,
        3 => ReservedLabel::ImplicitNull,
        _ => ReservedLabel::Ordinary,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Brand {
    CiscoLike,
    JuniperJunOS,
    JuniperJunosE,
    UnixLike,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RouterSignature {
    pub te_initial_ttl: u8,
    pub er_initial_ttl: u8,
    pub brand: Brand,
}

impl RouterSignature {
    pub fn is_junos(&self) -> bool {
        self.brand == Brand::JuniperJunOS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplyKind {
    TimeExceeded,
    DestUnreachable,
    EchoReply,
}

/// Raw observation for one probe TTL of the base trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopRecord {
    pub probe_ttl: u8,
    pub address: Option<Ipv4Addr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply: Option<ReplyKind>,
    pub ttl_te: Option<u8>,
    pub ttl_er: Option<u8>,
    pub qttl: Option<u8>,
    #[serde(default)]
    pub lse_stack: Vec<LabelStackEntry>,
    pub rtt: Option<f64>,
}

impl HopRecord {
    pub fn timeout(probe_ttl: u8) -> Self {
        Self {
            probe_ttl,
            address: None,
            reply: None,
            ttl_te: None,
            ttl_er: None,
            qttl: None,
            lse_stack: Vec::new(),
            rtt: None,
        }
    }

    /// True when the reply came from the probed destination itself.
    pub fn is_destination(&self) -> bool {
        matches!(
            self.reply,
            Some(ReplyKind::DestUnreachable | ReplyKind::EchoReply)
        )
    }

    pub fn top_lse(&self) -> Option<&LabelStackEntry> {
        self.lse_stack.first()
    }
}

/// Tunnel evidence codes. Lower is more reliable.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Code {
    #[default]
    None = 0,
    Lse = 1,
    Qttl = 2,
    Uturn = 3,
    LseTtl = 4,
    Frpla = 5,
    Rtla = 6,
    DupIp = 7,
}

impl Code {
    pub fn label(self) -> &'static str {
        match self {
            Code::None => "NONE",
            Code::Lse => "LSE",
            Code::Qttl => "QTTL",
            Code::Uturn => "UTURN",
            Code::LseTtl => "OPAQUE",
            Code::Frpla => "FRPLA",
            Code::Rtla => "RTLA",
            Code::DupIp => "DUP_IP",
        }
    }

    pub fn fires_revelation(self) -> bool {
        matches!(self, Code::LseTtl | Code::Frpla | Code::Rtla | Code::DupIp)
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RevelationState {
    #[default]
    NotAttempted,
    TargetNotReached,
    IngNotFound,
    Dpr,
    Brpr,
    NothingToReveal,
    OneHopLsp,
    Mix,
}

impl RevelationState {
    pub fn is_revealed(self) -> bool {
        matches!(
            self,
            RevelationState::Dpr
                | RevelationState::Brpr
                | RevelationState::OneHopLsp
                | RevelationState::Mix
        )
    }

    pub fn is_inconclusive(self) -> bool {
        matches!(
            self,
            RevelationState::TargetNotReached | RevelationState::IngNotFound
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevealMethod {
    Dpr,
    Brpr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevealedHop {
    pub hop: HopRecord,
    pub step: u32,
    pub buddy_used: bool,
    pub method: RevealMethod,
}

impl RevealedHop {
    pub fn address(&self) -> Option<Ipv4Addr> {
        self.hop.address
    }
}

/// What the trigger stage did for a hop: the `Y` part of the `rtl = X(Y)` display.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TriggerMark {
    #[default]
    NotEvaluated,
    Quiet,
    Suppressed,
    Fired,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TunnelAnnotation {
    pub code: Code,
    pub state: RevelationState,
    #[serde(default)]
    pub revealed: Vec<RevealedHop>,
    pub length_estimate: Option<u32>,
    #[serde(default)]
    pub trigger: TriggerMark,
    #[serde(default)]
    pub brute_force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub t_lse_ttl: u8,
    pub t_uturn: u8,
    /// Minimum sum of two consecutive raw UTURN values before an Implicit tunnel is accepted.
    pub t_uturn_cumulated: u8,
    pub t_rtla: u8,
    pub t_frpla: u8,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            t_lse_ttl: 236,
            t_uturn: 0,
            t_uturn_cumulated: 3,
            t_rtla: 1,
            t_frpla: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedHop {
    #[serde(flatten)]
    pub hop: HopRecord,
    pub annotation: TunnelAnnotation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ProbeCounts {
    pub original: u64,
    pub revelation: u64,
    pub ping: u64,
    pub buddy: u64,
    pub revealed: u64,
    pub no_revelation: u64,
    pub target_not_reached: u64,
    pub ing_not_found: u64,
}

impl ProbeCounts {
    pub fn total(&self) -> u64 {
        self.original + self.revelation + self.ping + self.buddy
    }

    pub fn outcome_total(&self) -> u64 {
        self.revealed + self.no_revelation + self.target_not_reached + self.ing_not_found
    }

    /// Charge `n` revelation-side probes to the outcome class of `state`.
    pub fn attribute(&mut self, state: RevelationState, n: u64) {
        match state {
            RevelationState::TargetNotReached => self.target_not_reached += n,
            RevelationState::IngNotFound => self.ing_not_found += n,
            s if s.is_revealed() => self.revealed += n,
            _ => self.no_revelation += n,
        }
    }

    pub fn add(&mut self, other: &ProbeCounts) {
        self.original += other.original;
        self.revelation += other.revelation;
        self.ping += other.ping;
        self.buddy += other.buddy;
        self.revealed += other.revealed;
        self.no_revelation += other.no_revelation;
        self.target_not_reached += other.target_not_reached;
        self.ing_not_found += other.ing_not_found;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedTrace {
    pub target: Ipv4Addr,
    pub flow_id: u16,
    pub hops: Vec<AnnotatedHop>,
    pub probe_counts: ProbeCounts,
    #[serde(default)]
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl AnnotatedTrace {
    pub fn new(target: Ipv4Addr, flow_id: u16) -> Self {
        Self {
            target,
            flow_id,
            hops: Vec::new(),
            probe_counts: ProbeCounts::default(),
            truncated: false,
            diagnostics: Vec::new(),
        }
    }

    pub fn reached(&self) -> bool {
        self.hops.last().is_some_and(|h| h.hop.is_destination())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_labels() {
        assert_eq!(reserved_label_meaning(0), ReservedLabel::ExplicitNullV4);
        assert_eq!(reserved_label_meaning(1), ReservedLabel::RouterAlert);
        assert_eq!(reserved_label_meaning(2), ReservedLabel::ExplicitNullV6);
        assert_eq!(reserved_label_meaning(3), ReservedLabel::ImplicitNull);
        assert_eq!(reserved_label_meaning(299824), ReservedLabel::Ordinary);
    }

    #[test]
    fn lse_bits() {
        let e = LabelStackEntry::new(299824, 1, true);
        assert_eq!(LabelStackEntry::from_bits(e.to_bits()), e);
        assert_eq!(LabelStackEntry::new(16, 252, true).to_bits(), 0x0001_01fc);
    }

    #[test]
    fn code_order_is_priority() {
        assert!(Code::Lse < Code::Qttl);
        assert!(Code::Frpla < Code::Rtla);
        assert!(Code::Rtla < Code::DupIp);
    }
}
