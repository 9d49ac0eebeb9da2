//! Campaign statistics: tunnels per class and revelation technique, plus
//! the probe budget broken down by purpose and outcome.

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::model::{AnnotatedTrace, Code, ProbeCounts, RevelationState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TunnelClass {
    Explicit,
    ImplicitQttl,
    ImplicitUturn,
    Opaque,
    InvisiblePhpRtla,
    InvisiblePhpFrpla,
    InvisibleUhp,
}

impl TunnelClass {
    pub const ALL: [TunnelClass; 7] = [
        TunnelClass::Explicit,
        TunnelClass::ImplicitQttl,
        TunnelClass::ImplicitUturn,
        TunnelClass::Opaque,
        TunnelClass::InvisiblePhpRtla,
        TunnelClass::InvisiblePhpFrpla,
        TunnelClass::InvisibleUhp,
    ];

    pub fn of(code: Code) -> Option<Self> {
        Some(match code {
            Code::None => return None,
            Code::Lse => TunnelClass::Explicit,
            Code::Qttl => TunnelClass::ImplicitQttl,
            Code::Uturn => TunnelClass::ImplicitUturn,
            Code::LseTtl => TunnelClass::Opaque,
            Code::Rtla => TunnelClass::InvisiblePhpRtla,
            Code::Frpla => TunnelClass::InvisiblePhpFrpla,
            Code::DupIp => TunnelClass::InvisibleUhp,
        })
    }

    /// Visible classes are contiguous runs of hops; the rest are one hop each.
    fn is_visible(self) -> bool {
        matches!(
            self,
            TunnelClass::Explicit | TunnelClass::ImplicitQttl | TunnelClass::ImplicitUturn
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            TunnelClass::Explicit => "explicit",
            TunnelClass::ImplicitQttl => "implicit-qttl",
            TunnelClass::ImplicitUturn => "implicit-uturn",
            TunnelClass::Opaque => "opaque",
            TunnelClass::InvisiblePhpRtla => "invisible-php-rtla",
            TunnelClass::InvisiblePhpFrpla => "invisible-php-frpla",
            TunnelClass::InvisibleUhp => "invisible-uhp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Technique {
    Dpr,
    Brpr,
    OneHopLsp,
    Mix,
    /// Visible tunnels, nothing to reveal, or an inconclusive attempt.
    None,
}

impl Technique {
    pub const ALL: [Technique; 5] = [
        Technique::Dpr,
        Technique::Brpr,
        Technique::OneHopLsp,
        Technique::Mix,
        Technique::None,
    ];

    pub fn of(state: RevelationState) -> Self {
        match state {
            RevelationState::Dpr => Technique::Dpr,
            RevelationState::Brpr => Technique::Brpr,
            RevelationState::OneHopLsp => Technique::OneHopLsp,
            RevelationState::Mix => Technique::Mix,
            _ => Technique::None,
        }
    }
}

/// One tunnel found in a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TunnelObservation {
    pub class: TunnelClass,
    pub technique: Technique,
    /// Index in `trace.hops` of the first hop carrying the evidence.
    pub hop_index: usize,
}

pub fn tunnels(trace: &AnnotatedTrace) -> Vec<TunnelObservation> {
    let mut out: Vec<TunnelObservation> = Vec::new();
    let mut run: Option<TunnelClass> = None;
    for (i, h) in trace.hops.iter().enumerate() {
        let class = TunnelClass::of(h.annotation.code);
        match class {
            Some(c) if c.is_visible() => {
                if run != Some(c) {
                    out.push(TunnelObservation {
                        class: c,
                        technique: Technique::of(h.annotation.state),
                        hop_index: i,
                    });
                }
            }
            Some(c) => out.push(TunnelObservation {
                class: c,
                technique: Technique::of(h.annotation.state),
                hop_index: i,
            }),
            None => {}
        }
        // A timeout does not break a visible run.
        if h.hop.address.is_some() {
            run = class.filter(|c| c.is_visible());
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CampaignStats {
    pub traces: u64,
    pub matrix: BTreeMap<TunnelClass, BTreeMap<Technique, u64>>,
    pub probes: ProbeCounts,
}

impl CampaignStats {
    pub fn count(&self, class: TunnelClass, technique: Technique) -> u64 {
        self.matrix
            .get(&class)
            .and_then(|m| m.get(&technique))
            .copied()
            .unwrap_or(0)
    }

    pub fn class_total(&self, class: TunnelClass) -> u64 {
        self.matrix.get(&class).map_or(0, |m| m.values().sum())
    }

    pub fn add_trace(&mut self, trace: &AnnotatedTrace) {
        self.traces += 1;
        for t in tunnels(trace) {
            *self
                .matrix
                .entry(t.class)
                .or_default()
                .entry(t.technique)
                .or_default() += 1;
        }
        self.probes.add(&trace.probe_counts);
    }

    pub fn merge(&mut self, other: &CampaignStats) {
        self.traces += other.traces;
        for (c, row) in &other.matrix {
            for (t, n) in row {
                *self.matrix.entry(*c).or_default().entry(*t).or_default() += n;
            }
        }
        self.probes.add(&other.probes);
    }
}

pub fn classify_stats<'a>(traces: impl IntoIterator<Item = &'a AnnotatedTrace>) -> CampaignStats {
    let mut s = CampaignStats::default();
    for t in traces {
        s.add_trace(t);
    }
    s
}

impl fmt::Display for CampaignStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "traces: {}", self.traces)?;
        let head = Technique::ALL
            .iter()
            .map(|t| format!("{:>11}", format!("{t:?}")))
            .join("");
        writeln!(f, "{:<22}{head}{:>8}", "class", "total")?;
        for c in TunnelClass::ALL {
            let row = Technique::ALL
                .iter()
                .map(|t| format!("{:>11}", self.count(c, *t)))
                .join("");
            writeln!(f, "{:<22}{row}{:>8}", c.name(), self.class_total(c))?;
        }
        let p = &self.probes;
        writeln!(f)?;
        writeln!(f, "probes: {}", p.total())?;
        writeln!(f, "  original     {:>8}", p.original)?;
        writeln!(f, "  revelation   {:>8}", p.revelation)?;
        writeln!(f, "  buddy        {:>8}", p.buddy)?;
        writeln!(f, "  ping         {:>8}", p.ping)?;
        writeln!(f, "revelation and buddy probes by outcome:")?;
        writeln!(f, "  revealed           {:>8}", p.revealed)?;
        writeln!(f, "  nothing revealed   {:>8}", p.no_revelation)?;
        writeln!(f, "  target not reached {:>8}", p.target_not_reached)?;
        write!(f, "  ingress not found  {:>8}", p.ing_not_found)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_is_all_zero() {
        let s = classify_stats(std::iter::empty());
        assert_eq!(s.traces, 0);
        for c in TunnelClass::ALL {
            assert_eq!(s.class_total(c), 0);
        }
        assert_eq!(s.probes.total(), 0);
    }
}
