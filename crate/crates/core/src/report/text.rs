//! Human-readable transcript, one line per hop.

use std::fmt::Write;

use crate::classifier::HopMetrics;
use crate::model::{AnnotatedHop, AnnotatedTrace, Code, HopRecord, RevelationState, TriggerMark};

/// The `(X, Y)` pair of the `rtla = X(Y)` field: the raw return-length
/// difference, and what the trigger stage did with it (the fired value,
/// -1 when suppressed after a revelation, else 0).
pub fn rtla_pair(hop: &AnnotatedHop) -> (i32, i32) {
    let m = HopMetrics::of(&hop.hop);
    let x = m.rtla.unwrap_or(0);
    let y = match hop.annotation.trigger {
        TriggerMark::Fired if hop.annotation.code == Code::Rtla => x,
        TriggerMark::Fired => hop.annotation.length_estimate.map_or(0, |v| v as i32),
        TriggerMark::Suppressed => -1,
        _ => 0,
    };
    (x, y)
}

fn addr_part(name: Option<&str>, hop: &HopRecord) -> String {
    match hop.address {
        Some(a) => format!(
            "{} ({a})",
            name.map_or_else(|| a.to_string(), str::to_string)
        ),
        None => "*".to_string(),
    }
}

fn ttl_part(hop: &HopRecord) -> String {
    let show = |v: Option<u8>| v.map_or_else(|| "*".to_string(), |v| v.to_string());
    format!("<{},{}>", show(hop.ttl_te), show(hop.ttl_er))
}

fn lse_part(hop: &HopRecord) -> String {
    hop.lse_stack
        .iter()
        .map(|e| format!("[MPLS LSE | Label : {} | LSE-TTL : {}]", e.label, e.lse_ttl))
        .collect()
}

fn rtt_part(hop: &HopRecord) -> String {
    hop.rtt.map_or_else(String::new, |r| format!(" {r:.3} ms"))
}

fn hop_line(h: &AnnotatedHop) -> String {
    let hop = &h.hop;
    if hop.address.is_none() {
        return format!("{:>3}  *", hop.probe_ttl);
    }
    let m = HopMetrics::of(hop);
    let mut s = format!(
        "{:>3}  {}  {} [frpla = {}]",
        hop.probe_ttl,
        addr_part(h.name.as_deref(), hop),
        ttl_part(hop),
        m.frpla.unwrap_or(0)
    );
    if m.is_junos() {
        let (x, y) = rtla_pair(h);
        let _ = write!(s, "[rtla = {x}({y})]");
    }
    let _ = write!(
        s,
        "[qttl = {}][uturn = {}]{}{}",
        hop.qttl.unwrap_or(0),
        m.uturn().unwrap_or(0),
        lse_part(hop),
        rtt_part(hop)
    );
    s
}

fn tunnel_header(h: &AnnotatedHop) -> String {
    let a = &h.annotation;
    let what = match a.code {
        Code::DupIp => format!(
            "Duplicate IP (Egress : {})",
            h.hop.address.map_or_else(|| "*".into(), |x| x.to_string())
        ),
        Code::None if a.brute_force => "BRUTE FORCE".to_string(),
        c => c.label().to_string(),
    };
    let n = a.revealed.len() as i64;
    let tail = match a.state {
        RevelationState::TargetNotReached => " (target not reached)".to_string(),
        RevelationState::IngNotFound => " (ingress not found)".to_string(),
        _ => match a.length_estimate {
            Some(ll) => format!(" (difference : {})", (i64::from(ll) - n).abs()),
            None => String::new(),
        },
    };
    let ll = a
        .length_estimate
        .map_or_else(|| "-".to_string(), |v| v.to_string());
    format!("    {what} | Length estimation : {ll} | Revealed : {n}{tail}")
}

pub fn dump_text(trace: &AnnotatedTrace) -> String {
    let mut out = format!("Launching TNT: {} ({})\n", trace.target, trace.target);
    let mut prev_ttl = 0u8;
    for h in &trace.hops {
        if h.annotation.state != RevelationState::NotAttempted {
            let _ = writeln!(out, "{}", tunnel_header(h));
            for (k, r) in h.annotation.revealed.iter().enumerate() {
                let m = HopMetrics::of(&r.hop);
                let _ = writeln!(
                    out,
                    "     {}.{} [REVEALED] {}  {} [qttl = {}][uturn = {}]{}  - step {}{}",
                    prev_ttl,
                    k + 1,
                    addr_part(None, &r.hop),
                    ttl_part(&r.hop),
                    r.hop.qttl.unwrap_or(0),
                    m.uturn().unwrap_or(0),
                    lse_part(&r.hop),
                    r.step,
                    if r.buddy_used { "  (Buddy used)" } else { "" }
                );
            }
        }
        let _ = writeln!(out, "{}", hop_line(h));
        prev_ttl = h.hop.probe_ttl;
    }
    for d in &trace.diagnostics {
        let _ = writeln!(out, "# {d}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LabelStackEntry;

    #[test]
    fn empty_trace_is_header_only() {
        let t = AnnotatedTrace::new("192.0.2.1".parse().unwrap(), 1);
        assert_eq!(dump_text(&t), "Launching TNT: 192.0.2.1 (192.0.2.1)\n");
    }

    #[test]
    fn explicit_hop_line() {
        let mut hop = HopRecord::timeout(3);
        hop.address = Some("10.1.0.2".parse().unwrap());
        hop.ttl_te = Some(247);
        hop.ttl_er = Some(253);
        hop.qttl = Some(1);
        hop.lse_stack.push(LabelStackEntry::new(19, 1, true));
        let h = AnnotatedHop {
            hop,
            annotation: Default::default(),
            name: Some("left.P1".into()),
        };
        assert_eq!(
            hop_line(&h),
            "  3  left.P1 (10.1.0.2)  <247,253> [frpla = 6][qttl = 1][uturn = 6]\
             [MPLS LSE | Label : 19 | LSE-TTL : 1]"
        );
    }
}
