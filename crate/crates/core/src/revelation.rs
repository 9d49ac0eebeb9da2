//! Direct and backward-recursive path revelation.

use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::engine::{Purpose, Session};
use crate::model::{Code, HopRecord, ProbeCounts, RevealMethod, RevealedHop, RevelationState};

/// Bound on backward-recursive iterations per tunnel.
pub const MAX_ITERATIONS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevelationResult {
    pub state: RevelationState,
    pub revealed: Vec<RevealedHop>,
    pub probes_spent: ProbeCounts,
}

/// The /30 partner (when the address is a usable /30 host) and the /31 partner.
pub fn buddy_candidates(address: Ipv4Addr) -> (Option<Ipv4Addr>, Ipv4Addr) {
    let x = u32::from(address);
    let v30 = match x & 3 {
        1 => Some(Ipv4Addr::from(x + 1)),
        2 => Some(Ipv4Addr::from(x - 1)),
        _ => None,
    };
    (v30, Ipv4Addr::from(x ^ 1))
}

/// Other end of the point-to-point link holding `address`. The /30 guess is
/// kept when the candidate answers a UDP probe, else the /31 guess.
pub fn buddy(address: Ipv4Addr, session: &mut Session<'_>) -> Option<Ipv4Addr> {
    let (v30, v31) = buddy_candidates(address);
    if let Some(c) = v30 {
        if session.udp_incoming_interface_probe(c).is_some() {
            return Some(c);
        }
    }
    session.udp_incoming_interface_probe(v31).map(|_| v31)
}

fn state_of(revealed: &[RevealedHop]) -> RevelationState {
    let dpr = revealed.iter().any(|r| r.method == RevealMethod::Dpr);
    let brpr = revealed.iter().any(|r| r.method == RevealMethod::Brpr);
    match (revealed.len(), dpr, brpr) {
        (0, _, _) => RevelationState::NothingToReveal,
        (_, true, true) => RevelationState::Mix,
        (_, true, false) => RevelationState::Dpr,
        (1, _, _) => RevelationState::OneHopLsp,
        _ => RevelationState::Brpr,
    }
}

/// Reveal the hidden interior between `ingress` and `egress`. `code` is the
/// firing code; `Code::None` means a brute-force attempt.
pub fn reveal_tunnel(
    ingress: &HopRecord,
    egress: &HopRecord,
    code: Code,
    session: &mut Session<'_>,
) -> RevelationResult {
    let before = session.counts;
    let (state, mut revealed) = match (ingress.address, egress.address) {
        (Some(i), Some(e)) => run(ingress, i, e, code, session),
        _ => (RevelationState::TargetNotReached, Vec::new()),
    };
    // Path order: ingress side first. Later steps sit closer to the ingress.
    revealed.sort_by_key(|r| std::cmp::Reverse(r.step));
    for r in revealed.iter_mut() {
        if let Some(a) = r.hop.address {
            r.hop.ttl_er = session.ping(a);
        }
    }
    let mut spent = session.counts;
    spent.original -= before.original;
    spent.revelation -= before.revelation;
    spent.ping -= before.ping;
    spent.buddy -= before.buddy;
    let charged = spent.revelation + spent.buddy;
    session.counts.attribute(state, charged);
    spent.revealed = 0;
    spent.no_revelation = 0;
    spent.target_not_reached = 0;
    spent.ing_not_found = 0;
    spent.attribute(state, charged);
    RevelationResult {
        state,
        revealed,
        probes_spent: spent,
    }
}

fn run(
    ingress: &HopRecord,
    ingress_addr: Ipv4Addr,
    egress_addr: Ipv4Addr,
    code: Code,
    session: &mut Session<'_>,
) -> (RevelationState, Vec<RevealedHop>) {
    let start = ingress.probe_ttl.saturating_sub(2).max(1);
    let route = session.trace_from(egress_addr, start, Purpose::Revelation);
    let Some(reached) = route.reached else {
        return (RevelationState::TargetNotReached, Vec::new());
    };
    let Some(ing_pos) = route
        .hops
        .iter()
        .position(|h| h.address == Some(ingress_addr))
    else {
        return (RevelationState::IngNotFound, Vec::new());
    };
    let next_ttl = route.hops[ing_pos].probe_ttl.saturating_add(1);
    let between: Vec<HopRecord> = route.hops[ing_pos + 1..]
        .iter()
        .filter(|h| h.address.is_some() && h.address != Some(egress_addr))
        .cloned()
        .collect();
    if between.len() >= 2 {
        let revealed = between
            .into_iter()
            .map(|hop| RevealedHop {
                hop,
                step: 0,
                buddy_used: false,
                method: RevealMethod::Dpr,
            })
            .collect();
        return (RevelationState::Dpr, revealed);
    }

    let buddy_allowed = code != Code::LseTtl;
    let mut revealed: Vec<RevealedHop> = Vec::new();
    let mut target = egress_addr;
    let mut buddy_bit = false;
    let mut step = 0u32;
    let mut current = Some(between.into_iter().next().unwrap_or(reached));

    for _ in 0..MAX_ITERATIONS {
        let Some(cand) = current.take() else { break };
        let Some(addr) = cand.address else { break };
        if addr == target {
            if !buddy_allowed || buddy_bit {
                break;
            }
            let Some(b) = buddy(target, session) else {
                break;
            };
            target = b;
            buddy_bit = true;
            if revealed.is_empty() {
                step += 1;
            }
        } else if addr == ingress_addr || revealed.iter().any(|r| r.address() == Some(addr)) {
            break;
        } else {
            revealed.push(RevealedHop {
                hop: cand,
                step,
                buddy_used: buddy_bit,
                method: RevealMethod::Brpr,
            });
            target = addr;
            buddy_bit = false;
            step += 1;
        }

        let purpose = if buddy_bit {
            Purpose::Buddy
        } else {
            Purpose::Revelation
        };
        let seg = session.trace_from(target, next_ttl, purpose);
        let Some(reached) = seg.reached else { break };
        let inner: Vec<HopRecord> = seg
            .hops
            .into_iter()
            .filter(|h| h.address.is_some())
            .collect();
        if inner.len() >= 2 {
            for hop in inner {
                let a = hop.address;
                if a == Some(ingress_addr) || revealed.iter().any(|r| r.address() == a) {
                    continue;
                }
                revealed.push(RevealedHop {
                    hop,
                    step,
                    buddy_used: false,
                    method: RevealMethod::Dpr,
                });
            }
            break;
        }
        current = Some(inner.into_iter().next().unwrap_or(reached));
    }
    (state_of(&revealed), revealed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buddy_arithmetic() {
        let a = |s: &str| s.parse::<Ipv4Addr>().unwrap();
        assert_eq!(buddy_candidates(a("10.4.0.2")).0, Some(a("10.4.0.1")));
        assert_eq!(buddy_candidates(a("10.4.0.1")).0, Some(a("10.4.0.2")));
        assert_eq!(buddy_candidates(a("192.0.2.7")).0, None);
        assert_eq!(buddy_candidates(a("192.0.2.6")).1, a("192.0.2.7"));
    }
}
