//! Indicators (visible evidence on a single hop) and triggers (TTL arithmetic
//! hinting at a hidden tunnel that is worth revealing).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fingerprint::{path_len, signature};
use crate::model::{Code, HopRecord, RouterSignature, Thresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorOutcome {
    pub code: Code,
    pub uturn_value: Option<i32>,
    pub lse_ttl_quoted: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerOutcome {
    pub code: Code,
    /// FRPLA or RTLA value that fired; for DUP_IP, the FRPLA of the duplicated hop.
    pub value: i32,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("position {position} outside LSP of length {lsp_length}")]
pub struct PositionError {
    pub lsp_length: u32,
    pub position: u32,
}

/// Raw TTL arithmetic for one hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HopMetrics {
    pub frpla: Option<i32>,
    pub rtla: Option<i32>,
    pub signature: Option<RouterSignature>,
}

impl HopMetrics {
    pub fn of(hop: &HopRecord) -> Self {
        let frpla = hop.ttl_te.map(|te| path_len(te) - i32::from(hop.probe_ttl));
        let (rtla, signature) = match (hop.ttl_te, hop.ttl_er) {
            (Some(te), Some(er)) => (Some(path_len(te) - path_len(er)), Some(signature(te, er))),
            _ => (None, None),
        };
        Self {
            frpla,
            rtla,
            signature,
        }
    }

    /// UTURN and RTLA are the same difference; the name depends on the brand.
    pub fn uturn(&self) -> Option<i32> {
        self.rtla
    }

    pub fn is_junos(&self) -> bool {
        self.signature.is_some_and(|s| s.is_junos())
    }
}

pub fn uturn_expected(lsp_length: u32, position: u32) -> Result<u32, PositionError> {
    if position == 0 || position > lsp_length {
        return Err(PositionError {
            lsp_length,
            position,
        });
    }
    Ok(2 * (lsp_length - position + 1))
}

pub fn check_indicators(hop: Option<&HopRecord>, th: &Thresholds) -> IndicatorOutcome {
    let none = IndicatorOutcome {
        code: Code::None,
        uturn_value: None,
        lse_ttl_quoted: None,
    };
    let Some(hop) = hop else { return none };
    if hop.address.is_none() {
        return none;
    }
    let metrics = HopMetrics::of(hop);
    let mut out = IndicatorOutcome {
        uturn_value: metrics.uturn(),
        ..none
    };
    if let Some(top) = hop.top_lse() {
        out.lse_ttl_quoted = Some(top.lse_ttl);
        out.code = if th.t_lse_ttl < top.lse_ttl && top.lse_ttl < 255 {
            Code::LseTtl
        } else {
            Code::Lse
        };
        return out;
    }
    if hop.qttl.is_some_and(|q| q > 1) {
        out.code = Code::Qttl;
        return out;
    }
    if let Some(u) = metrics.uturn() {
        if u.unsigned_abs() > u32::from(th.t_uturn) && !metrics.is_junos() {
            out.code = Code::Uturn;
        }
    }
    out
}

pub fn check_triggers(
    prev: Option<&HopRecord>,
    cur: Option<&HopRecord>,
    next: Option<&HopRecord>,
    th: &Thresholds,
) -> Option<TriggerOutcome> {
    let (prev, cur) = (prev?, cur?);
    let cur_addr = cur.address?;
    let prev_addr = prev.address?;
    if prev_addr == cur_addr {
        return None;
    }
    let m = HopMetrics::of(cur);
    if next.and_then(|n| n.address) == Some(cur_addr) {
        return Some(TriggerOutcome {
            code: Code::DupIp,
            value: m.frpla.unwrap_or(0),
        });
    }
    if m.is_junos() {
        if let Some(rtla) = m.rtla {
            if rtla >= i32::from(th.t_rtla) {
                return Some(TriggerOutcome {
                    code: Code::Rtla,
                    value: rtla,
                });
            }
        }
    }
    match m.frpla {
        Some(f) if f >= i32::from(th.t_frpla) => Some(TriggerOutcome {
            code: Code::Frpla,
            value: f,
        }),
        _ => None,
    }
}

/// Tunnel length implied by a firing code.
pub fn length_estimate(code: Code, hop: &HopRecord, trigger_value: Option<i32>) -> Option<u32> {
    match code {
        Code::LseTtl => hop.top_lse().map(|e| 255 - u32::from(e.lse_ttl)),
        Code::Frpla | Code::Rtla | Code::DupIp => trigger_value.map(|v| v.max(0) as u32),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LabelStackEntry;
    use std::net::Ipv4Addr;

    fn hop(ttl: u8, addr: [u8; 4], te: u8, er: Option<u8>) -> HopRecord {
        HopRecord {
            address: Some(Ipv4Addr::from(addr)),
            ttl_te: Some(te),
            ttl_er: er,
            qttl: Some(1),
            ..HopRecord::timeout(ttl)
        }
    }

    #[test]
    fn explicit_hop_is_lse() {
        let mut h = hop(3, [10, 1, 0, 2], 247, Some(253));
        h.lse_stack.push(LabelStackEntry::new(19, 1, true));
        let out = check_indicators(Some(&h), &Thresholds::default());
        assert_eq!(out.code, Code::Lse);
        assert_eq!(out.uturn_value, Some(6));
    }

    #[test]
    fn opaque_lse_ttl() {
        let mut h = hop(3, [10, 4, 0, 2], 250, Some(250));
        h.lse_stack.push(LabelStackEntry::new(16, 252, true));
        let out = check_indicators(Some(&h), &Thresholds::default());
        assert_eq!(out.code, Code::LseTtl);
        assert_eq!(length_estimate(out.code, &h, None), Some(3));
    }

    #[test]
    fn qttl_and_uturn() {
        let mut h = hop(7, [192, 168, 4, 2], 250, Some(250));
        h.qttl = Some(2);
        assert_eq!(
            check_indicators(Some(&h), &Thresholds::default()).code,
            Code::Qttl
        );
        let h = hop(3, [10, 1, 0, 2], 247, Some(253));
        assert_eq!(
            check_indicators(Some(&h), &Thresholds::default()).code,
            Code::Uturn
        );
        // JunOS differences are left to the RTLA trigger.
        let h = hop(3, [192, 168, 1, 14], 250, Some(62));
        assert_eq!(
            check_indicators(Some(&h), &Thresholds::default()).code,
            Code::None
        );
    }

    #[test]
    fn triggers() {
        let th = Thresholds::default();
        let prev = hop(2, [192, 168, 8, 2], 254, Some(254));
        let cur = hop(3, [192, 168, 2, 2], 252, Some(252));
        let next = hop(4, [192, 168, 2, 2], 252, Some(252));
        assert_eq!(
            check_triggers(Some(&prev), Some(&cur), Some(&next), &th).map(|t| t.code),
            Some(Code::DupIp)
        );
        let cur = hop(3, [192, 168, 1, 14], 250, Some(62));
        let t = check_triggers(Some(&prev), Some(&cur), None, &th).unwrap();
        assert_eq!((t.code, t.value), (Code::Rtla, 3));
        let cur = hop(3, [10, 4, 0, 2], 250, Some(250));
        let t = check_triggers(Some(&prev), Some(&cur), None, &th).unwrap();
        assert_eq!((t.code, t.value), (Code::Frpla, 3));
        let cur = hop(5, [192, 168, 4, 2], 250, Some(250));
        assert_eq!(check_triggers(Some(&prev), Some(&cur), None, &th), None);
        assert_eq!(check_triggers(None, Some(&cur), None, &th), None);
        assert_eq!(check_triggers(Some(&cur), Some(&cur), None, &th), None);
    }

    #[test]
    fn eq_one() {
        assert_eq!(uturn_expected(3, 1), Ok(6));
        assert_eq!(uturn_expected(3, 3), Ok(2));
        assert_eq!(uturn_expected(1, 1), Ok(2));
        assert!(uturn_expected(3, 4).is_err());
        assert!(uturn_expected(3, 0).is_err());
    }
}
