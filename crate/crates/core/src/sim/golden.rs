//! Expected transcripts for the built-in scenarios, and the checker that
//! compares a trace against them.
//!
//! A golden hop is strict about its evidence: a missing `lse` means an empty
//! stack, a missing `code` means `NONE`, a missing `revealed` means nothing
//! was revealed. TTL-derived fields (`te`, `er`, `qttl`, `frpla`, `uturn`,
//! `rtla`) are only checked when present.

use std::net::Ipv4Addr;
use std::path::PathBuf;

use serde::Deserialize;

use crate::classifier::HopMetrics;
use crate::model::{AnnotatedTrace, RevelationState};
use crate::report::stats::tunnels;
use crate::report::text::rtla_pair;
use crate::sim::{builtin, run};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Golden {
    pub scenario: String,
    /// Distinct tunnel classes in the trace, sorted.
    #[serde(default)]
    pub classes: Vec<String>,
    pub hops: Vec<GoldenHop>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenHop {
    pub ttl: u8,
    /// `"*"` for a timeout.
    pub addr: String,
    pub te: Option<u8>,
    pub er: Option<u8>,
    pub qttl: Option<u8>,
    pub frpla: Option<i32>,
    pub uturn: Option<i32>,
    pub rtla: Option<[i32; 2]>,
    /// `[label, lse_ttl]`, top of stack first.
    #[serde(default)]
    pub lse: Vec<[u32; 2]>,
    #[serde(default = "none_code")]
    pub code: String,
    #[serde(default)]
    pub state: RevelationState,
    pub length: Option<u32>,
    #[serde(default)]
    pub revealed: Vec<GoldenRevealed>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenRevealed {
    pub addr: Ipv4Addr,
    pub te: u8,
    pub er: u8,
    pub step: u32,
    #[serde(default)]
    pub buddy: bool,
}

fn none_code() -> String {
    "NONE".into()
}

pub fn parse(text: &str) -> Result<Golden, toml::de::Error> {
    toml::from_str(text)
}

/// Where the golden files of the built-in scenarios live in the source tree.
pub fn golden_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/golden"))
}

pub fn load(scenario: &str) -> Result<Golden, String> {
    let path = golden_dir().join(format!("{scenario}.toml"));
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Simulate a built-in scenario and compare it against its golden file.
pub fn check(scenario: &str) -> Result<Vec<String>, String> {
    let golden = load(scenario)?;
    let topo = builtin(scenario).map_err(|e| format!("{scenario}: {e}"))?;
    Ok(compare(&golden, &run(&topo)))
}

/// Every difference between `golden` and `trace`, as readable lines.
/// Empty means the trace matches.
pub fn compare(golden: &Golden, trace: &AnnotatedTrace) -> Vec<String> {
    let mut diffs = Vec::new();
    let mut diff = |ttl: u8, what: &str, want: String, got: String| {
        if want != got {
            diffs.push(format!("hop {ttl}: {what}: expected {want}, got {got}"));
        }
    };
    if golden.hops.len() != trace.hops.len() {
        diff(
            0,
            "hop count",
            golden.hops.len().to_string(),
            trace.hops.len().to_string(),
        );
    }
    for (g, h) in golden.hops.iter().zip(&trace.hops) {
        let t = g.ttl;
        let hop = &h.hop;
        let m = HopMetrics::of(hop);
        let a = &h.annotation;
        diff(t, "ttl", t.to_string(), hop.probe_ttl.to_string());
        let addr = hop.address.map_or_else(|| "*".into(), |a| a.to_string());
        diff(t, "addr", g.addr.clone(), addr);
        let opt = |want: Option<u8>, got: Option<u8>| (want.map(|w| w.to_string()), got);
        for (name, (want, got)) in [
            ("te", opt(g.te, hop.ttl_te)),
            ("er", opt(g.er, hop.ttl_er)),
            ("qttl", opt(g.qttl, hop.qttl)),
        ] {
            if let Some(w) = want {
                diff(t, name, w, got.map_or("-".into(), |v| v.to_string()));
            }
        }
        if let Some(w) = g.frpla {
            diff(t, "frpla", w.to_string(), m.frpla.unwrap_or(0).to_string());
        }
        if let Some(w) = g.uturn {
            diff(
                t,
                "uturn",
                w.to_string(),
                m.uturn().unwrap_or(0).to_string(),
            );
        }
        if let Some(w) = g.rtla {
            let (x, y) = rtla_pair(h);
            diff(
                t,
                "rtla",
                format!("{}({})", w[0], w[1]),
                format!("{x}({y})"),
            );
        }
        let lse: Vec<[u32; 2]> = hop
            .lse_stack
            .iter()
            .map(|e| [e.label, u32::from(e.lse_ttl)])
            .collect();
        diff(t, "lse", format!("{:?}", g.lse), format!("{lse:?}"));
        diff(t, "code", g.code.clone(), a.code.label().to_string());
        diff(
            t,
            "state",
            format!("{:?}", g.state),
            format!("{:?}", a.state),
        );
        if let Some(w) = g.length {
            diff(
                t,
                "length",
                w.to_string(),
                a.length_estimate.map_or("-".into(), |v| v.to_string()),
            );
        }
        let want: Vec<String> = g
            .revealed
            .iter()
            .map(|r| format!("{} <{},{}> s{} b{}", r.addr, r.te, r.er, r.step, r.buddy))
            .collect();
        let got: Vec<String> = a
            .revealed
            .iter()
            .map(|r| {
                format!(
                    "{} <{},{}> s{} b{}",
                    r.hop.address.map_or("*".into(), |a| a.to_string()),
                    r.hop.ttl_te.map_or("*".into(), |v| v.to_string()),
                    r.hop.ttl_er.map_or("*".into(), |v| v.to_string()),
                    r.step,
                    r.buddy_used
                )
            })
            .collect();
        diff(t, "revealed", want.join(", "), got.join(", "));
    }
    let mut classes: Vec<&str> = tunnels(trace).iter().map(|o| o.class.name()).collect();
    classes.sort_unstable();
    classes.dedup();
    diff(0, "classes", golden.classes.join(","), classes.join(","));
    diffs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_strict() {
        let g = parse(
            r#"
            scenario = "x"
            [[hops]]
            ttl = 1
            addr = "10.0.0.1"
            "#,
        )
        .unwrap();
        let h = &g.hops[0];
        assert_eq!(h.code, "NONE");
        assert_eq!(h.state, RevelationState::NotAttempted);
        assert!(h.lse.is_empty() && h.revealed.is_empty());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(parse("scenario = \"x\"\nhops = []\nbogus = 1\n").is_err());
    }
}
