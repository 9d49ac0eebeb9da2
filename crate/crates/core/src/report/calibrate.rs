//! Threshold calibration against a brute-force oracle.
//!
//! Brute force attempts a revelation between every pair of consecutive hops,
//! so it tells which hop pairs actually hide something. Each `(t_rtla, t_frpla)`
//! cell is then scored by what the triggers alone would have caught.

use std::collections::BTreeSet;
use std::net::Ipv4Addr;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::engine::{trace_naughty_tunnel, EngineConfig};
use crate::model::{AnnotatedTrace, Code, RevelationState, TriggerMark};
use crate::sim::{SimProber, Topology};

type Pair = (Ipv4Addr, Ipv4Addr);

/// Hop pairs of one path, split by what brute force found. Inconclusive pairs are dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub tunnels: BTreeSet<Pair>,
    pub plain: BTreeSet<Pair>,
}

fn pairs(trace: &AnnotatedTrace) -> impl Iterator<Item = (Pair, &crate::model::AnnotatedHop)> {
    trace.hops.windows(2).filter_map(|w| {
        let (a, b) = (w[0].hop.address?, w[1].hop.address?);
        (a != b).then_some(((a, b), &w[1]))
    })
}

pub fn ground_truth(topo: &Topology, base: EngineConfig) -> GroundTruth {
    let mut cfg = topo.engine_config(base);
    cfg.brute_force = true;
    // Keep the TTL triggers out of it; only DUP_IP still fires on its own.
    cfg.thresholds.t_frpla = u8::MAX;
    cfg.thresholds.t_rtla = u8::MAX;
    let mut prober = SimProber::new(topo);
    let trace = trace_naughty_tunnel(topo.target, cfg, &mut prober);
    let mut g = GroundTruth::default();
    for (pair, h) in pairs(&trace) {
        let s = h.annotation.state;
        if s.is_revealed() {
            g.tunnels.insert(pair);
        } else if s == RevelationState::NothingToReveal {
            g.plain.insert(pair);
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub t_rtla: u8,
    pub t_frpla: u8,
    pub true_pos: u64,
    pub false_neg: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    /// `None` when the suite holds no tunnel.
    pub tpr: Option<f64>,
    /// `None` when the suite holds no plain link.
    pub fpr: Option<f64>,
}

fn ratio(n: u64, d: u64) -> Option<f64> {
    (d > 0).then(|| n as f64 / d as f64)
}

/// Score one threshold cell over the suite.
pub fn score(
    suite: &[(Topology, GroundTruth)],
    base: EngineConfig,
    t_rtla: u8,
    t_frpla: u8,
) -> RocPoint {
    let (mut tp, mut fp, mut tunnels, mut plain) = (0u64, 0u64, 0u64, 0u64);
    for (topo, truth) in suite {
        let mut cfg = topo.engine_config(base);
        cfg.brute_force = false;
        cfg.thresholds.t_rtla = t_rtla;
        cfg.thresholds.t_frpla = t_frpla;
        let mut prober = SimProber::new(topo);
        let trace = trace_naughty_tunnel(topo.target, cfg, &mut prober);
        tunnels += truth.tunnels.len() as u64;
        plain += truth.plain.len() as u64;
        for (pair, h) in pairs(&trace) {
            let a = &h.annotation;
            let fired = a.trigger == TriggerMark::Fired
                && matches!(a.code, Code::Frpla | Code::Rtla | Code::DupIp | Code::Uturn);
            if !fired {
                continue;
            }
            if truth.tunnels.contains(&pair) && a.state.is_revealed() {
                tp += 1;
            } else if truth.plain.contains(&pair) {
                fp += 1;
            }
        }
    }
    RocPoint {
        t_rtla,
        t_frpla,
        true_pos: tp,
        false_neg: tunnels - tp,
        false_pos: fp,
        true_neg: plain - fp,
        tpr: ratio(tp, tunnels),
        fpr: ratio(fp, plain),
    }
}

/// Full sweep over `grid × grid`, rows by `t_rtla`, then `t_frpla`.
pub fn calibrate(
    suite: &[Topology],
    base: EngineConfig,
    grid: RangeInclusive<u8>,
) -> Vec<RocPoint> {
    let judged: Vec<(Topology, GroundTruth)> = suite
        .iter()
        .map(|t| (t.clone(), ground_truth(t, base)))
        .collect();
    let mut out = Vec::new();
    for r in grid.clone() {
        for f in grid.clone() {
            out.push(score(&judged, base, r, f));
        }
    }
    out
}

pub fn roc_csv(points: &[RocPoint]) -> String {
    let opt = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:.4}"));
    let mut s = String::from("t_rtla,t_frpla,tp,fn,fp,tn,tpr,fpr\n");
    for p in points {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            p.t_rtla,
            p.t_frpla,
            p.true_pos,
            p.false_neg,
            p.false_pos,
            p.true_neg,
            opt(p.tpr),
            opt(p.fpr)
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::gen::{clean_suite, ChainSpec};
    use crate::sim::{with_return_noise, Os};

    fn judged(suite: &[Topology]) -> Vec<(Topology, GroundTruth)> {
        let base = EngineConfig::default();
        suite
            .iter()
            .map(|t| (t.clone(), ground_truth(t, base)))
            .collect()
    }

    #[test]
    fn clean_suite_default_cell_is_perfect() {
        let p = score(&judged(&clean_suite()), EngineConfig::default(), 1, 3);
        assert_eq!((p.tpr, p.fpr), (Some(1.0), Some(0.0)));
    }

    #[test]
    fn asymmetry_costs_false_positives_at_zero() {
        let noisy: Vec<Topology> = clean_suite()
            .iter()
            .enumerate()
            .map(|(i, t)| with_return_noise(t, 7 + i as u64, 0.3, 3))
            .collect();
        let j = judged(&noisy);
        let base = EngineConfig::default();
        let (zero, three) = (score(&j, base, 1, 0), score(&j, base, 1, 3));
        assert!(zero.fpr > three.fpr, "{:?} vs {:?}", zero.fpr, three.fpr);
    }

    #[test]
    fn unreachable_thresholds_fire_nothing() {
        // PHP only: DUP_IP ignores thresholds, so UHP chains would still fire.
        let suite: Vec<Topology> = [
            ChainSpec::invisible(Os::CiscoIos152, 3),
            ChainSpec::invisible(Os::JunosVmx, 2),
            ChainSpec::plain(Os::CiscoIos152, 3),
        ]
        .iter()
        .map(|s| s.build().unwrap())
        .collect();
        let p = score(&judged(&suite), EngineConfig::default(), u8::MAX, u8::MAX);
        assert_eq!((p.tpr, p.fpr), (Some(0.0), Some(0.0)));
    }

    #[test]
    fn no_tunnel_means_no_tpr() {
        let suite = [ChainSpec::plain(Os::JunosVmx, 3).build().unwrap()];
        let p = score(&judged(&suite), EngineConfig::default(), 1, 3);
        assert_eq!(p.tpr, None);
        assert_eq!(p.fpr, Some(0.0));
    }

    #[test]
    fn csv_has_one_row_per_cell() {
        let suite = [ChainSpec::invisible(Os::CiscoIos152, 3).build().unwrap()];
        let csv = roc_csv(&calibrate(&suite, EngineConfig::default(), 0..=2));
        assert_eq!(csv.lines().count(), 1 + 9);
        assert!(csv.starts_with("t_rtla,t_frpla,"));
    }
}
