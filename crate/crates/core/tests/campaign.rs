use tnt::engine::EngineConfig;
use tnt::model::{Code, TriggerMark};
use tnt::report::{classify_stats, Technique, TunnelClass};
use tnt::sim::gen::ChainSpec;
use tnt::sim::{self, catalog, Os};

fn traces() -> Vec<tnt::AnnotatedTrace> {
    catalog::names()
        .map(|n| sim::run(&sim::builtin(n).unwrap()))
        .collect()
}

#[test]
fn duplicated_campaign_scales_linearly() {
    let once = traces();
    let twice: Vec<_> = once.iter().chain(&once).cloned().collect();
    let (a, b) = (classify_stats(&once), classify_stats(&twice));
    assert_eq!(b.traces, 2 * a.traces);
    for c in TunnelClass::ALL {
        for t in Technique::ALL {
            assert_eq!(b.count(c, t), 2 * a.count(c, t), "{c:?} {t:?}");
        }
    }
    assert_eq!(b.probes.total(), 2 * a.probes.total());
}

#[test]
fn merge_matches_one_pass() {
    let all = traces();
    let (left, right) = all.split_at(all.len() / 2);
    let mut merged = classify_stats(left);
    merged.merge(&classify_stats(right));
    assert_eq!(merged, classify_stats(&all));
}

#[test]
fn builtin_suite_plus_an_implicit_chain_covers_every_class() {
    // No built-in scenario is an implicit tunnel without qTTL help; a generated
    // chain without RFC 4950 fills that cell.
    let implicit = ChainSpec::implicit(Os::CiscoIos152, 3).build().unwrap();
    let mut all = traces();
    all.push(sim::run(&implicit));
    let s = classify_stats(&all);
    for c in TunnelClass::ALL {
        assert!(s.class_total(c) > 0, "{c:?}");
    }
    assert!(s.count(TunnelClass::InvisibleUhp, Technique::Mix) > 0);
    assert!(s.count(TunnelClass::InvisiblePhpRtla, Technique::OneHopLsp) > 0);
}

#[test]
fn quiet_candidate_still_shadows_the_next_hop() {
    // At the default t_frpla the Olive egress (FRPLA 1) does not fire, but
    // CE2 still inherits its excess and stays suppressed.
    let mut topo = sim::builtin("junos-olive-invisible-php").unwrap();
    topo.engine.t_frpla = None;
    assert_eq!(
        topo.engine_config(EngineConfig::default())
            .thresholds
            .t_frpla,
        3
    );
    let t = sim::run(&topo);
    let marks: Vec<_> = t
        .hops
        .iter()
        .map(|h| (h.annotation.code, h.annotation.trigger))
        .collect();
    assert_eq!(marks[2], (Code::None, TriggerMark::Quiet));
    assert_eq!(marks[3], (Code::None, TriggerMark::Suppressed));
    assert_eq!(marks[4].1, TriggerMark::Quiet);
}
