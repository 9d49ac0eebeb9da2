use std::collections::BTreeSet;
use std::net::Ipv4Addr;

use proptest::prelude::*;

use tnt::classifier::{check_indicators, check_triggers};
use tnt::engine::{trace_naughty_tunnel, EngineConfig};
use tnt::fingerprint::{infer_initial_ttl, path_len};
use tnt::model::{
    AnnotatedTrace, Code, HopRecord, LabelStackEntry, ReplyKind, Thresholds, MAX_LABEL,
};
use tnt::report::calibrate::{ground_truth, score};
use tnt::report::{dump_record, parse_record, TraceRecord};
use tnt::revelation::buddy_candidates;
use tnt::sim::gen::ChainSpec;
use tnt::sim::{self, with_return_noise, Os, SimProber, Topology};

fn os() -> impl Strategy<Value = Os> {
    prop_oneof![
        Just(Os::CiscoIos124),
        Just(Os::CiscoIos152),
        Just(Os::JunosOlive),
        Just(Os::JunosVmx),
    ]
}

fn chain() -> impl Strategy<Value = ChainSpec> {
    (os(), 1..6usize, 0..5u8, any::<bool>(), any::<bool>()).prop_map(|(os, n, kind, uhp, tun)| {
        let mut s = match kind {
            0 => ChainSpec::plain(os, n),
            1 => ChainSpec::invisible(os, n),
            2 => ChainSpec::explicit(os, n),
            3 => ChainSpec::implicit(os, n),
            _ => ChainSpec::opaque(os, n),
        };
        if uhp && s.mpls {
            s = s.uhp();
        }
        s.icmp_tunneling = tun && os == Os::JunosVmx && s.mpls;
        s
    })
}

/// A generated chain, optionally with return-path noise.
fn topology() -> impl Strategy<Value = Topology> {
    (chain(), proptest::option::of(any::<u64>())).prop_map(|(spec, seed)| {
        let t = spec.build().expect("generated chains are valid");
        match seed {
            Some(s) => with_return_noise(&t, s, 0.3, 3),
            None => t,
        }
    })
}

fn run(topo: &Topology, brute_force: bool) -> (AnnotatedTrace, u64) {
    let mut cfg = topo.engine_config(EngineConfig::default());
    cfg.brute_force = brute_force;
    let mut p = SimProber::new(topo);
    let t = trace_naughty_tunnel(topo.target, cfg, &mut p);
    (t, p.sent)
}

fn revealed(t: &AnnotatedTrace) -> BTreeSet<Ipv4Addr> {
    t.hops
        .iter()
        .flat_map(|h| &h.annotation.revealed)
        .filter_map(|r| r.address())
        .collect()
}

fn hop() -> impl Strategy<Value = HopRecord> {
    (
        1..40u8,
        any::<u32>(),
        proptest::option::of(1..=255u8),
        proptest::option::of(1..=255u8),
        proptest::option::of(1..=255u8),
        proptest::collection::vec((0..=MAX_LABEL, any::<u8>()), 0..3),
    )
        .prop_map(|(ttl, a, te, er, q, lse)| HopRecord {
            probe_ttl: ttl,
            address: Some(Ipv4Addr::from(a)),
            reply: Some(ReplyKind::TimeExceeded),
            ttl_te: te,
            ttl_er: er,
            qttl: q,
            lse_stack: lse
                .iter()
                .enumerate()
                .map(|(i, &(l, t))| LabelStackEntry::new(l, t, i + 1 == lse.len()))
                .collect(),
            rtt: None,
        })
}

proptest! {
    #[test]
    fn path_len_shrinks_as_received_ttl_grows(
        (a, b) in prop_oneof![Just((1u8, 64u8)), Just((65, 128)), Just((129, 255))]
            .prop_flat_map(|(lo, hi)| (lo..hi, Just(hi)))
            .prop_flat_map(|(a, hi)| (Just(a), a + 1..=hi)),
    ) {
        prop_assert_eq!(infer_initial_ttl(a), infer_initial_ttl(b));
        prop_assert!(path_len(a) > path_len(b));
        prop_assert!(path_len(b) >= 1);
        prop_assert_eq!(path_len(infer_initial_ttl(b)), 1);
    }

    #[test]
    fn buddy_is_symmetric(x in any::<u32>()) {
        let a = Ipv4Addr::from(x);
        let (v30, v31) = buddy_candidates(a);
        prop_assert_eq!(buddy_candidates(v31).1, a);
        if let Some(b) = v30 {
            prop_assert_eq!(buddy_candidates(b).0, Some(a));
        }
    }

    #[test]
    fn lse_bits_round_trip(label in 0..=MAX_LABEL, tc in 0..8u8, s in any::<bool>(), ttl in any::<u8>()) {
        let e = LabelStackEntry { label, traffic_class: tc, bottom_of_stack: s, lse_ttl: ttl };
        prop_assert_eq!(LabelStackEntry::from_bits(e.to_bits()), e);
    }

    #[test]
    fn indicator_priority(h in hop()) {
        let code = check_indicators(Some(&h), &Thresholds::default()).code;
        if !h.lse_stack.is_empty() {
            prop_assert!(matches!(code, Code::Lse | Code::LseTtl));
        } else if h.qttl.is_some_and(|q| q > 1) {
            prop_assert_eq!(code, Code::Qttl);
        } else {
            prop_assert!(matches!(code, Code::None | Code::Uturn));
        }
    }

    #[test]
    fn duplicate_address_always_triggers(prev in hop(), cur in hop(), t_frpla in any::<u8>(), t_rtla in any::<u8>()) {
        prop_assume!(prev.address != cur.address);
        let th = Thresholds { t_frpla, t_rtla, ..Thresholds::default() };
        let out = check_triggers(Some(&prev), Some(&cur), Some(&cur.clone()), &th);
        prop_assert_eq!(out.map(|o| o.code), Some(Code::DupIp));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn simulation_is_deterministic(spec in chain(), seed in any::<u64>()) {
        let a = with_return_noise(&spec.build().unwrap(), seed, 0.3, 3);
        let b = with_return_noise(&spec.build().unwrap(), seed, 0.3, 3);
        prop_assert_eq!(sim::run(&a), sim::run(&b));
    }

    #[test]
    fn records_round_trip(topo in topology()) {
        let rec = TraceRecord::new(sim::run(&topo), Some(topo.name.clone()));
        prop_assert_eq!(parse_record(&dump_record(&rec)).unwrap(), rec);
    }

    #[test]
    fn brute_force_reveals_at_least_as_much(topo in topology()) {
        let (triggered, _) = run(&topo, false);
        let (brute, _) = run(&topo, true);
        let (t, b) = (revealed(&triggered), revealed(&brute));
        prop_assert!(t.is_subset(&b), "trigger-only {:?}", t.difference(&b).collect::<Vec<_>>());
    }

    #[test]
    fn probe_accounting_balances(topo in topology(), brute_force in any::<bool>()) {
        let (t, sent) = run(&topo, brute_force);
        let c = t.probe_counts;
        prop_assert_eq!(sent, c.total());
        prop_assert_eq!(c.revelation + c.buddy, c.outcome_total());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fpr_never_rises_with_t_frpla(
        specs in proptest::collection::vec(chain(), 1..5),
        seed in any::<u64>(),
        t_rtla in 0..=4u8,
    ) {
        let base = EngineConfig::default();
        let suite: Vec<_> = specs
            .iter()
            .enumerate()
            .map(|(i, s)| with_return_noise(&s.build().unwrap(), seed ^ i as u64, 0.3, 3))
            .map(|t| { let g = ground_truth(&t, base); (t, g) })
            .collect();
        let fpr: Vec<_> = (0..=4).map(|f| score(&suite, base, t_rtla, f).fpr).collect();
        for w in fpr.windows(2) {
            prop_assert!(w[1] <= w[0], "FPR by t_frpla: {:?}", fpr);
        }
    }
}
