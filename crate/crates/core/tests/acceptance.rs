//! Acceptance gate: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

use std::net::Ipv4Addr;
use std::time::{Duration, Instant};

use tnt::classifier::HopMetrics;
use tnt::engine::{trace_naughty_tunnel, EngineConfig};
use tnt::model::{AnnotatedTrace, Code};
use tnt::report::calibrate::{calibrate, ground_truth, score, RocPoint};
use tnt::report::text::rtla_pair;
use tnt::report::{dump_record, dump_text, parse_record, TraceRecord};
use tnt::sim::forward::pop_ttl;
use tnt::sim::gen::{clean_suite, ChainSpec};
use tnt::sim::{self, catalog, golden, ldp_twin, with_return_noise, Os, SimProber, Topology};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn addr(s: &str) -> Ipv4Addr {
    s.parse().expect("literal address")
}

fn build(spec: ChainSpec) -> Result<Topology, String> {
    spec.build().map_err(|e| format!("{}: {e}", spec.name()))
}

fn hop_at(trace: &AnnotatedTrace, a: Ipv4Addr) -> Option<&tnt::model::AnnotatedHop> {
    trace.hops.iter().find(|h| h.hop.address == Some(a))
}

fn golden_equivalence() -> Outcome {
    let start = Instant::now();
    let names: Vec<&str> = catalog::names().collect();
    for name in &names {
        let d = golden::check(name)?;
        ensure(d.is_empty(), || format!("{name}: {}", d.join("; ")))?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(5), || format!("took {took:?}"))?;
    ensure(names.len() >= 20, || {
        format!("only {} scenarios", names.len())
    })?;
    Ok(format!("{} scenarios in {took:.2?}", names.len()))
}

fn uturn_sweep() -> Outcome {
    let mut checked = 0;
    for (os, extra, tunneling) in [(Os::CiscoIos124, 0, false), (Os::JunosVmx, 1, true)] {
        for ll in 1..=8usize {
            let spec = ChainSpec {
                icmp_tunneling: tunneling,
                ..ChainSpec::implicit(os, ll)
            };
            let topo = build(spec)?;
            let trace = sim::run(&topo);
            for i in 1..=ll {
                let a = addr(&ChainSpec::lsr_address(i));
                let h =
                    hop_at(&trace, a).ok_or_else(|| format!("{}: LSR {i} missing", spec.name()))?;
                let got = HopMetrics::of(&h.hop).uturn();
                let want = 2 * (ll - i + 1) as i32 + extra;
                ensure(got == Some(want), || {
                    format!("{}: position {i}: uturn {got:?}, want {want}", spec.name())
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} positions"))
}

fn min_checks() -> Outcome {
    // A no-propagate tunnel of three LSRs leaves 252 in the LSE; the reply
    // under it starts at 64 on JunOS and 255 on Cisco.
    let junos = pop_ttl(Os::JunosVmx, false, 64, 252);
    let cisco = pop_ttl(Os::CiscoIos152, false, 255, 252);
    ensure(junos == 64, || format!("min(64, 252) gave {junos}"))?;
    ensure(cisco == 252, || format!("min(255, 252) gave {cisco}"))?;
    let spec = ChainSpec::invisible(Os::JunosVmx, 3);
    let trace = sim::run(&build(spec)?);
    let h =
        hop_at(&trace, addr(&spec.egress_address())).ok_or_else(|| "egress missing".to_string())?;
    let rtla = HopMetrics::of(&h.hop).rtla;
    ensure(rtla == Some(3), || {
        format!("RTLA at the egress is {rtla:?}")
    })?;
    ensure(h.annotation.code == Code::Rtla, || {
        format!("egress classified {}", h.annotation.code)
    })?;
    ensure(rtla_pair(h) == (3, 3), || {
        format!("rtla display {:?}", rtla_pair(h))
    })?;
    Ok("64, 252, RTLA 3".into())
}

fn opaque_law() -> Outcome {
    for ll in 2..=18u8 {
        let spec = ChainSpec::opaque(Os::CiscoIos152, ll as usize);
        let trace = sim::run(&build(spec)?);
        let h = hop_at(&trace, addr(&spec.egress_address()))
            .ok_or_else(|| format!("LL {ll}: egress missing"))?;
        let q = h.hop.top_lse().map(|e| e.lse_ttl);
        ensure(q == Some(255 - ll), || {
            format!("LL {ll}: quoted LSE-TTL {q:?}")
        })?;
        ensure(h.annotation.code == Code::LseTtl, || {
            format!("LL {ll}: classified {}", h.annotation.code)
        })?;
        let est = h.annotation.length_estimate;
        ensure(est == Some(u32::from(ll)), || {
            format!("LL {ll}: estimate {est:?}")
        })?;
        let q = q.unwrap_or(0);
        ensure((236..=254).contains(&q), || {
            format!("LL {ll}: {q} outside 236..=254")
        })?;
    }
    Ok("LL 2..=18".into())
}

fn cell(points: &[RocPoint], r: u8, f: u8) -> Result<&RocPoint, String> {
    points
        .iter()
        .find(|p| p.t_rtla == r && p.t_frpla == f)
        .ok_or_else(|| format!("no cell ({r},{f})"))
}

fn oracle() -> Outcome {
    let base = EngineConfig::default();
    let clean = clean_suite();
    let judged: Vec<_> = clean
        .iter()
        .map(|t| (t.clone(), ground_truth(t, base)))
        .collect();
    let at = score(&judged, base, 1, 3);
    ensure(at.tpr == Some(1.0) && at.fpr == Some(0.0), || {
        format!("clean (1,3): tpr {:?} fpr {:?}", at.tpr, at.fpr)
    })?;

    let noisy: Vec<Topology> = clean
        .iter()
        .enumerate()
        .map(|(i, t)| with_return_noise(t, 0x5eed + i as u64, 0.3, 3))
        .collect();
    let grid = calibrate(&noisy, base, 0..=4);
    for r in 0..=4 {
        for f in 0..4 {
            let (lo, hi) = (cell(&grid, r, f)?, cell(&grid, r, f + 1)?);
            ensure(hi.fpr <= lo.fpr, || {
                format!(
                    "FPR rises from ({r},{f}) {:?} to ({r},{}) {:?}",
                    lo.fpr,
                    f + 1,
                    hi.fpr
                )
            })?;
        }
    }
    let (good, loose) = (cell(&grid, 1, 3)?, cell(&grid, 0, 0)?);
    ensure(good.fpr <= loose.fpr, || {
        format!("FPR (1,3) {:?} above (0,0) {:?}", good.fpr, loose.fpr)
    })?;
    Ok(format!(
        "clean (1,3) tpr 1 fpr 0; noisy fpr (1,3) {:.3} vs (0,0) {:.3}",
        good.fpr.unwrap_or(0.0),
        loose.fpr.unwrap_or(0.0)
    ))
}

fn campaign_topologies() -> Result<Vec<Topology>, String> {
    let mut out: Vec<Topology> = catalog::names()
        .map(|n| sim::builtin(n).map_err(|e| format!("{n}: {e}")))
        .collect::<Result<_, _>>()?;
    out.extend(clean_suite());
    Ok(out)
}

fn accounting() -> Outcome {
    let mut runs = 0;
    for topo in campaign_topologies()? {
        for brute_force in [false, true] {
            let mut cfg = topo.engine_config(EngineConfig::default());
            cfg.brute_force = brute_force;
            let mut prober = SimProber::new(&topo);
            let t = trace_naughty_tunnel(topo.target, cfg, &mut prober);
            let c = t.probe_counts;
            ensure(prober.sent == c.total(), || {
                format!(
                    "{}: sent {} but counters sum to {}",
                    topo.name,
                    prober.sent,
                    c.total()
                )
            })?;
            ensure(c.revelation + c.buddy == c.outcome_total(), || {
                format!(
                    "{}: {} revelation probes, {} attributed",
                    topo.name,
                    c.revelation + c.buddy,
                    c.outcome_total()
                )
            })?;
            runs += 1;
        }
    }
    Ok(format!("{runs} runs"))
}

fn rsvp_twins() -> Outcome {
    let names: Vec<&str> = catalog::names().filter(|n| n.contains("rsvp")).collect();
    ensure(names.len() == 4, || {
        format!("{} RSVP scenarios", names.len())
    })?;
    for n in &names {
        let topo = sim::builtin(n).map_err(|e| e.to_string())?;
        let twin = ldp_twin(&topo);
        ensure(!topo.tunnels.is_empty() && twin.tunnels.is_empty(), || {
            format!("{n}: no RSVP tunnel to replace")
        })?;
        let (a, b) = (dump_text(&sim::run(&topo)), dump_text(&sim::run(&twin)));
        ensure(a == b, || format!("{n}: transcripts differ\n{a}\n{b}"))?;
    }
    Ok(names.join(", "))
}

fn round_trip() -> Outcome {
    let mut n = 0;
    for topo in campaign_topologies()? {
        let rec = TraceRecord::new(sim::run(&topo), Some(topo.name.clone()));
        let back = parse_record(&dump_record(&rec)).map_err(|e| format!("{}: {e}", topo.name))?;
        ensure(back == rec, || format!("{}: record changed", topo.name))?;
        n += 1;
    }
    Ok(format!("{n} traces"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("golden transcripts", golden_equivalence),
        ("uturn sweep", uturn_sweep),
        ("min operation and RTLA", min_checks),
        ("opaque length law", opaque_law),
        ("brute-force oracle and ROC", oracle),
        ("probe accounting", accounting),
        ("RSVP-TE and LDP twins", rsvp_twins),
        ("record round-trip", round_trip),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
