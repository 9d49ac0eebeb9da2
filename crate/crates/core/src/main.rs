use std::io::{BufRead, BufReader, Write};
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tnt::engine::live::LiveProber;
use tnt::engine::{trace_naughty_tunnel, EngineConfig, Prober};
use tnt::model::AnnotatedTrace;
use tnt::report::calibrate::{calibrate, roc_csv};
use tnt::report::records::{read_records, write_records, TraceRecord};
use tnt::report::{classify_stats, dump_text};
use tnt::sim::{self, SimProber, Topology};

#[derive(Parser)]
#[command(name = "tnt", version, about = "Traceroute that reveals MPLS tunnels")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Trace one target.
    Trace {
        target: Ipv4Addr,
        #[arg(long, value_enum, default_value_t = Backend::Live)]
        backend: Backend,
        /// Scenario file or built-in name, for the sim backend.
        #[arg(long)]
        topology: Option<String>,
        #[command(flatten)]
        opts: EngineOpts,
    },
    /// Trace the target of a scenario through the simulator.
    Simulate {
        /// Built-in scenario name or scenario file.
        #[arg(long, required_unless_present = "list")]
        scenario: Option<String>,
        /// List built-in scenarios and exit.
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        opts: EngineOpts,
    },
    /// Trace every address listed in a file (one per line, `#` comments).
    Campaign {
        #[arg(long)]
        targets: PathBuf,
        #[arg(long, value_enum, default_value_t = Backend::Live)]
        backend: Backend,
        #[arg(long)]
        topology: Option<String>,
        #[command(flatten)]
        opts: EngineOpts,
    },
    /// ROC sweep of (t_rtla, t_frpla) against brute force, as CSV.
    Calibrate {
        /// Directory of scenario files, or `clean` for the generated suite.
        #[arg(long)]
        suite: String,
        /// Inclusive range, e.g. `0..4`.
        #[arg(long, default_value = "0..4", value_parser = parse_grid)]
        grid: (u8, u8),
        /// Seed for return-path noise; no noise when absent.
        #[arg(long)]
        noise_seed: Option<u64>,
        #[arg(long, default_value_t = 0.3)]
        noise_fraction: f64,
        #[arg(long, default_value_t = 3)]
        noise_max: i8,
    },
    /// Summarize a records file.
    Stats { records: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backend {
    Live,
    Sim,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Records,
}

#[derive(Args)]
struct EngineOpts {
    #[arg(long)]
    t_frpla: Option<u8>,
    #[arg(long)]
    t_rtla: Option<u8>,
    #[arg(long)]
    t_lse_ttl: Option<u8>,
    #[arg(long)]
    t_uturn: Option<u8>,
    #[arg(long)]
    brute_force: bool,
    #[arg(long)]
    starting_ttl: Option<u8>,
    #[arg(long)]
    gap_limit: Option<u8>,
    #[arg(long)]
    max_ttl: Option<u8>,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    output: Output,
}

impl EngineOpts {
    /// Command-line flags win over scenario overrides, which win over defaults.
    fn config(&self, topo: Option<&Topology>) -> EngineConfig {
        let mut c = EngineConfig::default();
        if let Some(t) = topo {
            c = t.engine_config(c);
        }
        let th = &mut c.thresholds;
        th.t_frpla = self.t_frpla.unwrap_or(th.t_frpla);
        th.t_rtla = self.t_rtla.unwrap_or(th.t_rtla);
        th.t_lse_ttl = self.t_lse_ttl.unwrap_or(th.t_lse_ttl);
        th.t_uturn = self.t_uturn.unwrap_or(th.t_uturn);
        c.brute_force |= self.brute_force;
        c.starting_ttl = self.starting_ttl.unwrap_or(c.starting_ttl);
        c.gap_limit = self.gap_limit.unwrap_or(c.gap_limit);
        c.max_ttl = self.max_ttl.unwrap_or(c.max_ttl);
        c
    }
}

fn parse_grid(s: &str) -> Result<(u8, u8), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
    let lo: u8 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: u8 = b
        .trim()
        .trim_start_matches('=')
        .parse()
        .map_err(|e| format!("{e}"))?;
    if lo > hi {
        return Err(format!("empty range {s}"));
    }
    Ok((lo, hi))
}

enum Failure {
    Usage(String),
    Probe(String),
    Scenario(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Probe(_) => 2,
            Failure::Scenario(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Probe(m) | Failure::Scenario(m) => m,
        }
    }
}

fn load_topology(name: &str) -> Result<Topology, Failure> {
    sim::load(name).map_err(|e| Failure::Scenario(format!("{name}: {e}")))
}

fn emit(
    out: &mut impl Write,
    trace: &AnnotatedTrace,
    scenario: Option<&str>,
    mode: Output,
) -> Result<(), Failure> {
    let res = match mode {
        Output::Text => write!(out, "{}", dump_text(trace)),
        Output::Records => write_records(
            &mut *out,
            [&TraceRecord::new(
                trace.clone(),
                scenario.map(str::to_string),
            )],
        ),
    };
    res.map_err(|e| Failure::Probe(format!("write failure: {e}")))
}

fn check(trace: &AnnotatedTrace) -> Result<(), Failure> {
    if trace.truncated {
        return Err(Failure::Probe(trace.diagnostics.join("; ")));
    }
    Ok(())
}

fn run_one(
    target: Ipv4Addr,
    config: EngineConfig,
    prober: &mut dyn Prober,
    topo: Option<&Topology>,
) -> AnnotatedTrace {
    let mut t = trace_naughty_tunnel(target, config, prober);
    if let Some(topo) = topo {
        sim::name_hops(&mut t, topo);
    }
    t
}

fn read_targets(path: &Path) -> Result<Vec<Ipv4Addr>, Failure> {
    let f = std::fs::File::open(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Failure::Usage(e.to_string()))?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let a = line.parse().map_err(|_| {
            Failure::Usage(format!(
                "{}:{}: not an IPv4 address: {line}",
                path.display(),
                i + 1
            ))
        })?;
        out.push(a);
    }
    Ok(out)
}

fn load_suite(suite: &str) -> Result<Vec<Topology>, Failure> {
    if suite == "clean" {
        return Ok(sim::gen::clean_suite());
    }
    let dir = Path::new(suite);
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Failure::Usage(format!("{suite}: {e}")))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .filter(|p| {
            !p.file_stem()
                .and_then(|s| s.to_str())
                .is_some_and(sim::catalog::is_base)
        })
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| load_topology(&p.to_string_lossy()))
        .collect()
}

fn run(cli: Cli) -> Result<(), Failure> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.cmd {
        Cmd::Trace {
            target,
            backend,
            topology,
            opts,
        } => {
            let trace = match backend {
                Backend::Sim => {
                    let name = topology
                        .ok_or_else(|| Failure::Usage("--backend sim needs --topology".into()))?;
                    let topo = load_topology(&name)?;
                    let cfg = opts.config(Some(&topo));
                    let mut p = SimProber::new(&topo);
                    run_one(target, cfg, &mut p, Some(&topo))
                }
                Backend::Live => {
                    let cfg = opts.config(None);
                    let mut p =
                        LiveProber::new(cfg.flow_id).map_err(|e| Failure::Probe(e.to_string()))?;
                    run_one(target, cfg, &mut p, None)
                }
            };
            emit(&mut out, &trace, None, opts.output)?;
            check(&trace)
        }
        Cmd::Simulate {
            scenario,
            list,
            opts,
        } => {
            if list {
                for n in sim::catalog::names() {
                    let _ = writeln!(out, "{n}");
                }
                return Ok(());
            }
            let name = scenario.unwrap_or_default();
            let topo = load_topology(&name)?;
            let cfg = opts.config(Some(&topo));
            let mut p = SimProber::new(&topo);
            let trace = run_one(topo.target, cfg, &mut p, Some(&topo));
            emit(&mut out, &trace, Some(&topo.name), opts.output)?;
            check(&trace)
        }
        Cmd::Campaign {
            targets,
            backend,
            topology,
            opts,
        } => {
            let targets = read_targets(&targets)?;
            let topo = match (backend, topology) {
                (Backend::Sim, Some(n)) => Some(load_topology(&n)?),
                (Backend::Sim, None) => {
                    return Err(Failure::Usage("--backend sim needs --topology".into()))
                }
                (Backend::Live, _) => None,
            };
            let cfg = opts.config(topo.as_ref());
            let mut live;
            let mut simp;
            let prober: &mut dyn Prober = match &topo {
                Some(t) => {
                    simp = SimProber::new(t);
                    &mut simp
                }
                None => {
                    live =
                        LiveProber::new(cfg.flow_id).map_err(|e| Failure::Probe(e.to_string()))?;
                    &mut live
                }
            };
            let mut traces = Vec::new();
            for t in targets {
                let trace = run_one(t, cfg, prober, topo.as_ref());
                emit(
                    &mut out,
                    &trace,
                    topo.as_ref().map(|t| t.name.as_str()),
                    opts.output,
                )?;
                traces.push(trace);
            }
            if opts.output == Output::Text {
                let _ = writeln!(out, "\n{}", classify_stats(&traces));
            }
            traces.iter().try_for_each(check)
        }
        Cmd::Calibrate {
            suite,
            grid,
            noise_seed,
            noise_fraction,
            noise_max,
        } => {
            let mut topos = load_suite(&suite)?;
            if let Some(seed) = noise_seed {
                topos = topos
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        sim::with_return_noise(
                            t,
                            seed.wrapping_add(i as u64),
                            noise_fraction,
                            noise_max,
                        )
                    })
                    .collect();
            }
            let points = calibrate(&topos, EngineConfig::default(), grid.0..=grid.1);
            let _ = write!(out, "{}", roc_csv(&points));
            Ok(())
        }
        Cmd::Stats { records } => {
            let f = std::fs::File::open(&records)
                .map_err(|e| Failure::Usage(format!("{}: {e}", records.display())))?;
            let recs = read_records(BufReader::new(f))
                .map_err(|e| Failure::Scenario(format!("{}: {e}", records.display())))?;
            let stats = classify_stats(recs.iter().map(|r| &r.trace));
            let _ = writeln!(out, "{stats}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("tnt: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
