//! Command-line front end: lower-bound runs, simulations, offline
//! optima, potential verification and the bounded-diameter embedding,
//! all with deterministic CSV/JSON output.
//!
//! Exit codes: 0 all assertions passed, 2 an assertion or invariant
//! was violated (a violations CSV is written when `--out` is given),
//! 1 usage or configuration error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hkserver::harness::{
    make_algorithm, parse_hst_arg, parse_trace, phases_csv, random_requests, run_experiment,
    simulate, spread_start, steps_csv, summary_json, verify_csv, AdversaryName, AlgorithmName,
    ExperimentConfig, ExperimentReport,
};
use hkserver::potential::PotentialParams;
use hkserver::workfunction::opt_schedule;
use hkserver::{
    fmt_rat, parse_rat, Error, NodeId, PointLocation, Rat, Result, TreeFile, TreeMetric,
};

#[derive(Parser)]
#[command(
    name = "hkserver",
    about = "Exact (h,k)-server simulation laboratory on bounded-depth trees",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct TreeArgs {
    /// Tree as a JSON node list (see `embed` output for the format).
    #[arg(long, value_name = "FILE", conflicts_with = "hst")]
    tree: Option<PathBuf>,
    /// Tree as an HST shorthand `d:f1,f2,...:l1,l2,...`,
    /// e.g. `2:17,4:7/8,1/8`.
    #[arg(long, value_name = "SPEC")]
    hst: Option<String>,
}

impl TreeArgs {
    fn load(&self) -> Result<TreeMetric> {
        match (&self.tree, &self.hst) {
            (Some(path), None) => {
                let text = fs::read_to_string(path)?;
                let file: TreeFile = serde_json::from_str(&text)?;
                TreeMetric::from_file(&file)
            }
            (None, Some(spec)) => TreeMetric::from_hst(&parse_hst_arg(spec)?),
            _ => Err(Error::InvalidConfig(
                "pass exactly one of --tree or --hst".into(),
            )),
        }
    }

    fn is_empty(&self) -> bool {
        self.tree.is_none() && self.hst.is_none()
    }
}

#[derive(Args)]
struct OutArgs {
    /// Directory for CSV/JSON artifacts (created if missing); the
    /// summary always also goes to stdout.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Append a decimal rendering with this many digits next to every
    /// exact rational column.
    #[arg(long, value_name = "N")]
    decimal: Option<u32>,
    /// Toggle optional runtime invariant checks inside algorithms.
    #[arg(long, value_name = "on|off", default_value = "on", value_parser = parse_on_off)]
    assert: bool,
}

fn parse_on_off(s: &str) -> std::result::Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected on|off, got {other:?}")),
    }
}

#[derive(Args)]
struct TraceArgs {
    /// Request trace file: one leaf id per line.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Number of random requests when no trace file is given.
    #[arg(long, value_name = "N")]
    requests: Option<usize>,
    /// Seed for the random trace.
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
}

impl TraceArgs {
    fn load(&self, tree: &TreeMetric) -> Result<Vec<NodeId>> {
        match (&self.trace, self.requests) {
            (Some(path), None) => parse_trace(tree, &fs::read_to_string(path)?),
            (None, Some(n)) => Ok(random_requests(tree, n, self.seed)),
            _ => Err(Error::InvalidConfig(
                "pass exactly one of --trace FILE or --requests N".into(),
            )),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an online algorithm over a request trace.
    Simulate {
        #[command(flatten)]
        tree: TreeArgs,
        #[command(flatten)]
        trace: TraceArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Online algorithm: dc | aggressive | wfa.
        #[arg(long, value_name = "NAME", default_value = "dc")]
        algo: String,
        /// Number of online servers (start on the first k leaves).
        #[arg(long)]
        k: usize,
    },
    /// Slow-coverage lower bound: the DC-killer adversary.
    LbDc {
        #[command(flatten)]
        tree: TreeArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long)]
        h: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_name = "p/q", default_value = "1/8", value_parser = parse_rat_arg)]
        eps: Rat,
        #[arg(long, default_value_t = 10)]
        phases: usize,
    },
    /// Work-function-algorithm lower bound on the two-region tree.
    LbWfa {
        #[command(flatten)]
        out: OutArgs,
        #[arg(long)]
        h: usize,
        #[arg(long, value_name = "p/q", default_value = "1/32", value_parser = parse_rat_arg)]
        eps: Rat,
        /// Elementary-subtree diameter; defaults to ε².
        #[arg(long, value_name = "p/q", value_parser = parse_rat_arg)]
        eps_prime: Option<Rat>,
        #[arg(long, default_value_t = 4)]
        phases: usize,
    },
    /// General lower bound against a chosen online algorithm.
    LbGeneral {
        #[command(flatten)]
        tree: TreeArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Online algorithm: dc | aggressive | wfa.
        #[arg(long, value_name = "NAME", default_value = "dc")]
        algo: String,
        #[arg(long)]
        h: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_name = "p/q", default_value = "1/100", value_parser = parse_rat_arg)]
        eps: Rat,
        #[arg(long, default_value_t = 5)]
        phases: usize,
    },
    /// Replay a trace against an offline schedule and check the
    /// potential-function accounting step by step.
    VerifyPotential {
        #[command(flatten)]
        tree: TreeArgs,
        #[command(flatten)]
        trace: TraceArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Offline servers.
        #[arg(long)]
        h: usize,
        /// Online servers.
        #[arg(long)]
        k: usize,
        /// Offline schedule: JSON array of leaf-id arrays, one per
        /// request. Defaults to an exact optimal schedule.
        #[arg(long, value_name = "FILE")]
        schedule: Option<PathBuf>,
    },
    /// Exact offline optimum of a trace: `{cost, schedule}` JSON.
    Opt {
        #[command(flatten)]
        tree: TreeArgs,
        #[command(flatten)]
        trace: TraceArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Number of servers (start on the first k leaves).
        #[arg(long)]
        k: usize,
    },
    /// Embed an arbitrary-depth tree into one with uniform leaf depth
    /// at (1+ε) cost distortion.
    Embed {
        #[command(flatten)]
        tree: TreeArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, value_name = "p/q", default_value = "1/10", value_parser = parse_rat_arg)]
        eps: Rat,
    },
}

fn parse_rat_arg(s: &str) -> std::result::Result<Rat, String> {
    parse_rat(s).map_err(|e| e.to_string())
}

/// Prints to stdout, ignoring a closed pipe (e.g. `hkserver ... | head`).
fn emit(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn write_artifact(out: &Option<PathBuf>, name: &str, content: &str) -> Result<()> {
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(name), content)?;
    }
    Ok(())
}

fn emit_lower_bound(report: &ExperimentReport, out: &OutArgs) -> Result<()> {
    let csv = phases_csv(&report.run, out.decimal);
    write_artifact(&out.out, "phases.csv", &csv)?;
    let summary = serde_json::to_string_pretty(&summary_json(report, out.decimal))?;
    write_artifact(&out.out, "summary.json", &(summary.clone() + "\n"))?;
    emit(&summary);
    Ok(())
}

/// Distinguishes violated run invariants (exit 2) from config errors
/// (exit 1) and writes the violation transcript when a directory is
/// available.
fn violation(out: &Option<PathBuf>, rows: &[String]) -> Result<ExitCode> {
    let mut csv = String::from("violation\n");
    for r in rows {
        csv.push_str(&r.replace(',', ";"));
        csv.push('\n');
    }
    write_artifact(out, "violations.csv", &csv)?;
    for r in rows {
        eprintln!("violation: {r}");
    }
    Ok(ExitCode::from(2))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Simulate {
            tree,
            trace,
            out,
            algo,
            k,
        } => {
            let tree = tree.load()?;
            let trace = trace.load(&tree)?;
            let start = spread_start(&tree, k)?;
            let name: AlgorithmName = algo.parse()?;
            let mut alg = make_algorithm(name, &tree, &start, out.assert)?;
            let (records, cost) = match simulate(&tree, alg.as_mut(), &start, &trace) {
                Ok(v) => v,
                Err(Error::Invariant(msg)) => return violation(&out.out, &[msg]),
                Err(e) => return Err(e),
            };
            write_artifact(&out.out, "steps.csv", &steps_csv(&records))?;
            let summary = serde_json::to_string_pretty(&serde_json::json!({
                "algorithm": algo,
                "alg_cost": fmt_rat(&cost),
                "requests": trace.len(),
                "steps": records.len(),
            }))?;
            write_artifact(&out.out, "summary.json", &(summary.clone() + "\n"))?;
            emit(&summary);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::LbDc {
            tree,
            out,
            h,
            k,
            eps,
            phases,
        } => {
            if !tree.is_empty() {
                return Err(Error::InvalidConfig(
                    "lb-dc builds its own tree; drop --tree/--hst".into(),
                ));
            }
            let cfg = ExperimentConfig {
                algorithm: AlgorithmName::Dc,
                adversary: AdversaryName::Dc,
                h,
                k,
                eps,
                eps_prime: None,
                phases,
                assert_invariants: out.assert,
            };
            match run_experiment(&cfg) {
                Ok(report) => {
                    emit_lower_bound(&report, &out)?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(Error::Invariant(msg)) => violation(&out.out, &[msg]),
                Err(e) => Err(e),
            }
        }
        Cmd::LbWfa {
            out,
            h,
            eps,
            eps_prime,
            phases,
        } => {
            let cfg = ExperimentConfig {
                algorithm: AlgorithmName::Wfa,
                adversary: AdversaryName::Wfa,
                h,
                k: 2 * h,
                eps,
                eps_prime,
                phases,
                assert_invariants: out.assert,
            };
            match run_experiment(&cfg) {
                Ok(report) => {
                    emit_lower_bound(&report, &out)?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(Error::Invariant(msg)) => violation(&out.out, &[msg]),
                Err(e) => Err(e),
            }
        }
        Cmd::LbGeneral {
            tree,
            out,
            algo,
            h,
            k,
            eps,
            phases,
        } => {
            if !tree.is_empty() {
                return Err(Error::InvalidConfig(
                    "lb-general builds its own tree; drop --tree/--hst".into(),
                ));
            }
            let cfg = ExperimentConfig {
                algorithm: algo.parse()?,
                adversary: AdversaryName::General,
                h,
                k,
                eps,
                eps_prime: None,
                phases,
                assert_invariants: out.assert,
            };
            match run_experiment(&cfg) {
                Ok(report) => {
                    emit_lower_bound(&report, &out)?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(Error::Invariant(msg)) => violation(&out.out, &[msg]),
                Err(e) => Err(e),
            }
        }
        Cmd::VerifyPotential {
            tree,
            trace,
            out,
            h,
            k,
            schedule,
        } => {
            let tree = tree.load()?;
            let trace = trace.load(&tree)?;
            let d = tree.depth();
            let params = PotentialParams::new(d, h, k)?;
            let adversary_start = spread_start(&tree, h)?;
            let (adv_start, sched): (Vec<NodeId>, Vec<Vec<NodeId>>) = match schedule {
                Some(path) => {
                    let text = fs::read_to_string(path)?;
                    let sched: Vec<Vec<NodeId>> = serde_json::from_str(&text)?;
                    (adversary_start, sched)
                }
                None => {
                    let (_, sched) = opt_schedule(&tree, &adversary_start, &trace)?;
                    // the first configuration is the pre-serving
                    // reposition; it becomes the adversary's start
                    (sched[0].clone(), sched[1..].to_vec())
                }
            };
            let start = spread_start(&tree, k)?;
            let online: Vec<PointLocation> =
                start.iter().map(|&l| PointLocation::AtNode(l)).collect();
            let mut alg = make_algorithm(AlgorithmName::Aggressive, &tree, &start, out.assert)?;
            let report = hkserver::potential::verify_run(
                &tree,
                &params,
                alg.as_mut(),
                &online,
                &adv_start,
                &sched,
                &trace,
            )?;
            let csv = verify_csv(&report, out.decimal);
            write_artifact(&out.out, "verify.csv", &csv)?;
            let summary = serde_json::to_string_pretty(&serde_json::json!({
                "ok": report.ok,
                "rows": report.rows.len(),
                "lemma_skips": report.lemma_skips,
                "lemma_violations": report.lemma_violations,
                "phi_start": fmt_rat(&report.phi_start.hi),
                "phi_end": fmt_rat(&report.phi_end.hi),
            }))?;
            write_artifact(&out.out, "summary.json", &(summary.clone() + "\n"))?;
            emit(&summary);
            if report.ok {
                Ok(ExitCode::SUCCESS)
            } else {
                let rows: Vec<String> = report
                    .rows
                    .iter()
                    .filter(|r| !r.ok)
                    .map(|r| format!("step {} ({}): {}", r.step, r.phase, r.notes.join("; ")))
                    .collect();
                violation(&out.out, &rows)
            }
        }
        Cmd::Opt {
            tree,
            trace,
            out,
            k,
        } => {
            let tree = tree.load()?;
            let trace = trace.load(&tree)?;
            let start = spread_start(&tree, k)?;
            let (cost, schedule) = opt_schedule(&tree, &start, &trace)?;
            let summary = serde_json::to_string_pretty(&serde_json::json!({
                "cost": fmt_rat(&cost),
                "schedule": schedule,
            }))?;
            write_artifact(&out.out, "opt.json", &(summary.clone() + "\n"))?;
            emit(&summary);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Embed { tree, out, eps } => {
            let tree = tree.load()?;
            let (embedded, leaf_map) = tree.embed_bounded_diameter(&eps)?;
            let summary = serde_json::to_string_pretty(&serde_json::json!({
                "tree": embedded.to_file(),
                "leaf_map": leaf_map,
            }))?;
            write_artifact(&out.out, "embedded.json", &(summary.clone() + "\n"))?;
            emit(&summary);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
