//! Experiment orchestration: reproducible random traces, named
//! algorithm/adversary wiring, and deterministic CSV/JSON emission.
//!
//! Everything here is plumbing: exact rationals are serialized as
//! "p/q" strings so the record of truth never loses precision, and an
//! optional decimal column is appended for human reading. Output is a
//! pure function of config + seed — no timestamps, no map iteration
//! order, no platform-dependent formatting.

use std::str::FromStr;

use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::adversary::{
    dc_adversary, dc_lower_bound_tree, general_adversary, general_lower_bound_tree, wfa_adversary,
    wfa_lower_bound_tree, AdversaryRun, DcAdversaryConfig, GeneralAdversaryConfig,
    WfaAdversaryConfig,
};
use crate::algo::{total_cost, AggressiveAlgorithm, DcAlgorithm, OnlineAlgorithm, WfaAlgorithm};
use crate::error::{Error, Result};
use crate::motion::ElementaryStepRecord;
use crate::potential::RunReport;
use crate::rational::{fmt_decimal, fmt_rat, Rat};
use crate::tree::{HstSpec, NodeId, PointLocation, TreeMetric};
use crate::workfunction::opt_cost;

/// Uniform i.i.d. leaf requests under a seeded ChaCha8 generator;
/// the seed fully determines the trace.
pub fn random_requests(tree: &TreeMetric, count: usize, seed: u64) -> Vec<NodeId> {
    let leaves = tree.leaves();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| leaves[rng.gen_range(0..leaves.len())])
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgorithmName {
    Dc,
    Aggressive,
    Wfa,
}

impl FromStr for AlgorithmName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dc" => Ok(Self::Dc),
            "aggressive" => Ok(Self::Aggressive),
            "wfa" => Ok(Self::Wfa),
            other => Err(Error::InvalidConfig(format!(
                "unknown algorithm {other:?} (expected dc | aggressive | wfa)"
            ))),
        }
    }
}

/// Instantiates a named algorithm. The WFA needs the start leaves to
/// seed its work-function table; `assert_invariants` toggles the
/// optional runtime checks where an algorithm has them.
pub fn make_algorithm(
    name: AlgorithmName,
    tree: &TreeMetric,
    start: &[NodeId],
    assert_invariants: bool,
) -> Result<Box<dyn OnlineAlgorithm>> {
    Ok(match name {
        AlgorithmName::Dc => Box::new(DcAlgorithm::default()),
        AlgorithmName::Aggressive => Box::new(AggressiveAlgorithm {
            assert_invariants,
            ..Default::default()
        }),
        AlgorithmName::Wfa => Box::new(WfaAlgorithm::new(tree, start)?),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdversaryName {
    Dc,
    General,
    Wfa,
}

impl FromStr for AdversaryName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dc" => Ok(Self::Dc),
            "general" => Ok(Self::General),
            "wfa" => Ok(Self::Wfa),
            other => Err(Error::InvalidConfig(format!(
                "unknown adversary {other:?} (expected dc | general | wfa)"
            ))),
        }
    }
}

/// Full description of a lower-bound experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub algorithm: AlgorithmName,
    pub adversary: AdversaryName,
    pub h: usize,
    pub k: usize,
    pub eps: Rat,
    /// Elementary-subtree diameter for the WFA construction.
    pub eps_prime: Option<Rat>,
    pub phases: usize,
    pub assert_invariants: bool,
}

/// Outcome of a lower-bound experiment: the adversary run plus the
/// exact offline optimum on the realized trace when the configuration
/// table fits under its guard.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub tree: TreeMetric,
    pub start: Vec<NodeId>,
    pub run: AdversaryRun,
    /// Exact OPT of the realized trace, when computable.
    pub opt_h: Option<Rat>,
    /// Whether `ratio` divides by exact OPT (true) or by the
    /// adversary's accounting (false).
    pub opt_exact: bool,
    pub ratio: Option<Rat>,
}

/// `k` servers parked on the first leaves, wrapping around (stacking)
/// when there are more servers than leaves.
pub fn spread_start(tree: &TreeMetric, k: usize) -> Result<Vec<NodeId>> {
    let leaves = tree.leaves();
    if leaves.is_empty() || k == 0 {
        return Err(Error::InvalidConfig(
            "need a non-empty tree and k ≥ 1".into(),
        ));
    }
    Ok((0..k).map(|i| leaves[i % leaves.len()]).collect())
}

/// All `k = 2h` servers stacked on the first region's first
/// elementary subtree, the start the alternating-phase construction
/// expects.
pub fn wfa_start(tree: &TreeMetric, h: usize) -> Result<Vec<NodeId>> {
    let leaves = tree.leaves();
    if leaves.len() < h {
        return Err(Error::InvalidConfig(
            "tree too small for the WFA start".into(),
        ));
    }
    Ok((0..2 * h).map(|i| leaves[i % h]).collect())
}

/// Runs a named adversary against a named algorithm and computes the
/// exact offline optimum of the realized trace when feasible. The
/// report is a deterministic function of the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (tree, start, run) = match cfg.adversary {
        AdversaryName::Dc => {
            let tree = dc_lower_bound_tree(cfg.h, cfg.k, &cfg.eps)?;
            let start = spread_start(&tree, cfg.k)?;
            let mut online: Vec<PointLocation> =
                start.iter().map(|&l| PointLocation::AtNode(l)).collect();
            let mut alg = make_algorithm(cfg.algorithm, &tree, &start, cfg.assert_invariants)?;
            let acfg = DcAdversaryConfig::new(cfg.h, cfg.k, cfg.eps.clone(), cfg.phases);
            let run = dc_adversary(&tree, &acfg, alg.as_mut(), &mut online)?;
            (tree, start, run)
        }
        AdversaryName::General => {
            let tree = general_lower_bound_tree(cfg.h, cfg.k, &cfg.eps)?;
            let start = spread_start(&tree, cfg.k)?;
            let mut online: Vec<PointLocation> =
                start.iter().map(|&l| PointLocation::AtNode(l)).collect();
            let mut alg = make_algorithm(cfg.algorithm, &tree, &start, cfg.assert_invariants)?;
            let acfg = GeneralAdversaryConfig::new(cfg.h, cfg.k, cfg.eps.clone(), cfg.phases);
            let run = general_adversary(&tree, &acfg, alg.as_mut(), &mut online)?;
            (tree, start, run)
        }
        AdversaryName::Wfa => {
            if cfg.algorithm != AlgorithmName::Wfa {
                return Err(Error::InvalidConfig(
                    "the wfa adversary drives the wfa algorithm only".into(),
                ));
            }
            if cfg.k != 2 * cfg.h {
                return Err(Error::InvalidConfig(
                    "the wfa construction needs k = 2h".into(),
                ));
            }
            let eps_prime = cfg.eps_prime.clone().unwrap_or_else(|| &cfg.eps * &cfg.eps);
            let tree = wfa_lower_bound_tree(cfg.h, &cfg.eps, &eps_prime)?;
            let start = wfa_start(&tree, cfg.h)?;
            let mut online: Vec<PointLocation> =
                start.iter().map(|&l| PointLocation::AtNode(l)).collect();
            let mut alg = WfaAlgorithm::new(&tree, &start)?;
            let acfg = WfaAdversaryConfig::new(cfg.h, cfg.eps.clone(), eps_prime, cfg.phases);
            let run = wfa_adversary(&tree, &acfg, &mut alg, &mut online)?;
            (tree, start, run)
        }
    };
    // exact OPT with h servers on the realized trace, guard permitting
    let opt_start = &start[..cfg.h.min(start.len())];
    let opt_h = match opt_cost(&tree, opt_start, &run.trace) {
        Ok(v) => Some(v),
        Err(Error::GuardExceeded(_)) => None,
        Err(e) => return Err(e),
    };
    let (ratio, opt_exact) = match &opt_h {
        Some(v) if !v.is_zero() => (Some(&run.alg_cost / v), true),
        _ => (run.ratio(), false),
    };
    Ok(ExperimentReport {
        tree,
        start,
        run,
        opt_h,
        opt_exact,
        ratio,
    })
}

fn rat_cell(v: &Rat, decimal: Option<u32>) -> String {
    match decimal {
        Some(d) => format!("{},{}", fmt_rat(v), fmt_decimal(v, d)),
        None => fmt_rat(v),
    }
}

fn rat_header(name: &str, decimal: Option<u32>) -> String {
    match decimal {
        Some(_) => format!("{name},{name}_dec"),
        None => name.to_string(),
    }
}

/// One CSV row per phase: costs exact, annotations joined with `;`.
pub fn phases_csv(run: &AdversaryRun, decimal: Option<u32>) -> String {
    let mut out = format!(
        "phase,requests,{},{},{},annotations\n",
        rat_header("alg_cost", decimal),
        rat_header("adv_cost", decimal),
        rat_header("opt_cost", decimal),
    );
    for p in &run.phases {
        let opt = match &p.opt_cost {
            Some(v) => rat_cell(v, decimal),
            None => match decimal {
                Some(_) => ",".into(),
                None => String::new(),
            },
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.phase,
            p.requests,
            rat_cell(&p.alg_cost, decimal),
            rat_cell(&p.adv_cost, decimal),
            opt,
            p.annotations.join("; "),
        ));
    }
    out
}

/// JSON summary of a lower-bound run. Keys are emitted in sorted
/// order (serde_json's default map), so the bytes are reproducible.
pub fn summary_json(report: &ExperimentReport, decimal: Option<u32>) -> Value {
    let rat_val = |v: &Rat| -> Value {
        match decimal {
            Some(d) => json!({ "exact": fmt_rat(v), "decimal": fmt_decimal(v, d) }),
            None => Value::String(fmt_rat(v)),
        }
    };
    json!({
        "alg_cost": rat_val(&report.run.alg_cost),
        "adv_cost": rat_val(&report.run.adv_cost),
        "opt_cost": report.opt_h.as_ref().map(&rat_val),
        "opt_exact": report.opt_exact,
        "ratio": report.ratio.as_ref().map(&rat_val),
        "phases": report.run.phases.len(),
        "requests": report.run.trace.len(),
    })
}

/// One CSV row per elementary step of a simulation.
pub fn steps_csv(records: &[ElementaryStepRecord]) -> String {
    let mut out = String::from("step,phase,duration,cost,event,moved\n");
    for r in records {
        out.push_str(&r.csv_row().join(","));
        out.push('\n');
    }
    out
}

/// Verification transcript: `step, phase, case, cost, dphi, slack, ok`.
/// Interval endpoints are printed as `[lo, hi]` collapsed to a single
/// value when exact.
pub fn verify_csv(report: &RunReport, decimal: Option<u32>) -> String {
    let ival = |v: &crate::interval::RatInterval| {
        if v.lo == v.hi {
            fmt_rat(&v.lo)
        } else {
            format!("[{};{}]", fmt_rat(&v.lo), fmt_rat(&v.hi))
        }
    };
    let mut out = format!(
        "step,phase,case,{},dphi,slack,ok,notes\n",
        rat_header("cost", decimal)
    );
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.step,
            r.phase,
            r.case_label,
            rat_cell(&r.cost, decimal),
            ival(&r.dphi),
            ival(&r.slack),
            r.ok,
            r.notes.join("; "),
        ));
    }
    out
}

/// Parses the `--hst d:f1,f2,...:l1,l2,...` CLI shorthand, e.g.
/// `2:17,4:7/8,1/8` for a depth-2 tree with 17 branches of 4 leaves.
pub fn parse_hst_arg(s: &str) -> Result<HstSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidConfig(format!(
            "--hst wants d:fanouts:lengths, got {s:?}"
        )));
    }
    let depth: usize = parts[0]
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad depth {:?}", parts[0])))?;
    let fanouts: Vec<usize> = parts[1]
        .split(',')
        .map(|f| {
            f.parse()
                .map_err(|_| Error::InvalidConfig(format!("bad fanout {f:?}")))
        })
        .collect::<Result<_>>()?;
    let lengths: Vec<Rat> = parts[2]
        .split(',')
        .map(crate::rational::parse_rat)
        .collect::<Result<_>>()?;
    Ok(HstSpec {
        depth,
        fanouts,
        lengths,
        require_geometric: false,
    })
}

/// Reads a request trace: one leaf id per line, `#` comments and
/// blank lines ignored.
pub fn parse_trace(tree: &TreeMetric, text: &str) -> Result<Vec<NodeId>> {
    let mut trace = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let id: NodeId = line
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad node id {line:?}", lineno + 1)))?;
        if !tree.is_leaf(id) {
            return Err(Error::InvalidConfig(format!(
                "line {}: node {id} is not a leaf",
                lineno + 1
            )));
        }
        trace.push(id);
    }
    Ok(trace)
}

/// Drives one algorithm through a trace, returning the records of
/// every request in order plus the total cost.
pub fn simulate(
    tree: &TreeMetric,
    algorithm: &mut dyn OnlineAlgorithm,
    start: &[NodeId],
    trace: &[NodeId],
) -> Result<(Vec<ElementaryStepRecord>, Rat)> {
    let mut online: Vec<PointLocation> = start.iter().map(|&l| PointLocation::AtNode(l)).collect();
    let mut all = Vec::new();
    let mut cost = Rat::zero();
    for &r in trace {
        let records = algorithm.serve(tree, &mut online, r)?;
        cost += total_cost(&records);
        all.extend(records);
    }
    Ok((all, cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn traces_are_seed_deterministic() {
        let tree = dc_lower_bound_tree(2, 4, &rat(1, 8)).unwrap();
        assert!(random_requests(&tree, 0, 7).is_empty());
        let a = random_requests(&tree, 100, 7);
        let b = random_requests(&tree, 100, 7);
        assert_eq!(a, b);
        let distinct = (0..100u64)
            .map(|s| random_requests(&tree, 20, s))
            .collect::<std::collections::HashSet<_>>();
        assert_eq!(distinct.len(), 100);
        assert!(a.iter().all(|&l| tree.is_leaf(l)));
    }

    #[test]
    fn experiment_report_is_deterministic_and_consistent() {
        let cfg = ExperimentConfig {
            algorithm: AlgorithmName::Dc,
            adversary: AdversaryName::Dc,
            h: 2,
            k: 4,
            eps: rat(1, 8),
            eps_prime: None,
            phases: 3,
            assert_invariants: true,
        };
        let r1 = run_experiment(&cfg).unwrap();
        let r2 = run_experiment(&cfg).unwrap();
        assert_eq!(phases_csv(&r1.run, Some(4)), phases_csv(&r2.run, Some(4)));
        assert_eq!(
            serde_json::to_string(&summary_json(&r1, None)).unwrap(),
            serde_json::to_string(&summary_json(&r2, None)).unwrap()
        );
        // totals are the sums of the phase records, exactly
        let alg: Rat = r1.run.phases.iter().map(|p| p.alg_cost.clone()).sum();
        let adv: Rat = r1.run.phases.iter().map(|p| p.adv_cost.clone()).sum();
        assert_eq!(alg, r1.run.alg_cost);
        assert_eq!(adv, r1.run.adv_cost);
        // small instance: exact OPT available and used as denominator
        assert!(r1.opt_exact);
        let opt = r1.opt_h.clone().unwrap();
        assert!(opt <= r1.run.adv_cost);
        assert_eq!(r1.ratio, Some(&r1.run.alg_cost / &opt));
    }

    #[test]
    fn hst_arg_round_trips() {
        let spec = parse_hst_arg("2:5,2:7/8,1/8").unwrap();
        assert_eq!(spec.depth, 2);
        assert_eq!(spec.fanouts, vec![5, 2]);
        assert_eq!(spec.lengths, vec![rat(7, 8), rat(1, 8)]);
        assert!(parse_hst_arg("2:5,2").is_err());
        assert!(parse_hst_arg("x:5:1").is_err());
        let t = TreeMetric::from_hst(&spec).unwrap();
        let trace = parse_trace(&t, "# c\n\n6\n7\n").unwrap();
        assert_eq!(trace.len(), 2);
        assert!(parse_trace(&t, "0\n").is_err());
        assert!(parse_trace(&t, "zz\n").is_err());
    }

    #[test]
    fn simulate_accumulates_record_costs() {
        let tree = dc_lower_bound_tree(2, 4, &rat(1, 8)).unwrap();
        let start = spread_start(&tree, 4).unwrap();
        let trace = random_requests(&tree, 25, 3);
        let mut alg = make_algorithm(AlgorithmName::Dc, &tree, &start, true).unwrap();
        let (records, cost) = simulate(&tree, alg.as_mut(), &start, &trace).unwrap();
        assert_eq!(cost, total_cost(&records));
        let csv = steps_csv(&records);
        assert!(csv.lines().count() == records.len() + 1);
    }
}
