//! Lower-bound adversary against arbitrary online algorithms on
//! depth-2 HSTs.
//!
//! Each phase requests online-free leaves of an empty branch and
//! measures s(i), the cost the algorithm pays for moving servers that
//! were already inside the branch before its i-th server arrives. The
//! offline accounting is committed retroactively from the realized
//! s(·) values: case A (slow arrival, s(i) ≥ 3i), case B (eager
//! arrival, s(i) ≤ (10i−24)/7), or case C (everything in between, with
//! ℓ = round(βh) offline servers).

use num::{One, Signed, Zero};

use crate::algo::OnlineAlgorithm;
use crate::error::{Error, Result};
use crate::motion::occupied_edge;
use crate::rational::{fmt_rat, rat, rusize, Rat};
use crate::tree::{NodeId, PointLocation, TreeMetric};

use super::dc::{dc_lower_bound_tree, empty_branch};
use super::{AdversaryRun, PhaseLog};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneralCase {
    /// The algorithm was slow: s(i) ≥ 3i for some i ≤ h.
    A,
    /// The algorithm was eager: s(i) ≤ (10i−24)/7 for some i ≤ h.
    B,
    /// Intermediate behaviour up to the h-th arrival.
    C,
}

impl std::fmt::Display for GeneralCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GeneralCase::A => write!(f, "A"),
            GeneralCase::B => write!(f, "B"),
            GeneralCase::C => write!(f, "C"),
        }
    }
}

/// Reads the committed case back out of a phase's annotations.
pub fn phase_case(log: &PhaseLog) -> Option<GeneralCase> {
    log.annotations.iter().find_map(|a| match a.as_str() {
        "case=A" => Some(GeneralCase::A),
        "case=B" => Some(GeneralCase::B),
        "case=C" => Some(GeneralCase::C),
        _ => None,
    })
}

#[derive(Clone, Debug)]
pub struct GeneralAdversaryConfig {
    pub h: usize,
    pub k: usize,
    pub eps: Rat,
    pub phases: usize,
    pub request_guard: usize,
}

impl GeneralAdversaryConfig {
    pub fn new(h: usize, k: usize, eps: Rat, phases: usize) -> Self {
        Self {
            h,
            k,
            eps,
            phases,
            request_guard: 1_000_000,
        }
    }
}

/// Same shape as the slow-coverage tree: depth-2 HST, k+1 branches of
/// h leaves, upper edges 1−ε, lower edges ε.
pub fn general_lower_bound_tree(h: usize, k: usize, eps: &Rat) -> Result<TreeMetric> {
    dc_lower_bound_tree(h, k, eps)
}

fn count_in(tree: &TreeMetric, online: &[PointLocation], u: NodeId) -> usize {
    let sub = PointLocation::AtNode(u);
    online
        .iter()
        .filter(|p| tree.in_subtree(&sub, p, false))
        .count()
}

pub fn general_adversary(
    tree: &TreeMetric,
    cfg: &GeneralAdversaryConfig,
    algorithm: &mut dyn OnlineAlgorithm,
    online: &mut Vec<PointLocation>,
) -> Result<AdversaryRun> {
    let (h, k) = (cfg.h, cfg.k);
    if online.len() != k {
        return Err(Error::InvalidConfig(format!("expected {k} online servers")));
    }
    if h < 2 {
        return Err(Error::InvalidConfig("need h ≥ 2".into()));
    }
    if tree.depth() != 2 || tree.children(tree.root()).len() < k + 1 {
        return Err(Error::InvalidConfig(
            "tree must be a depth-2 HST with ≥ k+1 branches".into(),
        ));
    }
    let mut trace = Vec::new();
    let mut phases = Vec::new();
    let mut alg_total = Rat::zero();
    let mut adv_total = Rat::zero();
    for phase in 0..cfg.phases {
        let u = empty_branch(tree, online)
            .ok_or_else(|| Error::Invariant("no empty branch with k+1 branches".into()))?;
        let leaves: Vec<NodeId> = tree.children(u)[..h].to_vec();
        let sub = PointLocation::AtNode(u);
        let mut alg_cost = Rat::zero();
        let mut inside_cost = Rat::zero();
        // s[i] = inside cost before the i-th arrival; s[0] unused
        let mut s: Vec<Option<Rat>> = vec![None; h + 1];
        s[1] = Some(Rat::zero());
        let mut arrived = count_in(tree, online, u);
        for slot in s.iter_mut().take(arrived + 1).skip(1) {
            *slot = Some(Rat::zero());
        }
        let mut requests = 0usize;
        let mut case: Option<(GeneralCase, usize)> = None;
        while case.is_none() {
            if requests >= cfg.request_guard {
                return Err(Error::GuardExceeded(format!(
                    "phase {phase} exceeded {} requests",
                    cfg.request_guard
                )));
            }
            let i = count_in(tree, online, u);
            let &v = leaves[..(i + 1).min(h)]
                .iter()
                .find(|&&l| !online.contains(&PointLocation::AtNode(l)))
                .ok_or_else(|| {
                    Error::Invariant("i online servers cover all of the first i+1 leaves".into())
                })?;
            trace.push(v);
            requests += 1;
            // a server inside the branch when the request is issued
            // contributes to s; a fresh entrant's trip to the request,
            // including its descent inside the branch, does not
            let insiders: Vec<bool> = online
                .iter()
                .map(|p| tree.in_subtree(&sub, p, false))
                .collect();
            let mut state = online.clone();
            let records = algorithm.serve(tree, online, v)?;
            for r in &records {
                alg_cost += &r.cost;
                for m in &r.moved {
                    if insiders[m.server] {
                        if let Some(edge) = occupied_edge(tree, &m.from, &m.to) {
                            if tree.in_subtree(&sub, &PointLocation::AtNode(edge), true) {
                                inside_cost += &m.displacement;
                            }
                        }
                    }
                    state[m.server] = m.to.clone();
                }
                let now = count_in(tree, &state, u);
                while arrived < now {
                    arrived += 1;
                    if s[arrived.min(h)].is_none() {
                        s[arrived.min(h)] = Some(inside_cost.clone());
                    }
                    if arrived > h || case.is_some() {
                        continue;
                    }
                    let si = s[arrived].clone().unwrap();
                    if si >= rusize(3 * arrived) {
                        case = Some((GeneralCase::A, arrived));
                    } else if si <= (rusize(10 * arrived) - rusize(24)) / rat(7, 1) {
                        case = Some((GeneralCase::B, arrived));
                    } else if arrived == h {
                        case = Some((GeneralCase::C, h));
                    }
                }
            }
            if &state != online {
                return Err(Error::Invariant(
                    "records do not replay to the final state".into(),
                ));
            }
        }
        let (case, m) = case.unwrap();
        let mut annotations: Vec<String> = (2..=m)
            .filter_map(|i| s[i].as_ref().map(|v| format!("s{i}={}", fmt_rat(v))))
            .collect();
        annotations.push(format!("case={case}"));
        annotations.push(format!("m={m}"));
        let adv_cost = match case {
            GeneralCase::A => rusize(2 * m),
            GeneralCase::B => rusize(2) + s[m].clone().unwrap(),
            GeneralCase::C => {
                let sh = s[h].clone().unwrap();
                let c = &sh / rusize(h);
                annotations.push(format!("c={}", fmt_rat(&c)));
                if c <= Rat::one() || c >= rat(3, 1) {
                    annotations.push(format!(
                        "warn: c={} outside (1,3); h too small for the certified ratio",
                        fmt_rat(&c)
                    ));
                }
                let beta = (&c - rat(4, 7)) / rat(20, 7);
                annotations.push(format!("beta={}", fmt_rat(&beta)));
                // ℓ = round(βh), clamped to a usable server count
                let ell_rat = (&beta * rusize(h) + rat(1, 2)).floor();
                let ell = ell_rat
                    .to_integer()
                    .max(1.into())
                    .min((h - 1).into())
                    .try_into()
                    .map_err(|_| Error::Invariant("ℓ out of range".into()))?;
                let ell: usize = ell;
                annotations.push(format!("ell={ell}"));
                let sl = s[ell]
                    .clone()
                    .ok_or_else(|| Error::Invariant(format!("s({ell}) never sampled")))?;
                let denom = rat(10, 7) * &beta * &beta + (rat(4, 7) - &c) * &beta + &c;
                let expanded = rusize(2) * &beta + (&c - rat(10, 7) * &beta) * (Rat::one() - &beta);
                if denom != expanded {
                    return Err(Error::Invariant("case C denominator identity broke".into()));
                }
                if denom.is_positive() {
                    let bound = (rusize(2) + &c) / &denom;
                    annotations.push(format!("ratio_bound={}", fmt_rat(&bound)));
                }
                rusize(2 * ell) + (&sh - &sl) * rusize(h - ell + 1) / rusize(h)
            }
        };
        alg_total += &alg_cost;
        adv_total += &adv_cost;
        phases.push(PhaseLog {
            phase,
            alg_cost,
            adv_cost,
            opt_cost: None,
            requests,
            annotations,
        });
    }
    Ok(AdversaryRun {
        trace,
        phases,
        alg_cost: alg_total,
        adv_cost: adv_total,
    })
}
