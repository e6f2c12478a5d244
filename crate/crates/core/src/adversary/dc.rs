//! Lower-bound adversary against slow coverage on depth-2 HSTs.
//!
//! The tree has k+1 branches so one is always free of online servers.
//! Each phase parks h offline servers at distinct leaves of an empty
//! branch and requests offline-covered, online-free leaves until the
//! online algorithm has h servers in that subtree. The offline cost is
//! 2h per phase (move in once, then serve everything in place).

use num::Zero;

use crate::algo::OnlineAlgorithm;
use crate::error::{Error, Result};
use crate::motion::occupied_edge;
use crate::rational::{rat, rusize, Rat};
use crate::tree::{HstSpec, NodeId, PointLocation, TreeMetric};

use super::{AdversaryRun, PhaseLog};

#[derive(Clone, Debug)]
pub struct DcAdversaryConfig {
    pub h: usize,
    pub k: usize,
    pub eps: Rat,
    pub phases: usize,
    /// Per-phase request guard.
    pub request_guard: usize,
}

impl DcAdversaryConfig {
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

/// Depth-2 HST with k+1 branches of h leaves each; root edges have
/// length 1−ε, leaf edges ε.
pub fn dc_lower_bound_tree(h: usize, k: usize, eps: &Rat) -> Result<TreeMetric> {
    if eps <= &Rat::zero() || eps > &rat(1, 4) {
        return Err(Error::InvalidConfig("need 0 < ε ≤ 1/4".into()));
    }
    TreeMetric::from_hst(&HstSpec {
        depth: 2,
        fanouts: vec![k + 1, h],
        lengths: vec![Rat::from_integer(1.into()) - eps, eps.clone()],
        require_geometric: true,
    })
}

/// A branch is its subtree plus the edge to the root; it is empty when
/// no online server sits in the subtree or inside that edge.
pub fn empty_branch(tree: &TreeMetric, online: &[PointLocation]) -> Option<NodeId> {
    tree.children(tree.root()).iter().copied().find(|&u| {
        let sub = PointLocation::AtNode(u);
        online.iter().all(|p| {
            !tree.in_subtree(&sub, p, false)
                && !matches!(p, PointLocation::OnEdge { edge, .. } if *edge == u)
        })
    })
}

fn count_in(tree: &TreeMetric, online: &[PointLocation], u: NodeId) -> usize {
    let sub = PointLocation::AtNode(u);
    online
        .iter()
        .filter(|p| tree.in_subtree(&sub, p, false))
        .count()
}

pub fn dc_adversary(
    tree: &TreeMetric,
    cfg: &DcAdversaryConfig,
    algorithm: &mut dyn OnlineAlgorithm,
    online: &mut Vec<PointLocation>,
) -> Result<AdversaryRun> {
    let (h, k) = (cfg.h, cfg.k);
    if online.len() != k {
        return Err(Error::InvalidConfig(format!("expected {k} online servers")));
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
        let adv_leaves: Vec<NodeId> = tree.children(u)[..h].to_vec();
        let mut alg_cost = Rat::zero();
        // cost of the online algorithm while it has exactly i servers
        // in T_u, indexed by i
        let mut step_costs = vec![Rat::zero(); h + 1];
        let mut requests = 0usize;
        while count_in(tree, online, u) < h {
            if requests >= cfg.request_guard {
                return Err(Error::GuardExceeded(format!(
                    "phase {phase} exceeded {} requests",
                    cfg.request_guard
                )));
            }
            let &v = adv_leaves
                .iter()
                .find(|&&l| !online.contains(&PointLocation::AtNode(l)))
                .ok_or_else(|| {
                    Error::Invariant("all offline leaves covered before h servers arrived".into())
                })?;
            trace.push(v);
            requests += 1;
            let before = online.clone();
            let records = algorithm.serve(tree, online, v)?;
            // replay to attribute costs to steps and to check the
            // entry observation: when a server arrives at u from the
            // root edge, nobody else is inside that edge
            let mut state = before;
            for r in &records {
                // Step i is the part of the phase with exactly i−1
                // servers inside, so cost with i servers inside lands
                // in bucket i+1 (clamped: the tail after the h-th
                // arrival still belongs to the last step)
                let i = count_in(tree, &state, u);
                step_costs[(i + 1).min(h)] += &r.cost;
                alg_cost += &r.cost;
                for m in &r.moved {
                    state[m.server] = m.to.clone();
                }
                for m in &r.moved {
                    if m.to == PointLocation::AtNode(u)
                        && occupied_edge(tree, &m.from, &m.to) == Some(u)
                    {
                        let inside_e = state.iter().enumerate().any(|(s, p)| {
                            s != m.server
                                && matches!(p, PointLocation::OnEdge { edge, .. } if *edge == u)
                        });
                        if inside_e {
                            return Err(Error::Invariant(
                                "another server sits on the branch edge at an entry event".into(),
                            ));
                        }
                    }
                }
            }
            if &state != online {
                return Err(Error::Invariant(
                    "records do not replay to the final state".into(),
                ));
            }
        }
        let adv_cost = rusize(2 * h);
        alg_total += &alg_cost;
        adv_total += &adv_cost;
        let annotations = step_costs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| format!("step{}={}", i, c))
            .collect();
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

/// The per-step costs logged by `dc_adversary`, parsed back out of the
/// annotations: entry i−1 is the cost paid while i−1 servers were in
/// the subtree (the phase's Step i).
pub fn parse_step_costs(log: &PhaseLog) -> Vec<Rat> {
    log.annotations
        .iter()
        .filter_map(|a| a.split_once('='))
        .map(|(_, v)| crate::rational::parse_rat(v).expect("step cost annotation"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algo::DcAlgorithm;
    use crate::rational::rint;

    fn spread_start(tree: &TreeMetric, k: usize) -> Vec<PointLocation> {
        // k servers at distinct leaves, filling branches in order
        tree.leaves()
            .iter()
            .take(k)
            .map(|&l| PointLocation::AtNode(l))
            .collect()
    }

    #[test]
    fn dc_phase_costs_match_the_bound() {
        let (h, k) = (3usize, 6usize);
        let eps = rat(1, 8);
        let t = dc_lower_bound_tree(h, k, &eps).unwrap();
        let mut online = spread_start(&t, k);
        let mut alg = DcAlgorithm::default();
        let cfg = DcAdversaryConfig::new(h, k, eps.clone(), 4);
        let run = dc_adversary(&t, &cfg, &mut alg, &mut online).unwrap();
        assert_eq!(run.phases.len(), 4);
        let lower = (Rat::from_integer(1.into()) - rat(2, 1) * &eps) * rusize(h * h);
        for p in &run.phases {
            assert_eq!(p.adv_cost, rusize(2 * h));
            assert!(
                p.alg_cost >= lower,
                "phase {} too cheap: {}",
                p.phase,
                p.alg_cost
            );
            let steps = parse_step_costs(p);
            for (idx, c) in steps.iter().enumerate() {
                let i = idx + 1;
                let bound = (Rat::from_integer(1.into()) - rat(2, 1) * &eps) * rusize(2 * i - 1);
                assert!(c >= &bound, "step {i} cost {c} below {bound}");
            }
        }
        assert!(run.ratio().unwrap() >= rusize(h) / rint(4));
    }

    #[test]
    fn empty_branch_always_exists() {
        let t = dc_lower_bound_tree(2, 3, &rat(1, 8)).unwrap();
        let online = spread_start(&t, 3);
        assert!(empty_branch(&t, &online).is_some());
    }
}
