//! The non-uniform-speed two-phase algorithm.
//!
//! For a request v with elementary root u: while no server is on the
//! root path r-v (Phase 1), every adjacent server inside T_u heads to
//! v at speed 1/k_u and every adjacent server outside at speed
//! k_s/(k - k_u). Once a server sits on the root path (Phase 2), the
//! lowest such server q descends at speed 1 while the adjacent servers
//! below it move at speed k_s/k_q^-. Speeds are recomputed at every
//! event, so the phase guard needs no separate bookkeeping.

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::motion::{
    adjacent_servers, count_online_in, occupied_edge, serve_request, ElementaryStepRecord, Move,
    PlannedMove, Planner, STEP_GUARD,
};
use crate::rational::{rint, rusize, Rat};
use crate::tree::{NodeId, PointLocation, TreeMetric};

use super::OnlineAlgorithm;

pub struct AggressivePlanner;

/// Lowest online server on the path r-v, smallest id on ties.
pub fn lowest_path_server(tree: &TreeMetric, online: &[PointLocation], v: NodeId) -> Option<usize> {
    let rp = PointLocation::AtNode(tree.root());
    let vp = PointLocation::AtNode(v);
    let mut best: Option<(usize, Rat)> = None;
    for (s, pos) in online.iter().enumerate() {
        if !tree.on_path(pos, &rp, &vp) {
            continue;
        }
        let depth = tree.distance(&rp, pos);
        if best.as_ref().is_none_or(|(_, d)| depth > *d) {
            best = Some((s, depth));
        }
    }
    best.map(|(s, _)| s)
}

/// Does point `p` lie strictly below `q_pos` on the way to `v`? When q
/// sits exactly at a path node it is about to enter the edge toward v,
/// so the region below it is that edge plus the subtree under its
/// lower endpoint; sibling subtrees no longer count (forward limit).
pub fn below_server(
    tree: &TreeMetric,
    q_pos: &PointLocation,
    v: NodeId,
    p: &PointLocation,
) -> bool {
    match q_pos {
        PointLocation::AtNode(w) if *w == v => false, // q already serves v
        PointLocation::AtNode(w) => {
            let mut c = v;
            while tree.parent(c) != Some(*w) {
                c = tree.parent(c).expect("q lies on the root path");
            }
            match p {
                PointLocation::OnEdge { edge, .. } if *edge == c => true,
                _ => tree.in_subtree(&PointLocation::AtNode(c), p, false),
            }
        }
        _ => tree.in_subtree(q_pos, p, true),
    }
}

/// The edge q occupies or is about to enter on its way down to v:
/// identifies the level ℓ of the Phase-2 analysis.
pub fn forward_edge_of(tree: &TreeMetric, q_pos: &PointLocation, v: NodeId) -> NodeId {
    match q_pos {
        PointLocation::OnEdge { edge, .. } => *edge,
        PointLocation::AtNode(w) => {
            let mut c = v;
            while c != *w && tree.parent(c) != Some(*w) {
                c = tree.parent(c).expect("q lies on the root path");
            }
            c
        }
    }
}

impl Planner for AggressivePlanner {
    fn plan(
        &mut self,
        tree: &TreeMetric,
        online: &[PointLocation],
        v: NodeId,
    ) -> Result<PlannedMove> {
        let u = tree.elementary_root(v)?;
        let vp = PointLocation::AtNode(v);
        let k = online.len();

        if let Some(q) = lowest_path_server(tree, online, v) {
            // Phase 2; T_q^- is taken in the forward limit, see
            // below_server.
            let q_pos = online[q].clone();
            let below_q = |p: &PointLocation| below_server(tree, &q_pos, v, p);
            let k_qm = online.iter().filter(|p| below_q(p)).count();
            let mut moves = vec![Move {
                server: q,
                dest: vp.clone(),
                speed: Rat::one(),
            }];
            let mut covered = 0usize;
            if k_qm > 0 {
                let denom = rusize(k_qm);
                for s in adjacent_servers(tree, online, v) {
                    if s == q {
                        continue;
                    }
                    if !below_q(&online[s]) {
                        return Err(Error::Invariant(format!(
                            "adjacent server {s} outside T_q^- in Phase 2"
                        )));
                    }
                    let k_s = count_online_in(tree, online, &online[s], false);
                    covered += k_s;
                    moves.push(Move {
                        server: s,
                        dest: vp.clone(),
                        speed: rusize(k_s) / &denom,
                    });
                }
                if covered != k_qm {
                    return Err(Error::Invariant(format!(
                        "adjacent subtrees below q cover {covered} of {k_qm} servers"
                    )));
                }
            }
            return Ok(PlannedMove {
                moves,
                phase: "2".into(),
            });
        }

        // Phase 1. Only adjacent servers move: a blocked or co-located
        // server following another mover into the same edge would put
        // two servers in one edge interior, which the whole potential
        // accounting (and its per-edge bookkeeping) forbids. In
        // general position every server inside T_u is adjacent, so the
        // inside total speed is 1 as intended.
        let up = PointLocation::AtNode(u);
        let k_u = count_online_in(tree, online, &up, false);
        let mut moves = Vec::new();
        let inside_speed = if k_u > 0 {
            Some(Rat::one() / rusize(k_u))
        } else {
            None
        };
        let outside_denom = if k_u < k { Some(rusize(k - k_u)) } else { None };
        let mut covered = 0usize;
        for s in adjacent_servers(tree, online, v) {
            if tree.in_subtree(&up, &online[s], false) {
                let speed = inside_speed.clone().expect("adjacent server inside T_u");
                moves.push(Move {
                    server: s,
                    dest: vp.clone(),
                    speed,
                });
            } else {
                let denom = outside_denom.clone().expect("adjacent server outside T_u");
                let k_s = count_online_in(tree, online, &online[s], false);
                covered += k_s;
                moves.push(Move {
                    server: s,
                    dest: vp.clone(),
                    speed: rusize(k_s) / denom,
                });
            }
        }
        if k_u < k && covered != k - k_u {
            return Err(Error::Invariant(format!(
                "adjacent outside subtrees cover {covered} of {} servers",
                k - k_u
            )));
        }
        if moves.is_empty() {
            return Err(Error::Invariant("no mover in Phase 1 with k >= 1".into()));
        }
        Ok(PlannedMove {
            moves,
            phase: "1".into(),
        })
    }
}

pub struct AggressiveAlgorithm {
    pub step_guard: usize,
    /// Runtime checks: total speed <= 2 per step and edge-interior
    /// exclusivity at every event boundary.
    pub assert_invariants: bool,
}

impl Default for AggressiveAlgorithm {
    fn default() -> Self {
        Self {
            step_guard: STEP_GUARD,
            assert_invariants: true,
        }
    }
}

/// At most one server in any single edge's interior.
pub(crate) fn edge_interiors_exclusive(occupied: &[Option<NodeId>]) -> bool {
    let mut edges: Vec<NodeId> = occupied.iter().flatten().copied().collect();
    edges.sort_unstable();
    edges.windows(2).all(|w| w[0] != w[1])
}

impl OnlineAlgorithm for AggressiveAlgorithm {
    fn name(&self) -> &'static str {
        "aggressive"
    }

    fn serve(
        &mut self,
        tree: &TreeMetric,
        online: &mut Vec<PointLocation>,
        request: NodeId,
    ) -> Result<Vec<ElementaryStepRecord>> {
        let records = serve_request(
            tree,
            online,
            request,
            &mut AggressivePlanner,
            self.step_guard,
        )?;
        if self.assert_invariants {
            let mut replay: Vec<PointLocation> = online.clone();
            // walk backwards to the pre-serve state, then forward again
            for r in records.iter().rev() {
                for m in &r.moved {
                    replay[m.server] = m.from.clone();
                }
            }
            for r in &records {
                if r.cost > rint(2) * &r.duration {
                    return Err(Error::Invariant(format!(
                        "step {} total speed exceeds 2",
                        r.step
                    )));
                }
                if r.duration <= Rat::zero() {
                    return Err(Error::Invariant(format!("step {} has no duration", r.step)));
                }
                // which edge interior does each server occupy during
                // the open interval of this step?
                let mut occupied: Vec<Option<NodeId>> =
                    replay.iter().map(|p| occupied_edge(tree, p, p)).collect();
                for m in &r.moved {
                    occupied[m.server] = occupied_edge(tree, &m.from, &m.to);
                    replay[m.server] = m.to.clone();
                }
                if !edge_interiors_exclusive(&occupied) {
                    return Err(Error::Invariant(format!(
                        "two servers inside one edge during step {}",
                        r.step
                    )));
                }
            }
        }
        Ok(records)
    }
}
