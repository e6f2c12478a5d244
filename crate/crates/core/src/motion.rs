//! Event-driven continuous motion of servers along tree paths.
//!
//! A plan assigns each moving server a destination and a speed. All
//! planned servers move simultaneously; motion stops at the earliest
//! event, which is always a server reaching a node or its destination.
//! Event times are exact rationals, so a request's service decomposes
//! into elementary steps whose costs add up exactly.

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{fmt_rat, Rat};
use crate::tree::{NodeId, PointLocation, TreeMetric};

/// Default bound on elementary steps per request.
pub const STEP_GUARD: usize = 1_000_000;

/// Online server positions (index = server id) plus the adversary's
/// leaf positions. The adversary never leaves the leaves; online
/// servers may sit anywhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServerState {
    pub online: Vec<PointLocation>,
    pub adversary: Vec<NodeId>,
}

impl ServerState {
    pub fn new(
        tree: &TreeMetric,
        online: Vec<PointLocation>,
        adversary: Vec<NodeId>,
    ) -> Result<Self> {
        if online.is_empty() {
            return Err(Error::InvalidConfig(
                "need at least one online server".into(),
            ));
        }
        for p in &online {
            tree.validate_point(p)?;
        }
        for &a in &adversary {
            if a >= tree.len() || !tree.is_leaf(a) {
                return Err(Error::InvalidConfig(format!(
                    "adversary server off-leaf at {a}"
                )));
            }
        }
        if !adversary.is_empty() && adversary.len() > online.len() {
            return Err(Error::InvalidConfig(
                "adversary has more servers than the algorithm".into(),
            ));
        }
        Ok(Self { online, adversary })
    }

    pub fn k(&self) -> usize {
        self.online.len()
    }

    pub fn h(&self) -> usize {
        self.adversary.len()
    }
}

/// Number of online servers in T_x; `strict` excludes x itself (T_x^-).
pub fn count_online_in(
    tree: &TreeMetric,
    online: &[PointLocation],
    x: &PointLocation,
    strict: bool,
) -> usize {
    online
        .iter()
        .filter(|p| tree.in_subtree(x, p, strict))
        .count()
}

pub fn count_adversary_in(
    tree: &TreeMetric,
    adversary: &[NodeId],
    x: &PointLocation,
    strict: bool,
) -> usize {
    adversary
        .iter()
        .filter(|&&a| tree.in_subtree(x, &PointLocation::AtNode(a), strict))
        .count()
}

/// The adjacent set A: servers with no other server on their path to
/// v. Among co-located servers only the smallest id is adjacent.
pub fn adjacent_servers(tree: &TreeMetric, online: &[PointLocation], v: NodeId) -> Vec<usize> {
    let vp = PointLocation::AtNode(v);
    let mut out = Vec::new();
    'next: for (s, pos) in online.iter().enumerate() {
        for (t, other) in online.iter().enumerate() {
            if t == s {
                continue;
            }
            if other == pos {
                if t < s {
                    continue 'next;
                }
                continue;
            }
            if tree.on_path(other, pos, &vp) {
                continue 'next;
            }
        }
        out.push(s);
    }
    out
}

#[derive(Clone, Debug)]
pub struct Move {
    pub server: usize,
    pub dest: PointLocation,
    pub speed: Rat,
}

/// One planned elementary move, with a label for the step records
/// (e.g. the active phase of the algorithm).
#[derive(Clone, Debug)]
pub struct PlannedMove {
    pub moves: Vec<Move>,
    pub phase: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepEvent {
    ReachedNode(NodeId),
    ReachedRequest,
}

impl StepEvent {
    pub fn label(&self) -> String {
        match self {
            StepEvent::ReachedNode(n) => format!("reached-node:{n}"),
            StepEvent::ReachedRequest => "reached-request".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MovedServer {
    pub server: usize,
    pub displacement: Rat,
    pub from: PointLocation,
    pub to: PointLocation,
    pub arrived: bool,
}

#[derive(Clone, Debug)]
pub struct ElementaryStepRecord {
    pub step: usize,
    pub phase: String,
    pub duration: Rat,
    pub cost: Rat,
    pub event: StepEvent,
    pub moved: Vec<MovedServer>,
    /// Adjacent set and per-server subtree counts before the step.
    pub adjacent_before: Vec<usize>,
    pub k_s_before: Vec<(usize, usize)>,
}

impl ElementaryStepRecord {
    pub fn csv_row(&self) -> Vec<String> {
        let movers = self
            .moved
            .iter()
            .map(|m| format!("{}:{}", m.server, fmt_rat(&m.displacement)))
            .collect::<Vec<_>>()
            .join(" ");
        vec![
            self.step.to_string(),
            self.phase.clone(),
            fmt_rat(&self.duration),
            fmt_rat(&self.cost),
            self.event.label(),
            movers,
        ]
    }
}

enum Dir {
    Down,
    Up,
}

/// The single edge segment a move starts in: the mover travels on
/// `edge` from `offset`, decreasing it (Down) or increasing it (Up),
/// for at most `dist` before hitting a node or the destination.
struct Segment {
    edge: NodeId,
    offset: Rat,
    dir: Dir,
    dist: Rat,
}

fn segment_toward(tree: &TreeMetric, pos: &PointLocation, dest: &PointLocation) -> Result<Segment> {
    if pos == dest {
        return Err(Error::InvalidPlan(
            "mover is already at its destination".into(),
        ));
    }
    let downward = tree.in_subtree(pos, dest, true);
    match pos {
        PointLocation::AtNode(n) => {
            if downward {
                // descend into the child edge leading to dest
                let mut c = dest.anchor();
                while tree.parent(c) != Some(*n) {
                    c = tree.parent(c).ok_or_else(|| {
                        Error::InvalidPlan("destination not reachable downward".into())
                    })?;
                }
                let len = tree.edge_length(c).clone();
                let dist = match dest {
                    PointLocation::OnEdge { edge, offset } if *edge == c => &len - offset,
                    _ => len.clone(),
                };
                Ok(Segment {
                    edge: c,
                    offset: len,
                    dir: Dir::Down,
                    dist,
                })
            } else {
                let Some(_) = tree.parent(*n) else {
                    return Err(Error::InvalidPlan(
                        "root mover with no downward destination".into(),
                    ));
                };
                let dist = match dest {
                    PointLocation::OnEdge { edge, offset } if edge == n => offset.clone(),
                    _ => tree.edge_length(*n).clone(),
                };
                Ok(Segment {
                    edge: *n,
                    offset: Rat::zero(),
                    dir: Dir::Up,
                    dist,
                })
            }
        }
        PointLocation::OnEdge { edge, offset } => {
            if downward {
                let dist = match dest {
                    PointLocation::OnEdge {
                        edge: e2,
                        offset: o2,
                    } if e2 == edge => offset - o2,
                    _ => offset.clone(),
                };
                Ok(Segment {
                    edge: *edge,
                    offset: offset.clone(),
                    dir: Dir::Down,
                    dist,
                })
            } else {
                let dist = match dest {
                    PointLocation::OnEdge {
                        edge: e2,
                        offset: o2,
                    } if e2 == edge => o2 - offset,
                    _ => tree.edge_length(*edge) - offset,
                };
                Ok(Segment {
                    edge: *edge,
                    offset: offset.clone(),
                    dir: Dir::Up,
                    dist,
                })
            }
        }
    }
}

pub struct AdvanceOutcome {
    pub duration: Rat,
    pub cost: Rat,
    pub moved: Vec<MovedServer>,
}

/// Moves all planned servers simultaneously until the first of them
/// reaches a node or its destination. Positions are updated in place.
pub fn advance(
    tree: &TreeMetric,
    online: &mut [PointLocation],
    moves: &[Move],
) -> Result<AdvanceOutcome> {
    if moves.is_empty() {
        return Err(Error::InvalidPlan("empty move plan".into()));
    }
    let mut seen = vec![false; online.len()];
    let mut segments = Vec::with_capacity(moves.len());
    for m in moves {
        if m.server >= online.len() {
            return Err(Error::InvalidPlan(format!("unknown server {}", m.server)));
        }
        if seen[m.server] {
            return Err(Error::InvalidPlan(format!(
                "server {} planned twice",
                m.server
            )));
        }
        seen[m.server] = true;
        if !m.speed.is_positive() {
            return Err(Error::InvalidPlan(
                "speeds must be positive; omit idle servers".into(),
            ));
        }
        tree.validate_point(&m.dest)?;
        segments.push(segment_toward(tree, &online[m.server], &m.dest)?);
    }
    let duration = moves
        .iter()
        .zip(&segments)
        .map(|(m, s)| &s.dist / &m.speed)
        .min()
        .expect("non-empty plan");
    debug_assert!(duration.is_positive());

    let mut cost = Rat::zero();
    let mut moved = Vec::with_capacity(moves.len());
    for (m, seg) in moves.iter().zip(&segments) {
        let travel = &m.speed * &duration;
        debug_assert!(travel <= seg.dist);
        let new_offset = match seg.dir {
            Dir::Down => &seg.offset - &travel,
            Dir::Up => &seg.offset + &travel,
        };
        let from = online[m.server].clone();
        // point_on_edge canonicalizes node arrivals
        let to = tree.point_on_edge(seg.edge, new_offset)?;
        online[m.server] = to.clone();
        cost += &travel;
        moved.push(MovedServer {
            server: m.server,
            displacement: travel.clone(),
            from,
            to,
            arrived: travel == seg.dist,
        });
    }
    Ok(AdvanceOutcome {
        duration,
        cost,
        moved,
    })
}

/// Supplies one elementary move plan at a time; re-queried after every
/// event so speeds and phases track the live configuration. Planners
/// see only the online servers.
pub trait Planner {
    fn plan(
        &mut self,
        tree: &TreeMetric,
        online: &[PointLocation],
        request: NodeId,
    ) -> Result<PlannedMove>;
}

fn classify_event(online: &[PointLocation], out: &AdvanceOutcome, v: NodeId) -> StepEvent {
    if online.contains(&PointLocation::AtNode(v)) {
        return StepEvent::ReachedRequest;
    }
    for m in &out.moved {
        if m.arrived {
            if let PointLocation::AtNode(n) = m.to {
                return StepEvent::ReachedNode(n);
            }
        }
    }
    // an arrival at an interior destination; report via its edge's
    // lower endpoint (only reachable with explicit interior dests)
    let m = out
        .moved
        .iter()
        .find(|m| m.arrived)
        .expect("some mover arrived");
    StepEvent::ReachedNode(m.to.anchor())
}

/// Serves a request: queries the planner and advances until an online
/// server sits at `v`. Returns the step records; their costs sum to
/// the total service cost.
pub fn serve_request(
    tree: &TreeMetric,
    online: &mut [PointLocation],
    v: NodeId,
    planner: &mut dyn Planner,
    step_guard: usize,
) -> Result<Vec<ElementaryStepRecord>> {
    if !tree.is_leaf(v) {
        return Err(Error::InvalidPoint(format!("request {v} is not a leaf")));
    }
    let mut records = Vec::new();
    let vp = PointLocation::AtNode(v);
    while !online.contains(&vp) {
        if records.len() >= step_guard {
            return Err(Error::StepGuard(step_guard));
        }
        let planned = planner.plan(tree, online, v)?;
        let adjacent_before = adjacent_servers(tree, online, v);
        let k_s_before = adjacent_before
            .iter()
            .map(|&s| (s, count_online_in(tree, online, &online[s], false)))
            .collect();
        let out = advance(tree, online, &planned.moves)?;
        let event = classify_event(online, &out, v);
        records.push(ElementaryStepRecord {
            step: records.len(),
            phase: planned.phase,
            duration: out.duration,
            cost: out.cost,
            event,
            moved: out.moved,
            adjacent_before,
            k_s_before,
        });
    }
    Ok(records)
}

/// The edge whose interior a server occupies while travelling from
/// `from` to `to` within one elementary step (steps never cross
/// nodes), or the edge a stationary server rests inside (from == to).
pub fn occupied_edge(
    tree: &TreeMetric,
    from: &PointLocation,
    to: &PointLocation,
) -> Option<NodeId> {
    match (from, to) {
        (PointLocation::OnEdge { edge, .. }, _) => Some(*edge),
        (PointLocation::AtNode(_), PointLocation::OnEdge { edge, .. }) => Some(*edge),
        (PointLocation::AtNode(m), PointLocation::AtNode(n)) if m != n => {
            // the traversed edge is named after its lower endpoint
            if tree.parent(*m) == Some(*n) {
                Some(*m)
            } else {
                Some(*n)
            }
        }
        _ => None,
    }
}

/// Moves each listed server to its destination at unit speed,
/// decomposed into elementary steps (used by configuration-jumping
/// algorithms such as the work-function algorithm).
pub fn serve_to_completion(
    tree: &TreeMetric,
    online: &mut [PointLocation],
    targets: &[(usize, PointLocation)],
    phase: &str,
    step_guard: usize,
) -> Result<Vec<ElementaryStepRecord>> {
    let mut records = Vec::new();
    loop {
        let moves: Vec<Move> = targets
            .iter()
            .filter(|(s, dest)| &online[*s] != dest)
            .map(|(s, dest)| Move {
                server: *s,
                dest: dest.clone(),
                speed: Rat::one(),
            })
            .collect();
        if moves.is_empty() {
            return Ok(records);
        }
        if records.len() >= step_guard {
            return Err(Error::StepGuard(step_guard));
        }
        let adjacent_before = Vec::new();
        let out = advance(tree, online, &moves)?;
        let event = match out.moved.iter().find(|m| m.arrived) {
            Some(m) => StepEvent::ReachedNode(m.to.anchor()),
            None => unreachable!("advance always produces an arrival"),
        };
        records.push(ElementaryStepRecord {
            step: records.len(),
            phase: phase.to_string(),
            duration: out.duration,
            cost: out.cost,
            event,
            moved: out.moved,
            adjacent_before,
            k_s_before: Vec::new(),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rint};
    use crate::tree::HstSpec;

    fn depth2(f1: usize, f2: usize, eps: Rat) -> TreeMetric {
        TreeMetric::from_hst(&HstSpec {
            depth: 2,
            fanouts: vec![f1, f2],
            lengths: vec![rint(1) - eps.clone(), eps],
            require_geometric: true,
        })
        .unwrap()
    }

    #[test]
    fn single_mover_travels_exact_distance() {
        let t = depth2(2, 1, rat(1, 4));
        let v = t.leaves()[0];
        let u = t.parent(v).unwrap();
        // start at the level-1 node, 1/4 above v
        let mut online = vec![PointLocation::AtNode(u)];
        let out = advance(
            &t,
            &mut online,
            &[Move {
                server: 0,
                dest: PointLocation::AtNode(v),
                speed: rint(1),
            }],
        )
        .unwrap();
        assert_eq!(out.duration, rat(1, 4));
        assert_eq!(out.cost, rat(1, 4));
        assert_eq!(online[0], PointLocation::AtNode(v));
    }

    #[test]
    fn step_never_crosses_a_node() {
        // mover from the root toward a leaf must stop at the level-1
        // node first, even at high speed
        let t = depth2(2, 2, rat(1, 4));
        let v = t.leaves()[0];
        let mut online = vec![PointLocation::AtNode(t.root())];
        let out = advance(
            &t,
            &mut online,
            &[Move {
                server: 0,
                dest: PointLocation::AtNode(v),
                speed: rint(3),
            }],
        )
        .unwrap();
        assert_eq!(online[0], PointLocation::AtNode(t.parent(v).unwrap()));
        assert_eq!(out.duration, rat(1, 4)); // (3/4) / 3
    }

    #[test]
    fn simultaneous_movers_stop_at_first_event() {
        let t = depth2(2, 2, rat(1, 4));
        let (v, w) = (t.leaves()[0], t.leaves()[3]);
        let u = t.parent(v).unwrap();
        // fast server 1/4 from v, slow server across the tree
        let mut online = vec![PointLocation::AtNode(u), PointLocation::AtNode(w)];
        let out = advance(
            &t,
            &mut online,
            &[
                Move {
                    server: 0,
                    dest: PointLocation::AtNode(v),
                    speed: rint(1),
                },
                Move {
                    server: 1,
                    dest: PointLocation::AtNode(v),
                    speed: rat(1, 2),
                },
            ],
        )
        .unwrap();
        assert_eq!(out.duration, rat(1, 4));
        assert_eq!(online[0], PointLocation::AtNode(v));
        // slow mover displaced exactly speed * duration, now interior
        assert_eq!(online[1], t.point_on_edge(w, rat(1, 8)).unwrap());
        assert_eq!(out.cost, rat(1, 4) + rat(1, 8));
        let m1 = &out.moved[1];
        assert_eq!(m1.displacement, rat(1, 8));
        assert!(!m1.arrived && out.moved[0].arrived);
    }

    #[test]
    fn adjacency_blocking_and_ties() {
        let t = depth2(2, 2, rat(1, 4));
        let v = t.leaves()[0];
        let u = t.parent(v).unwrap();
        // s0 on the root edge above u, s1 at u: s1 blocks s0
        let online = vec![
            t.point_on_edge(u, rat(1, 2)).unwrap(),
            PointLocation::AtNode(u),
        ];
        assert_eq!(adjacent_servers(&t, &online, v), vec![1]);
        // co-located: only min id
        let online = vec![PointLocation::AtNode(u), PointLocation::AtNode(u)];
        assert_eq!(adjacent_servers(&t, &online, v), vec![0]);
        // servers in sibling subtrees are both adjacent
        let online = vec![
            PointLocation::AtNode(t.leaves()[1]),
            PointLocation::AtNode(t.leaves()[2]),
        ];
        assert_eq!(adjacent_servers(&t, &online, v), vec![0, 1]);
        // single server is always adjacent
        let online = vec![PointLocation::AtNode(t.leaves()[3])];
        assert_eq!(adjacent_servers(&t, &online, v), vec![0]);
    }

    struct UnitPlanner;
    impl Planner for UnitPlanner {
        fn plan(
            &mut self,
            tree: &TreeMetric,
            online: &[PointLocation],
            v: NodeId,
        ) -> Result<PlannedMove> {
            let moves = adjacent_servers(tree, online, v)
                .into_iter()
                .map(|s| Move {
                    server: s,
                    dest: PointLocation::AtNode(v),
                    speed: rint(1),
                })
                .collect();
            Ok(PlannedMove {
                moves,
                phase: String::new(),
            })
        }
    }

    #[test]
    fn serve_request_terminates_and_costs_add_up() {
        let t = depth2(3, 2, rat(1, 4));
        let v = t.leaves()[0];
        let mut online = vec![
            PointLocation::AtNode(t.leaves()[2]),
            PointLocation::AtNode(t.leaves()[4]),
        ];
        let recs = serve_request(&t, &mut online, v, &mut UnitPlanner, STEP_GUARD).unwrap();
        assert!(online.contains(&PointLocation::AtNode(v)));
        let total: Rat = recs.iter().map(|r| r.cost.clone()).sum();
        // both chase at speed 1 (1 each to the root), co-locate at the
        // root where the tie rule drops server 1, then server 0 pays
        // the final 1 alone
        assert_eq!(total, rint(3));
        for r in &recs {
            let dur = &r.duration;
            for m in &r.moved {
                assert_eq!(&m.displacement, &(dur * rint(1)));
            }
        }
        // occupied request is free
        let recs = serve_request(&t, &mut online, v, &mut UnitPlanner, STEP_GUARD).unwrap();
        assert!(recs.is_empty());
    }

    #[test]
    fn serve_to_completion_moves_all_targets() {
        let t = depth2(2, 2, rat(1, 4));
        let l = t.leaves();
        let mut online = vec![PointLocation::AtNode(l[0]), PointLocation::AtNode(l[1])];
        let targets = vec![
            (0usize, PointLocation::AtNode(l[2])),
            (1usize, PointLocation::AtNode(l[3])),
        ];
        let recs = serve_to_completion(&t, &mut online, &targets, "wfa", STEP_GUARD).unwrap();
        assert_eq!(online[0], PointLocation::AtNode(l[2]));
        assert_eq!(online[1], PointLocation::AtNode(l[3]));
        let total: Rat = recs.iter().map(|r| r.cost.clone()).sum();
        assert_eq!(total, rint(4));
    }

    #[test]
    fn rejects_bad_plans() {
        let t = depth2(2, 1, rat(1, 4));
        let v = t.leaves()[0];
        let mut online = vec![PointLocation::AtNode(v)];
        assert!(advance(&t, &mut online, &[]).is_err());
        assert!(advance(
            &t,
            &mut online,
            &[Move {
                server: 0,
                dest: PointLocation::AtNode(v),
                speed: rint(1)
            }]
        )
        .is_err()); // already there
        assert!(advance(
            &t,
            &mut online,
            &[Move {
                server: 0,
                dest: PointLocation::AtNode(t.root()),
                speed: rint(0)
            }]
        )
        .is_err()); // zero speed
    }

    #[test]
    fn subtree_counts_split_strictly() {
        let t = depth2(2, 2, rat(1, 4));
        let v = t.leaves()[0];
        let u = t.parent(v).unwrap();
        let online = vec![
            PointLocation::AtNode(u),
            PointLocation::AtNode(v),
            t.point_on_edge(v, rat(1, 8)).unwrap(),
        ];
        let x = PointLocation::AtNode(u);
        assert_eq!(count_online_in(&t, &online, &x, false), 3);
        assert_eq!(count_online_in(&t, &online, &x, true), 2);
        let adv = vec![v, t.leaves()[2]];
        assert_eq!(count_adversary_in(&t, &adv, &x, false), 1);
    }
}
