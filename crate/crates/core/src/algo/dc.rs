//! Double Coverage on trees: every adjacent server moves toward the
//! request at speed 1; the adjacent set is refreshed at each event.

use num::One;

use crate::error::Result;
use crate::motion::{
    adjacent_servers, serve_request, ElementaryStepRecord, Move, PlannedMove, Planner, STEP_GUARD,
};
use crate::rational::Rat;
use crate::tree::{NodeId, PointLocation, TreeMetric};

use super::OnlineAlgorithm;

pub struct DcPlanner;

impl Planner for DcPlanner {
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
                speed: Rat::one(),
            })
            .collect();
        Ok(PlannedMove {
            moves,
            phase: String::new(),
        })
    }
}

pub struct DcAlgorithm {
    pub step_guard: usize,
}

impl Default for DcAlgorithm {
    fn default() -> Self {
        Self {
            step_guard: STEP_GUARD,
        }
    }
}

impl OnlineAlgorithm for DcAlgorithm {
    fn name(&self) -> &'static str {
        "dc"
    }

    fn serve(
        &mut self,
        tree: &TreeMetric,
        online: &mut Vec<PointLocation>,
        request: NodeId,
    ) -> Result<Vec<ElementaryStepRecord>> {
        serve_request(tree, online, request, &mut DcPlanner, self.step_guard)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algo::total_cost;
    use crate::rational::{rat, rint};
    use crate::tree::HstSpec;

    #[test]
    fn lone_server_pays_the_distance() {
        let t = TreeMetric::from_hst(&HstSpec {
            depth: 1,
            fanouts: vec![3],
            lengths: vec![rint(1)],
            require_geometric: false,
        })
        .unwrap();
        let l = t.leaves();
        let mut online = vec![PointLocation::AtNode(l[0])];
        let mut dc = DcAlgorithm::default();
        let recs = dc.serve(&t, &mut online, l[2]).unwrap();
        assert_eq!(total_cost(&recs), rint(2));
        assert_eq!(online[0], PointLocation::AtNode(l[2]));
    }

    #[test]
    fn uniform_metric_moves_exactly_one_server() {
        // depth-1 tree: all servers are adjacent only until the first
        // one leaves its leaf; with distinct leaves each uncovered
        // request is served by a single mover... all adjacent servers
        // start moving but the first arrival ends the step; on a
        // uniform star all are equidistant, so all k arrive together.
        let t = TreeMetric::from_hst(&HstSpec {
            depth: 1,
            fanouts: vec![4],
            lengths: vec![rint(1)],
            require_geometric: false,
        })
        .unwrap();
        let l = t.leaves();
        let mut online = vec![PointLocation::AtNode(l[0]), PointLocation::AtNode(l[1])];
        let mut dc = DcAlgorithm::default();
        let recs = dc.serve(&t, &mut online, l[3]).unwrap();
        // both adjacent: both pay 1 to the root, then the tie rule
        // lets only server 0 descend
        assert_eq!(total_cost(&recs), rint(3));
        assert_eq!(online[0], PointLocation::AtNode(l[3]));
        assert_eq!(online[1], PointLocation::AtNode(t.root()));
    }

    #[test]
    fn inside_outside_coupling_costs() {
        // one server inside T_u near the request, one outside on the
        // root edge: both advance at speed 1 until the inside one
        // reaches u, where it lands on the outside server's path and
        // blocks it for the rest of the service
        let t = TreeMetric::from_hst(&HstSpec {
            depth: 2,
            fanouts: vec![2, 2],
            lengths: vec![rat(7, 8), rat(1, 8)],
            require_geometric: true,
        })
        .unwrap();
        let l = t.leaves();
        let u = t.parent(l[0]).unwrap();
        let mut online = vec![
            PointLocation::AtNode(l[1]),
            t.point_on_edge(u, rat(1, 2)).unwrap(),
        ];
        let mut dc = DcAlgorithm::default();
        let recs = dc.serve(&t, &mut online, l[0]).unwrap();
        // inside server reaches v after 1/4 (up 1/8, down 1/8); the
        // outside server only pays 1/8 before it is blocked at u
        assert_eq!(total_cost(&recs), rat(3, 8));
        assert_eq!(online[0], PointLocation::AtNode(l[0]));
        assert_eq!(online[1], t.point_on_edge(u, rat(3, 8)).unwrap());
    }
}
