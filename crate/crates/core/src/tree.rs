//! Weighted rooted trees, point locations and exact distances.
//!
//! A depth-d tree has every leaf at depth exactly d and requests arrive
//! only at leaves; servers may nevertheless sit at any node or anywhere
//! in the interior of an edge. Edges are identified by their lower
//! (child) endpoint. Edge levels count from the leaves: leaf edges are
//! level 1, root edges level d.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{fmt_rat, parse_rat, Rat};
use num::Zero;

pub type NodeId = usize;

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub parent: Option<NodeId>,
    /// Length of the edge to the parent; meaningless for the root.
    pub length: Rat,
    pub depth: usize,
    pub children: Vec<NodeId>,
}

/// Immutable tree metric. Construct once, share freely.
#[derive(Clone, Debug)]
pub struct TreeMetric {
    nodes: Vec<TreeNode>,
    depth: usize,
    uniform_leaf_depth: bool,
    leaves: Vec<NodeId>,
    dist_root: Vec<Rat>,
    hst: Option<HstSpec>,
}

/// A point of the metric: a node, or an interior position on an edge.
/// `offset` is measured from the lower (child) endpoint and lies
/// strictly inside (0, length); endpoint positions canonicalize to
/// `AtNode`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PointLocation {
    AtNode(NodeId),
    OnEdge { edge: NodeId, offset: Rat },
}

impl PointLocation {
    /// The node anchoring this point from below: the node itself, or
    /// the lower endpoint of the edge.
    pub fn anchor(&self) -> NodeId {
        match self {
            PointLocation::AtNode(n) => *n,
            PointLocation::OnEdge { edge, .. } => *edge,
        }
    }
}

/// Recipe for a layered tree: `fanouts[i]` children per node at depth
/// i, edges at depth i+1 have length `lengths[i]` (index 0 = root
/// edges, i.e. level d).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HstSpec {
    pub depth: usize,
    pub fanouts: Vec<usize>,
    #[serde(
        serialize_with = "serialize_rat_vec",
        deserialize_with = "deserialize_rat_vec"
    )]
    pub lengths: Vec<Rat>,
    /// Require lengths to decrease from root to leaves (the HST
    /// property); plain depth-d trees leave this off.
    #[serde(default)]
    pub require_geometric: bool,
}

fn serialize_rat_vec<S: serde::Serializer>(
    v: &[Rat],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for r in v {
        seq.serialize_element(&fmt_rat(r))?;
    }
    seq.end()
}

fn deserialize_rat_vec<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<Vec<Rat>, D::Error> {
    let raw: Vec<String> = Vec::deserialize(d)?;
    raw.iter()
        .map(|s| parse_rat(s).map_err(serde::de::Error::custom))
        .collect()
}

/// JSON file form: `{depth, nodes: [{id, parent, length: "p/q"}], hst?}`.
#[derive(Serialize, Deserialize)]
pub struct TreeFile {
    pub depth: usize,
    pub nodes: Vec<TreeFileNode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hst: Option<HstSpec>,
}

#[derive(Serialize, Deserialize)]
pub struct TreeFileNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub length: String,
}

impl TreeMetric {
    /// Builds a tree from an explicit node list. Identifiers must be
    /// dense and parents must precede children. With
    /// `uniform_leaf_depth` every leaf must sit at depth exactly
    /// `depth`; otherwise `depth` only bounds root-path edge counts.
    pub fn from_nodes(
        entries: &[(NodeId, Option<NodeId>, Rat)],
        depth: usize,
        uniform_leaf_depth: bool,
    ) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidTree("depth must be >= 1".into()));
        }
        let n = entries.len();
        let mut nodes: Vec<TreeNode> = Vec::with_capacity(n);
        let mut roots = 0usize;
        for (i, (id, parent, len)) in entries.iter().enumerate() {
            if *id != i {
                return Err(Error::InvalidTree(format!(
                    "node ids must be dense and in order; got {id} at index {i}"
                )));
            }
            let (depth_of, length) = match parent {
                None => {
                    roots += 1;
                    if *id != 0 {
                        return Err(Error::InvalidTree("root must have id 0".into()));
                    }
                    (0, Rat::zero())
                }
                Some(p) => {
                    if *p >= i {
                        return Err(Error::InvalidTree(format!(
                            "parent {p} of node {id} must precede it"
                        )));
                    }
                    if len <= &Rat::zero() {
                        return Err(Error::InvalidTree(format!(
                            "edge to node {id} has non-positive length"
                        )));
                    }
                    (nodes[*p].depth + 1, len.clone())
                }
            };
            if depth_of > depth {
                return Err(Error::InvalidTree(format!(
                    "node {id} at depth {depth_of} exceeds depth {depth}"
                )));
            }
            nodes.push(TreeNode {
                parent: *parent,
                length,
                depth: depth_of,
                children: vec![],
            });
        }
        if roots != 1 {
            return Err(Error::InvalidTree(format!(
                "expected exactly one root, got {roots}"
            )));
        }
        for i in 0..n {
            if let Some(p) = nodes[i].parent {
                nodes[p].children.push(i);
            }
        }
        let leaves: Vec<NodeId> = (0..n).filter(|&i| nodes[i].children.is_empty()).collect();
        if uniform_leaf_depth {
            for &l in &leaves {
                if nodes[l].depth != depth {
                    return Err(Error::InvalidTree(format!(
                        "leaf {l} at depth {} but depth-{depth} mode requires all leaves at depth {depth}",
                        nodes[l].depth
                    )));
                }
            }
        }
        let mut dist_root = vec![Rat::zero(); n];
        for i in 1..n {
            let p = nodes[i].parent.unwrap();
            dist_root[i] = &dist_root[p] + &nodes[i].length;
        }
        Ok(Self {
            nodes,
            depth,
            uniform_leaf_depth,
            leaves,
            dist_root,
            hst: None,
        })
    }

    /// Builds the layered tree described by `spec` (BFS ids).
    pub fn from_hst(spec: &HstSpec) -> Result<Self> {
        let d = spec.depth;
        if spec.fanouts.len() != d || spec.lengths.len() != d {
            return Err(Error::InvalidTree(
                "HstSpec needs one fanout and one length per level".into(),
            ));
        }
        if spec.fanouts.contains(&0) {
            return Err(Error::InvalidTree("fanouts must be >= 1".into()));
        }
        if spec.lengths.iter().any(|l| l <= &Rat::zero()) {
            return Err(Error::InvalidTree("edge lengths must be positive".into()));
        }
        if spec.require_geometric {
            for w in spec.lengths.windows(2) {
                if w[1] >= w[0] {
                    return Err(Error::InvalidTree(
                        "HST lengths must decrease from root to leaves".into(),
                    ));
                }
            }
        }
        let mut entries: Vec<(NodeId, Option<NodeId>, Rat)> = vec![(0, None, Rat::zero())];
        let mut frontier = vec![0usize];
        for lvl in 0..d {
            let mut next = Vec::new();
            for &p in &frontier {
                for _ in 0..spec.fanouts[lvl] {
                    let id = entries.len();
                    entries.push((id, Some(p), spec.lengths[lvl].clone()));
                    next.push(id);
                }
            }
            frontier = next;
        }
        let mut t = Self::from_nodes(&entries, d, true)?;
        t.hst = Some(spec.clone());
        Ok(t)
    }

    pub fn to_file(&self) -> TreeFile {
        TreeFile {
            depth: self.depth,
            nodes: (0..self.len())
                .map(|i| TreeFileNode {
                    id: i,
                    parent: self.nodes[i].parent,
                    length: fmt_rat(&self.nodes[i].length),
                })
                .collect(),
            hst: self.hst.clone(),
        }
    }

    pub fn from_file(f: &TreeFile) -> Result<Self> {
        let entries: Vec<(NodeId, Option<NodeId>, Rat)> = f
            .nodes
            .iter()
            .map(|n| Ok((n.id, n.parent, parse_rat(&n.length)?)))
            .collect::<Result<_>>()?;
        // Node-list files describe depth-d trees when every leaf lands
        // at the stated depth; otherwise treat as bounded-diameter.
        let t = Self::from_nodes(&entries, f.depth, false)?;
        let uniform = t.leaves.iter().all(|&l| t.nodes[l].depth == f.depth);
        let mut t = Self::from_nodes(&entries, f.depth, uniform)?;
        t.hst = f.hst.clone();
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn uniform_leaf_depth(&self) -> bool {
        self.uniform_leaf_depth
    }

    pub fn hst_spec(&self) -> Option<&HstSpec> {
        self.hst.as_ref()
    }

    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn is_leaf(&self, n: NodeId) -> bool {
        self.nodes[n].children.is_empty()
    }

    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        self.nodes[n].parent
    }

    pub fn children(&self, n: NodeId) -> &[NodeId] {
        &self.nodes[n].children
    }

    pub fn node_depth(&self, n: NodeId) -> usize {
        self.nodes[n].depth
    }

    /// Length of the edge identified by its child endpoint.
    pub fn edge_length(&self, child: NodeId) -> &Rat {
        &self.nodes[child].length
    }

    /// Level of the edge above `child`: d − depth(parent).
    pub fn edge_level(&self, child: NodeId) -> usize {
        self.depth - self.nodes[child].depth + 1
    }

    pub fn min_edge_length(&self) -> Option<Rat> {
        (1..self.len()).map(|i| self.nodes[i].length.clone()).min()
    }

    pub fn dist_to_root(&self, n: NodeId) -> &Rat {
        &self.dist_root[n]
    }

    /// The elementary-subtree root (level-1 node) above a leaf.
    pub fn elementary_root(&self, leaf: NodeId) -> Result<NodeId> {
        if !self.is_leaf(leaf) {
            return Err(Error::InvalidPoint(format!("node {leaf} is not a leaf")));
        }
        self.parent(leaf)
            .ok_or_else(|| Error::InvalidTree("single-node tree has no edges".into()))
    }

    /// Is `a` an ancestor of `b` (or equal)?
    pub fn is_ancestor_or_self(&self, a: NodeId, b: NodeId) -> bool {
        let mut cur = b;
        loop {
            if cur == a {
                return true;
            }
            match self.nodes[cur].parent {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    pub fn lca(&self, a: NodeId, b: NodeId) -> NodeId {
        let (mut a, mut b) = (a, b);
        while self.nodes[a].depth > self.nodes[b].depth {
            a = self.nodes[a].parent.unwrap();
        }
        while self.nodes[b].depth > self.nodes[a].depth {
            b = self.nodes[b].parent.unwrap();
        }
        while a != b {
            a = self.nodes[a].parent.unwrap();
            b = self.nodes[b].parent.unwrap();
        }
        a
    }

    pub fn node_distance(&self, a: NodeId, b: NodeId) -> Rat {
        let l = self.lca(a, b);
        &self.dist_root[a] + &self.dist_root[b] - &self.dist_root[l] - &self.dist_root[l]
    }

    /// Canonical interior point: endpoints fold into `AtNode`.
    pub fn point_on_edge(&self, edge: NodeId, offset: Rat) -> Result<PointLocation> {
        let len = self.edge_length(edge);
        if self.nodes[edge].parent.is_none() {
            return Err(Error::InvalidPoint("root has no parent edge".into()));
        }
        if offset < Rat::zero() || &offset > len {
            return Err(Error::InvalidPoint("edge offset out of range".into()));
        }
        if offset.is_zero() {
            Ok(PointLocation::AtNode(edge))
        } else if &offset == len {
            Ok(PointLocation::AtNode(self.nodes[edge].parent.unwrap()))
        } else {
            Ok(PointLocation::OnEdge { edge, offset })
        }
    }

    pub fn validate_point(&self, p: &PointLocation) -> Result<()> {
        match p {
            PointLocation::AtNode(n) => {
                if *n >= self.len() {
                    return Err(Error::InvalidPoint(format!("node {n} out of range")));
                }
            }
            PointLocation::OnEdge { edge, offset } => {
                if *edge >= self.len() || self.nodes[*edge].parent.is_none() {
                    return Err(Error::InvalidPoint(format!("edge {edge} out of range")));
                }
                if offset <= &Rat::zero() || offset >= self.edge_length(*edge) {
                    return Err(Error::InvalidPoint(
                        "interior offset must lie strictly inside the edge".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn point_dist_to_root(&self, p: &PointLocation) -> Rat {
        match p {
            PointLocation::AtNode(n) => self.dist_root[*n].clone(),
            PointLocation::OnEdge { edge, offset } => &self.dist_root[*edge] - offset,
        }
    }

    fn node_point_distance(&self, a: NodeId, q: &PointLocation) -> Rat {
        match q {
            PointLocation::AtNode(b) => self.node_distance(a, *b),
            PointLocation::OnEdge { edge, offset } => {
                let u = *edge;
                if self.is_ancestor_or_self(u, a) {
                    self.node_distance(a, u) + offset
                } else {
                    let v = self.nodes[u].parent.unwrap();
                    self.node_distance(a, v) + (self.edge_length(u) - offset)
                }
            }
        }
    }

    /// Exact length of the unique path between two points.
    pub fn distance(&self, p: &PointLocation, q: &PointLocation) -> Rat {
        match (p, q) {
            (PointLocation::AtNode(a), _) => self.node_point_distance(*a, q),
            (_, PointLocation::AtNode(b)) => self.node_point_distance(*b, p),
            (
                PointLocation::OnEdge {
                    edge: e1,
                    offset: o1,
                },
                PointLocation::OnEdge {
                    edge: e2,
                    offset: o2,
                },
            ) => {
                if e1 == e2 {
                    return if o1 >= o2 { o1 - o2 } else { o2 - o1 };
                }
                let u = *e1;
                if self.is_ancestor_or_self(u, *e2) {
                    // q hangs below p's edge
                    o1 + self.node_point_distance(u, q)
                } else {
                    let v = self.nodes[u].parent.unwrap();
                    (self.edge_length(u) - o1) + self.node_point_distance(v, q)
                }
            }
        }
    }

    /// Does `p` lie in T_x, the subtree of all points below `x`
    /// including `x` itself? With `strict`, `x` itself is excluded
    /// (T_x^-).
    pub fn in_subtree(&self, x: &PointLocation, p: &PointLocation, strict: bool) -> bool {
        if strict && p == x {
            return false;
        }
        match x {
            PointLocation::AtNode(n) => match p {
                PointLocation::AtNode(b) => self.is_ancestor_or_self(*n, *b),
                PointLocation::OnEdge { edge, .. } => {
                    *edge != *n && self.is_ancestor_or_self(*n, *edge)
                }
            },
            PointLocation::OnEdge {
                edge: xe,
                offset: xo,
            } => match p {
                PointLocation::AtNode(b) => self.is_ancestor_or_self(*xe, *b),
                PointLocation::OnEdge { edge, offset } => {
                    if edge == xe {
                        offset <= xo
                    } else {
                        *edge != *xe && self.is_ancestor_or_self(*xe, *edge)
                    }
                }
            },
        }
    }

    /// Is `p` on the closed path between points `a` and `b`?
    pub fn on_path(&self, p: &PointLocation, a: &PointLocation, b: &PointLocation) -> bool {
        self.distance(a, p) + self.distance(p, b) == self.distance(a, b)
    }

    /// Embeds a bounded-diameter tree (≤ d edges on any root path)
    /// into a depth-d tree by attaching short fake paths: every node v
    /// gains a descendant leaf v' at total extra distance eps*alpha/2,
    /// alpha being the shortest edge length. Returns the new tree and
    /// the map v -> v'.
    pub fn embed_bounded_diameter(&self, eps: &Rat) -> Result<(TreeMetric, Vec<NodeId>)> {
        if eps <= &Rat::zero() {
            return Err(Error::InvalidConfig("embedding requires eps > 0".into()));
        }
        let d = self.depth;
        let alpha = self
            .min_edge_length()
            .ok_or_else(|| Error::InvalidTree("tree has no edges".into()))?;
        let stub_total = eps * &alpha / crate::rational::rint(2);
        let mut entries: Vec<(NodeId, Option<NodeId>, Rat)> = (0..self.len())
            .map(|i| (i, self.nodes[i].parent, self.nodes[i].length.clone()))
            .collect();
        let mut map = vec![0usize; self.len()];
        for (v, target) in map.iter_mut().enumerate() {
            let missing = d - self.nodes[v].depth;
            if missing == 0 {
                *target = v;
                continue;
            }
            let seg = &stub_total / crate::rational::rusize(missing);
            let mut parent = v;
            for _ in 0..missing {
                let id = entries.len();
                entries.push((id, Some(parent), seg.clone()));
                parent = id;
            }
            *target = parent;
        }
        let t = TreeMetric::from_nodes(&entries, d, true)?;
        Ok((t, map))
    }
}

/// Render a point for logs and CSV.
pub fn fmt_point(p: &PointLocation) -> String {
    match p {
        PointLocation::AtNode(n) => format!("n{n}"),
        PointLocation::OnEdge { edge, offset } => format!("e{edge}+{}", fmt_rat(offset)),
    }
}

/// Convenience: leaf-id histogram of a list of leaves.
pub fn leaf_multiset(leaves: &[NodeId]) -> BTreeMap<NodeId, usize> {
    let mut m = BTreeMap::new();
    for &l in leaves {
        *m.entry(l).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rint};

    fn depth2_hst(subtrees: usize, leaves_per: usize, eps: Rat) -> TreeMetric {
        TreeMetric::from_hst(&HstSpec {
            depth: 2,
            fanouts: vec![subtrees, leaves_per],
            lengths: vec![rint(1) - eps.clone(), eps],
            require_geometric: true,
        })
        .unwrap()
    }

    #[test]
    fn build_depth2_hst_shape() {
        // k=16 instance: 17 elementary subtrees of 4 leaves each.
        let t = depth2_hst(17, 4, rat(1, 8));
        assert_eq!(t.len(), 1 + 17 + 68);
        assert_eq!(t.leaves().len(), 68);
        let u = t.children(0)[0];
        assert_eq!(t.edge_level(u), 2);
        assert_eq!(t.edge_length(u), &rat(7, 8));
        let leaf = t.leaves()[0];
        assert_eq!(t.edge_level(leaf), 1);
        assert_eq!(t.edge_length(leaf), &rat(1, 8));
    }

    #[test]
    fn depth1_star_is_uniform_metric() {
        let t = TreeMetric::from_hst(&HstSpec {
            depth: 1,
            fanouts: vec![5],
            lengths: vec![rint(1)],
            require_geometric: false,
        })
        .unwrap();
        assert_eq!(t.leaves().len(), 5);
        let (a, b) = (t.leaves()[0], t.leaves()[1]);
        assert_eq!(t.node_distance(a, b), rint(2));
    }

    #[test]
    fn depth3_wfa_tree_diameter() {
        let (eps, epsp) = (rat(1, 32), rat(1, 1024));
        let t = TreeMetric::from_hst(&HstSpec {
            depth: 3,
            fanouts: vec![2, 2, 2],
            lengths: vec![
                (rint(1) - eps.clone()) / rint(2),
                (eps.clone() - epsp.clone()) / rint(2),
                epsp.clone() / rint(2),
            ],
            require_geometric: true,
        })
        .unwrap();
        let leaf = t.leaves()[0];
        assert_eq!(t.dist_to_root(leaf), &rat(1, 2));
        // leaf under L vs leaf under R: diameter 1
        let l_leaf = t.leaves()[0];
        let r_leaf = *t.leaves().last().unwrap();
        assert_eq!(t.node_distance(l_leaf, r_leaf), rint(1));
        // sibling leaves
        assert_eq!(t.node_distance(t.leaves()[0], t.leaves()[1]), epsp);
    }

    #[test]
    fn distances_between_subtrees() {
        let t = depth2_hst(3, 2, rat(1, 8));
        let a = t.leaves()[0];
        let c = t.leaves()[2]; // different elementary subtree
        assert_eq!(t.node_distance(a, c), rint(2));
        assert_eq!(t.node_distance(a, a), rint(0));
        assert_eq!(t.node_distance(t.leaves()[0], t.leaves()[1]), rat(1, 4));
    }

    #[test]
    fn interior_point_distances() {
        let t = depth2_hst(2, 1, rat(1, 4));
        let u = t.children(0)[0];
        // point in the middle of the root edge above u (length 3/4)
        let p = t.point_on_edge(u, rat(3, 8)).unwrap();
        let leaf = t.children(u)[0];
        assert_eq!(t.distance(&p, &PointLocation::AtNode(leaf)), rat(5, 8));
        assert_eq!(t.distance(&p, &PointLocation::AtNode(0)), rat(3, 8));
        // canonicalization at endpoints
        assert_eq!(
            t.point_on_edge(u, rint(0)).unwrap(),
            PointLocation::AtNode(u)
        );
        assert_eq!(
            t.point_on_edge(u, rat(3, 4)).unwrap(),
            PointLocation::AtNode(0)
        );
        assert!(t.point_on_edge(u, rint(1)).is_err());
    }

    #[test]
    fn metric_axioms_exhaustive_small() {
        let t = depth2_hst(3, 3, rat(1, 8));
        let pts: Vec<PointLocation> = (0..t.len()).map(PointLocation::AtNode).collect();
        for a in &pts {
            for b in &pts {
                let dab = t.distance(a, b);
                assert_eq!(dab, t.distance(b, a));
                assert_eq!(dab.is_zero(), a == b);
                for c in &pts {
                    assert!(t.distance(a, c) <= &dab + t.distance(b, c));
                }
            }
        }
    }

    #[test]
    fn subtree_membership() {
        let t = depth2_hst(2, 2, rat(1, 8));
        let u = t.children(0)[0];
        let leaf = t.children(u)[0];
        let x = PointLocation::AtNode(u);
        assert!(t.in_subtree(&x, &PointLocation::AtNode(leaf), false));
        assert!(t.in_subtree(&x, &x, false));
        assert!(!t.in_subtree(&x, &x, true));
        // interior of the edge above u is NOT in T_u
        let above = t.point_on_edge(u, rat(1, 2)).unwrap();
        assert!(!t.in_subtree(&x, &above, false));
        // interior of a leaf edge is in T_u
        let below = t.point_on_edge(leaf, rat(1, 16)).unwrap();
        assert!(t.in_subtree(&x, &below, false));
        // region rooted at an interior point of the leaf edge
        let mid = t.point_on_edge(leaf, rat(1, 16)).unwrap();
        assert!(t.in_subtree(&mid, &PointLocation::AtNode(leaf), false));
        assert!(t.in_subtree(&mid, &t.point_on_edge(leaf, rat(1, 32)).unwrap(), false));
        assert!(!t.in_subtree(&mid, &t.point_on_edge(leaf, rat(3, 32)).unwrap(), false));
    }

    #[test]
    fn rejects_bad_trees() {
        // leaf at wrong depth in depth-d mode
        let uneven = vec![
            (0, None, rint(0)),
            (1, Some(0), rint(1)), // leaf at depth 1
            (2, Some(0), rint(1)),
            (3, Some(2), rint(1)), // leaf at depth 2
        ];
        assert!(TreeMetric::from_nodes(&uneven, 2, true).is_err());
        assert!(TreeMetric::from_nodes(&uneven, 2, false).is_ok());
        // zero length
        let zero = vec![(0, None, rint(0)), (1, Some(0), rint(0))];
        assert!(TreeMetric::from_nodes(&zero, 1, true).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let t = depth2_hst(3, 2, rat(1, 8));
        let f = t.to_file();
        let json = serde_json::to_string(&f).unwrap();
        let f2: TreeFile = serde_json::from_str(&json).unwrap();
        let t2 = TreeMetric::from_file(&f2).unwrap();
        assert_eq!(t2.len(), t.len());
        assert_eq!(
            t2.node_distance(t2.leaves()[0], t2.leaves()[3]),
            t.node_distance(t.leaves()[0], t.leaves()[3])
        );
        assert!(t2.uniform_leaf_depth());
    }

    #[test]
    fn embedding_adds_short_stubs() {
        // single-edge tree (length 1), d=2, eps=1/10, alpha=1:
        // every shallow node gains a path of total length 1/20.
        let entries = vec![(0, None, rint(0)), (1, Some(0), rint(1))];
        let t = TreeMetric::from_nodes(&entries, 2, false).unwrap();
        let (t2, map) = t.embed_bounded_diameter(&rat(1, 10)).unwrap();
        assert!(t2.uniform_leaf_depth());
        assert_eq!(t2.node_depth(map[0]), 2);
        assert_eq!(t2.node_depth(map[1]), 2);
        assert_eq!(t2.node_distance(0, map[0]), rat(1, 20));
        assert_eq!(t2.node_distance(1, map[1]), rat(1, 20));
        // node already at depth d keeps its identity
        let deep = vec![
            (0, None, rint(0)),
            (1, Some(0), rint(1)),
            (2, Some(1), rint(1)),
        ];
        let t = TreeMetric::from_nodes(&deep, 2, false).unwrap();
        let (_, map) = t.embed_bounded_diameter(&rat(1, 10)).unwrap();
        assert_eq!(map[2], 2);
        assert!(t.embed_bounded_diameter(&rint(0)).is_err());
    }

    #[test]
    fn embedding_distance_distortion_bound() {
        let entries = vec![
            (0, None, rint(0)),
            (1, Some(0), rint(1)),
            (2, Some(0), rat(1, 2)),
            (3, Some(1), rat(2, 3)),
        ];
        let t = TreeMetric::from_nodes(&entries, 3, false).unwrap();
        let eps = rat(1, 10);
        let (t2, map) = t.embed_bounded_diameter(&eps).unwrap();
        let alpha = t.min_edge_length().unwrap();
        let slack = &eps * &alpha; // 2 * eps*alpha/2
        for a in 0..t.len() {
            for b in 0..t.len() {
                let orig = t.node_distance(a, b);
                let emb = t2.node_distance(map[a], map[b]);
                assert!(emb <= &orig + &slack, "distorted pair ({a},{b})");
                assert!(emb >= orig || a == b);
            }
        }
    }
}
