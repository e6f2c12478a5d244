//! Exact min-cost perfect matching between two equal-size point sets.
//!
//! Costs are rationals; internally the matrix is rescaled by the LCM
//! of the denominators so the assignment runs on i128. Small instances
//! (n <= 6) are solved by brute force over permutations, larger ones
//! with the Hungarian algorithm; both are exact, so the split is only
//! about constant factors and gives the tests a cross-check for free.

use itertools::Itertools;
use num::bigint::BigInt;
use num::{Integer, One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::Rat;
use crate::tree::{PointLocation, TreeMetric};

/// Minimum total cost and one optimal assignment `left[i] -> right[perm[i]]`.
pub fn min_cost_assignment(cost: &[Vec<Rat>]) -> Result<(Rat, Vec<usize>)> {
    let n = cost.len();
    if cost.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidConfig("cost matrix must be square".into()));
    }
    if n == 0 {
        return Ok((Rat::zero(), vec![]));
    }
    let mut denom_lcm = BigInt::one();
    for row in cost {
        for c in row {
            denom_lcm = denom_lcm.lcm(c.denom());
        }
    }
    let scale = Rat::from_integer(denom_lcm.clone());
    let mut scaled = vec![vec![0i128; n]; n];
    for (i, row) in cost.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            let v = (c * &scale).to_integer();
            scaled[i][j] = v
                .to_i128()
                .ok_or_else(|| Error::GuardExceeded("matching costs overflow i128".into()))?;
        }
    }
    let (best, perm) = if n <= 6 {
        brute_force(&scaled)
    } else {
        hungarian(&scaled)
    };
    Ok((Rat::new(BigInt::from(best), denom_lcm), perm))
}

fn brute_force(c: &[Vec<i128>]) -> (i128, Vec<usize>) {
    let n = c.len();
    let mut best = i128::MAX;
    let mut best_perm = (0..n).collect_vec();
    for perm in (0..n).permutations(n) {
        let total: i128 = perm.iter().enumerate().map(|(i, &j)| c[i][j]).sum();
        if total < best {
            best = total;
            best_perm = perm;
        }
    }
    (best, best_perm)
}

/// Standard O(n^3) Hungarian algorithm with row/column potentials.
fn hungarian(a: &[Vec<i128>]) -> (i128, Vec<usize>) {
    let n = a.len();
    const INF: i128 = i128::MAX / 4;
    let mut u = vec![0i128; n + 1];
    let mut v = vec![0i128; n + 1];
    let mut p = vec![0usize; n + 1]; // column -> row (1-based rows)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    let total = (0..n).map(|i| a[i][perm[i]]).sum();
    (total, perm)
}

/// Min-cost matching between two server configurations on a tree.
pub fn config_matching_cost(
    tree: &TreeMetric,
    from: &[PointLocation],
    to: &[PointLocation],
) -> Result<(Rat, Vec<usize>)> {
    if from.len() != to.len() {
        return Err(Error::InvalidConfig("configurations differ in size".into()));
    }
    let cost: Vec<Vec<Rat>> = from
        .iter()
        .map(|p| to.iter().map(|q| tree.distance(p, q)).collect())
        .collect();
    min_cost_assignment(&cost)
}

/// Earth-mover distance between leaf multisets on a tree: sum over
/// edges of length times absolute net flow. On tree metrics this
/// equals the min-cost matching; the tests exploit that as an oracle.
pub fn tree_emd(
    tree: &TreeMetric,
    from: &[crate::tree::NodeId],
    to: &[crate::tree::NodeId],
) -> Result<Rat> {
    if from.len() != to.len() {
        return Err(Error::InvalidConfig("configurations differ in size".into()));
    }
    let mut net = vec![0i64; tree.len()];
    for &l in from {
        net[l] += 1;
    }
    for &l in to {
        net[l] -= 1;
    }
    // accumulate child flows bottom-up; ids are topologically ordered
    let mut total = Rat::zero();
    for v in (1..tree.len()).rev() {
        let flow = net[v];
        if flow != 0 {
            total += tree.edge_length(v) * crate::rational::rint(flow.abs());
        }
        net[tree.parent(v).unwrap()] += flow;
    }
    Ok(total)
}
