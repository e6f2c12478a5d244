//! The per-edge potential and its step-by-step verifier.
//!
//! Every edge e = (u,v) carries a fractional server count
//! k_e = k_u + (1/len) Σ_{s∈e} d(s,v) and an excess threshold
//! ⌊β_ℓ·h_u⌋ depending on the adversary count below it. The potential
//! Φ = Σ_e (α^D_ℓ D_e + α^E_ℓ E_e) weighs deficiency and excess so
//! that adversary moves raise Φ by at most R times their cost while
//! every elementary step of the two-phase algorithm pays for itself:
//! cost + ΔΦ ≤ 0.
//!
//! β = δ^{1/d} is irrational in general, so every coefficient lives in
//! the field Q(β) and all comparisons are decided exactly; tight steps
//! whose irrational parts cancel verify as literal equalities. For
//! δ ≥ 2^d everything collapses to plain rationals. The transcript
//! rows additionally carry rational enclosures of ΔΦ and the slack for
//! human consumption.

use num::bigint::BigInt;
use num::{One, Signed, Zero};

use crate::algebraic::AlgNum;
use crate::algo::{below_server, forward_edge_of, lowest_path_server, OnlineAlgorithm};
use crate::error::{Error, Result};
use crate::interval::RatInterval;
use crate::motion::{occupied_edge, ElementaryStepRecord};
use crate::rational::{rusize, Rat};
use crate::tree::{NodeId, PointLocation, TreeMetric};
use crate::workfunction::leaf_config_distance;

/// Enclosure width used only when rendering exact values into the
/// report rows; never part of a pass/fail decision.
const REPORT_BITS: u32 = 192;

#[derive(Clone, Debug)]
pub struct PotentialParams {
    pub d: usize,
    pub h: usize,
    pub k: usize,
    pub delta: Rat,
    pub beta: AlgNum,
    pub gamma: AlgNum,
    /// β^e for e = 0..=d; β_ℓ = beta_pow[ℓ-1].
    pub beta_pow: Vec<AlgNum>,
    /// α^D_ℓ = 2ℓ−1, index ℓ-1.
    pub alpha_d: Vec<Rat>,
    /// α^E_ℓ, index ℓ-1.
    pub alpha_e: Vec<AlgNum>,
    pub r_coeff: AlgNum,
    /// ⌊β^e · m⌋ for e = 0..=d, m = 0..=h.
    floors: Vec<Vec<BigInt>>,
    /// ⌈β^e⌉ for e = 0..=d.
    ceils: Vec<BigInt>,
}

impl PotentialParams {
    pub fn new(d: usize, h: usize, k: usize) -> Result<Self> {
        if d == 0 || h == 0 {
            return Err(Error::InvalidConfig("need d >= 1 and h >= 1".into()));
        }
        let delta = rusize(k) / rusize(h);
        if delta <= Rat::one() {
            return Err(Error::InvalidConfig(format!(
                "δ = k/h = {delta} must exceed 1"
            )));
        }
        let two_pow_d = Rat::from_integer(BigInt::one() << d);
        let beta = if delta >= two_pow_d {
            AlgNum::from_int(2)
        } else {
            AlgNum::nth_root(&delta, d as u32)?
        };
        if !beta.is_ge_rat(&Rat::one())? || beta == AlgNum::from_int(1) {
            return Err(Error::Invariant("β ≤ 1".into()));
        }
        if !beta.is_le_rat(&Rat::from_integer(BigInt::from(2)))? {
            return Err(Error::Invariant("β > 2".into()));
        }
        let gamma = beta.div(&beta.sub(&AlgNum::from_int(1)))?;
        if !gamma.is_ge_rat(&Rat::from_integer(BigInt::from(2)))? {
            return Err(Error::Invariant("γ < 2".into()));
        }
        let beta_pow: Vec<AlgNum> = (0..=d as u32).map(|e| beta.pow(e)).collect();
        let alpha_d: Vec<Rat> = (1..=d).map(|l| rusize(2 * l - 1)).collect();

        let beta_d = &beta_pow[d - 1];
        let delta_alg = AlgNum::from_rat(delta.clone());
        let margin = delta_alg.sub(beta_d);
        if !margin.is_ge_rat(&Rat::zero())? || margin.is_zero() {
            return Err(Error::Invariant("δ ≤ β_d makes α^E_d undefined".into()));
        }
        let alpha_e_d = delta_alg
            .div(&margin)?
            .mul(&AlgNum::from_int(3).add(&beta_d.mul_rat(&(&alpha_d[d - 1] / &delta))));
        let mut alpha_e = vec![AlgNum::from_int(0); d];
        alpha_e[d - 1] = alpha_e_d;
        for l in (1..d).rev() {
            // α^E_ℓ = Σ_{i=ℓ}^{d−1} γ^{i−ℓ+1}(2 + α^D_i/β) + γ^{d−ℓ}·α^E_d
            let mut acc = gamma.pow((d - l) as u32).mul(&alpha_e[d - 1]);
            for i in l..d {
                let term =
                    AlgNum::from_int(2).add(&AlgNum::from_rat(alpha_d[i - 1].clone()).div(&beta)?);
                acc = acc.add(&gamma.pow((i - l + 1) as u32).mul(&term));
            }
            alpha_e[l - 1] = acc;
        }
        for l in 1..d {
            if alpha_e[l - 1].is_le(&alpha_e[l])? {
                return Err(Error::Invariant(format!("α^E_{} ≥ α^E_{}", l + 1, l)));
            }
        }

        let mut floors = Vec::with_capacity(d + 1);
        let mut ceils = Vec::with_capacity(d + 1);
        for bp in beta_pow.iter().take(d + 1) {
            let row: Result<Vec<BigInt>> = (0..=h).map(|m| bp.floor_mul_usize(m)).collect();
            floors.push(row?);
            ceils.push(bp.ceil()?);
        }

        let mut r_coeff = AlgNum::from_int(0);
        for l in 1..=d {
            let c = Rat::from_integer(ceils[l - 1].clone());
            r_coeff = r_coeff
                .max(&AlgNum::from_rat(&c * &alpha_d[l - 1]))?
                .max(&alpha_e[l - 1].mul_rat(&c))?;
        }

        Ok(Self {
            d,
            h,
            k,
            delta,
            beta,
            gamma,
            beta_pow,
            alpha_d,
            alpha_e,
            r_coeff,
            floors,
            ceils,
        })
    }

    /// ⌊β^exp · m⌋ as an exact rational.
    pub fn floor_exp(&self, exp: usize, m: usize) -> Rat {
        Rat::from_integer(self.floors[exp][m].clone())
    }

    /// Excess threshold ⌊β_ℓ · h_u⌋ for a level-ℓ edge.
    pub fn threshold(&self, level: usize, h_u: usize) -> Rat {
        self.floor_exp(level - 1, h_u)
    }

    /// ⌈β_ℓ⌉ as an exact rational.
    pub fn ceil_beta(&self, level: usize) -> Rat {
        Rat::from_integer(self.ceils[level - 1].clone())
    }
}

/// D_e, E_e and the quantities they are built from, for one edge.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeTerms {
    pub level: usize,
    pub k_u: usize,
    pub h_u: usize,
    pub k_e: Rat,
    pub deficiency: Rat,
    pub excess: Rat,
}

/// Per-edge potential terms, indexed by the edge's lower node id
/// (entry 0 belongs to the root and stays zero).
pub fn edge_terms(
    tree: &TreeMetric,
    online: &[PointLocation],
    adversary: &[NodeId],
    params: &PotentialParams,
) -> Result<Vec<EdgeTerms>> {
    let zero = EdgeTerms {
        level: 0,
        k_u: 0,
        h_u: 0,
        k_e: Rat::zero(),
        deficiency: Rat::zero(),
        excess: Rat::zero(),
    };
    let mut out = vec![zero; tree.len()];
    for (child, slot) in out.iter_mut().enumerate().skip(1) {
        let len = tree.edge_length(child).clone();
        let level = tree.edge_level(child);
        let sub = PointLocation::AtNode(child);
        let k_u = online
            .iter()
            .filter(|p| tree.in_subtree(&sub, p, false))
            .count();
        let mut interior = Rat::zero();
        for p in online {
            if let PointLocation::OnEdge { edge, offset } = p {
                if *edge == child {
                    interior += &len - offset; // d(s, v) to the upper endpoint
                }
            }
        }
        let k_e = rusize(k_u) + interior / &len;
        let h_u = adversary
            .iter()
            .filter(|&&l| tree.is_ancestor_or_self(child, l))
            .count();
        let threshold = params.threshold(level, h_u);
        let excess = (&k_e - &threshold).max(Rat::zero()) * &len;
        let deficiency = (&threshold - &k_e).max(Rat::zero()) * &len;
        *slot = EdgeTerms {
            level,
            k_u,
            h_u,
            k_e,
            deficiency,
            excess,
        };
    }
    Ok(out)
}

pub fn phi_of_terms(terms: &[EdgeTerms], params: &PotentialParams) -> AlgNum {
    let mut phi = AlgNum::from_int(0);
    for t in terms {
        if t.level == 0 {
            continue;
        }
        phi = phi
            .add(&AlgNum::from_rat(
                &params.alpha_d[t.level - 1] * &t.deficiency,
            ))
            .add(&params.alpha_e[t.level - 1].mul_rat(&t.excess));
    }
    phi
}

pub fn compute_phi(
    tree: &TreeMetric,
    online: &[PointLocation],
    adversary: &[NodeId],
    params: &PotentialParams,
) -> Result<AlgNum> {
    Ok(phi_of_terms(
        &edge_terms(tree, online, adversary, params)?,
        params,
    ))
}

#[derive(Clone, Debug)]
pub struct AdversaryCheck {
    pub cost: Rat,
    pub dphi: RatInterval,
    /// cost + ΔΦ − R·cost ≤ 0 ⟺ ΔΦ ≤ R·cost; slack = ΔΦ − R·cost.
    pub slack: RatInterval,
    pub ok: bool,
    pub violations: Vec<String>,
}

/// Checks ΔΦ ≤ R·cost for an adversary move, plus the per-edge bound:
/// a net change of Δh adversary servers below a level-ℓ edge of length
/// x changes D_e and E_e by at most ⌈β_ℓ⌉·Δh·x each.
pub fn verify_adversary_move(
    tree: &TreeMetric,
    params: &PotentialParams,
    online: &[PointLocation],
    adv_before: &[NodeId],
    adv_after: &[NodeId],
    opt_cost: &Rat,
) -> Result<AdversaryCheck> {
    let before = edge_terms(tree, online, adv_before, params)?;
    let after = edge_terms(tree, online, adv_after, params)?;
    let mut violations = Vec::new();
    for child in 1..tree.len() {
        let (b, a) = (&before[child], &after[child]);
        let dh = a.h_u.abs_diff(b.h_u);
        let cap = params.ceil_beta(b.level) * rusize(dh) * tree.edge_length(child);
        let dd = (&a.deficiency - &b.deficiency).abs();
        let de = (&a.excess - &b.excess).abs();
        if dd > cap || de > cap {
            violations.push(format!(
                "edge {child}: |ΔD|={dd}, |ΔE|={de} exceed ⌈β_ℓ⌉·|Δh|·len = {cap}"
            ));
        }
    }
    let dphi = phi_of_terms(&after, params).sub(&phi_of_terms(&before, params));
    let slack = dphi.sub(&params.r_coeff.mul_rat(opt_cost));
    if !slack.is_le_rat(&Rat::zero())? {
        violations.push("ΔΦ > R·cost".into());
    }
    let ok = violations.is_empty();
    Ok(AdversaryCheck {
        cost: opt_cost.clone(),
        dphi: dphi.enclosure(REPORT_BITS)?,
        slack: slack.enclosure(REPORT_BITS)?,
        ok,
        violations,
    })
}

#[derive(Clone, Debug)]
pub struct StepCheck {
    pub step: usize,
    pub phase: String,
    pub case_label: String,
    pub cost: Rat,
    pub dphi: RatInterval,
    /// cost + ΔΦ; the step passes when slack ≤ 0 across the enclosure.
    pub slack: RatInterval,
    pub ok: bool,
    pub violations: Vec<String>,
}

/// Which lemma case covers this step: the Phase-1 split on
/// k_u vs ⌊β·h_u⌋, or the Phase-2 split on k_q^- vs ⌊β_ℓ·h_q^-⌋
/// at the level of the edge q travels.
pub fn classify_case(
    tree: &TreeMetric,
    params: &PotentialParams,
    online: &[PointLocation],
    adversary: &[NodeId],
    request: NodeId,
    phase: &str,
) -> Result<String> {
    match phase {
        "1" => {
            let u = tree.elementary_root(request)?;
            let sub = PointLocation::AtNode(u);
            let k_u = online
                .iter()
                .filter(|p| tree.in_subtree(&sub, p, false))
                .count();
            let h_u = adversary
                .iter()
                .filter(|&&l| tree.is_ancestor_or_self(u, l))
                .count();
            if rusize(k_u) >= params.floor_exp(1, h_u) {
                Ok("L5C1".into())
            } else {
                Ok("L5C2".into())
            }
        }
        "2" => {
            let q = lowest_path_server(tree, online, request)
                .ok_or_else(|| Error::Invariant("Phase 2 without a path server".into()))?;
            let q_pos = online[q].clone();
            let k_qm = online
                .iter()
                .filter(|p| below_server(tree, &q_pos, request, p))
                .count();
            let h_qm = adversary
                .iter()
                .filter(|&&l| below_server(tree, &q_pos, request, &PointLocation::AtNode(l)))
                .count();
            let level = tree.edge_level(forward_edge_of(tree, &q_pos, request));
            if rusize(k_qm) >= params.threshold(level, h_qm) {
                Ok("L6C1".into())
            } else {
                Ok("L6C2".into())
            }
        }
        other => Err(Error::InvalidConfig(format!("unknown phase label {other}"))),
    }
}

/// Checks one elementary step of the online algorithm: exact
/// cost + ΔΦ ≤ 0, the single-edge movement rule (each mover changes
/// exactly one of D_e/E_e of its edge by exactly its displacement,
/// everything else stays put), and the no-sign-flip rule for edges
/// holding a server.
pub fn verify_algorithm_step(
    tree: &TreeMetric,
    params: &PotentialParams,
    record: &ElementaryStepRecord,
    online_before: &[PointLocation],
    adversary: &[NodeId],
    request: NodeId,
) -> Result<StepCheck> {
    let mut online_after = online_before.to_vec();
    let mut mover_edges: Vec<(NodeId, Rat)> = Vec::new();
    for m in &record.moved {
        if online_before[m.server] != m.from {
            return Err(Error::InvalidConfig(format!(
                "record does not start at the given state for server {}",
                m.server
            )));
        }
        online_after[m.server] = m.to.clone();
        match occupied_edge(tree, &m.from, &m.to) {
            Some(e) => mover_edges.push((e, m.displacement.clone())),
            None => {
                return Err(Error::Invariant(format!(
                    "server {} moved without an occupied edge",
                    m.server
                )))
            }
        }
    }
    let before = edge_terms(tree, online_before, adversary, params)?;
    let after = edge_terms(tree, &online_after, adversary, params)?;

    let mut violations = Vec::new();
    mover_edges.sort_by_key(|a| a.0);
    if mover_edges.windows(2).any(|w| w[0].0 == w[1].0) {
        violations.push("two movers share one edge interior".into());
    }
    for child in 1..tree.len() {
        let (b, a) = (&before[child], &after[child]);
        let dd = &a.deficiency - &b.deficiency;
        let de = &a.excess - &b.excess;
        match mover_edges.iter().find(|(e, _)| *e == child) {
            None => {
                if !dd.is_zero() || !de.is_zero() {
                    violations.push(format!("edge {child} changed without a mover inside"));
                }
            }
            Some((_, x)) => {
                let one_exact =
                    (dd.abs() == *x && de.is_zero()) || (de.abs() == *x && dd.is_zero());
                if !one_exact {
                    violations.push(format!(
                        "edge {child}: ΔD={dd}, ΔE={de}, expected exactly one change of ±{x}"
                    ));
                }
                // sign flip while a server is inside is impossible
                if (b.deficiency.is_positive() && a.excess.is_positive())
                    || (b.excess.is_positive() && a.deficiency.is_positive())
                {
                    violations.push(format!("edge {child} flipped excess sign mid-motion"));
                }
            }
        }
    }

    let dphi = phi_of_terms(&after, params).sub(&phi_of_terms(&before, params));
    let slack = dphi.add(&AlgNum::from_rat(record.cost.clone()));
    if !slack.is_le_rat(&Rat::zero())? {
        violations.push("cost + ΔΦ > 0".into());
    }
    let case_label = classify_case(
        tree,
        params,
        online_before,
        adversary,
        request,
        &record.phase,
    )?;
    let ok = violations.is_empty();
    Ok(StepCheck {
        step: record.step,
        phase: record.phase.clone(),
        case_label,
        cost: record.cost.clone(),
        dphi: dphi.enclosure(REPORT_BITS)?,
        slack: slack.enclosure(REPORT_BITS)?,
        ok,
        violations,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum LemmaOutcome {
    Passed,
    Skipped(String),
    Violated(String),
}

/// The two excess/deficiency mass bounds, evaluated on a snapshot.
///
/// Phase 1 (needs k_u ≤ ⌊β_2·h_u⌋): over the servers outside T_u,
/// partitioned by the excess sign of the edge holding them,
/// Σ_D k_s ≤ β_d(h−h_u) and Σ_E k_s ≥ k − β_d·h.
/// Phase 2 (needs k_q^- ≥ ⌊β_ℓ·h_q^-⌋): over the servers other than q,
/// Σ_D k_s ≤ k_q^-/β and Σ_E k_s ≥ k_q^-/γ.
pub fn check_excess_lemmas(
    tree: &TreeMetric,
    params: &PotentialParams,
    online: &[PointLocation],
    adversary: &[NodeId],
    request: NodeId,
    phase: &str,
) -> Result<LemmaOutcome> {
    let terms = edge_terms(tree, online, adversary, params)?;
    let k_s_of = |p: &PointLocation| -> usize {
        online
            .iter()
            .filter(|q| tree.in_subtree(p, q, false))
            .count()
    };
    let split = |servers: &[usize]| -> std::result::Result<(Rat, Rat), String> {
        let mut sum_d = Rat::zero();
        let mut sum_e = Rat::zero();
        for &s in servers {
            let edge = match &online[s] {
                PointLocation::OnEdge { edge, .. } => *edge,
                PointLocation::AtNode(_) => {
                    return Err(format!("server {s} rests at a node"));
                }
            };
            let k_s = rusize(k_s_of(&online[s]));
            if terms[edge].excess.is_positive() {
                sum_e += k_s;
            } else {
                sum_d += k_s;
            }
        }
        Ok((sum_d, sum_e))
    };

    match phase {
        "1" => {
            let u = tree.elementary_root(request)?;
            let sub = PointLocation::AtNode(u);
            let k_u = online
                .iter()
                .filter(|p| tree.in_subtree(&sub, p, false))
                .count();
            let h_u = adversary
                .iter()
                .filter(|&&l| tree.is_ancestor_or_self(u, l))
                .count();
            if rusize(k_u) > params.floor_exp(1, h_u) {
                return Ok(LemmaOutcome::Skipped(format!(
                    "precondition k_u ≤ ⌊β_2·h_u⌋ fails: {k_u} > ⌊β_2·{h_u}⌋"
                )));
            }
            let outside: Vec<usize> = (0..online.len())
                .filter(|&s| !tree.in_subtree(&sub, &online[s], false))
                .collect();
            let (sum_d, sum_e) = match split(&outside) {
                Ok(v) => v,
                Err(note) => return Ok(LemmaOutcome::Skipped(note)),
            };
            let beta_d = &params.beta_pow[params.d - 1];
            let d_bound = beta_d.mul_rat(&rusize(params.h - h_u));
            let e_bound =
                AlgNum::from_rat(rusize(params.k)).sub(&beta_d.mul_rat(&rusize(params.h)));
            if !d_bound.is_ge_rat(&sum_d)? {
                return Ok(LemmaOutcome::Violated(format!(
                    "Σ_D k_s = {sum_d} exceeds β_d(h−h_u)"
                )));
            }
            if !e_bound.is_le_rat(&sum_e)? {
                return Ok(LemmaOutcome::Violated(format!(
                    "Σ_E k_s = {sum_e} below k − β_d·h"
                )));
            }
            Ok(LemmaOutcome::Passed)
        }
        "2" => {
            let q = match lowest_path_server(tree, online, request) {
                Some(q) => q,
                None => return Ok(LemmaOutcome::Skipped("no server on the root path".into())),
            };
            let q_pos = online[q].clone();
            let k_qm = online
                .iter()
                .filter(|p| below_server(tree, &q_pos, request, p))
                .count();
            let h_qm = adversary
                .iter()
                .filter(|&&l| below_server(tree, &q_pos, request, &PointLocation::AtNode(l)))
                .count();
            let level = tree.edge_level(forward_edge_of(tree, &q_pos, request));
            if rusize(k_qm) < params.threshold(level, h_qm) {
                return Ok(LemmaOutcome::Skipped(format!(
                    "precondition k_q^- ≥ ⌊β_{level}·h_q^-⌋ fails"
                )));
            }
            let others: Vec<usize> = (0..online.len()).filter(|&s| s != q).collect();
            let (sum_d, sum_e) = match split(&others) {
                Ok(v) => v,
                Err(note) => return Ok(LemmaOutcome::Skipped(note)),
            };
            let kqm = rusize(k_qm);
            let d_bound = AlgNum::from_rat(kqm.clone()).div(&params.beta)?;
            let e_bound = AlgNum::from_rat(kqm).div(&params.gamma)?;
            if !d_bound.is_ge_rat(&sum_d)? {
                return Ok(LemmaOutcome::Violated(format!(
                    "Σ_D k_s = {sum_d} exceeds k_q^-/β"
                )));
            }
            if !e_bound.is_le_rat(&sum_e)? {
                return Ok(LemmaOutcome::Violated(format!(
                    "Σ_E k_s = {sum_e} below k_q^-/γ"
                )));
            }
            Ok(LemmaOutcome::Passed)
        }
        other => Err(Error::InvalidConfig(format!("unknown phase label {other}"))),
    }
}

/// Every weighted coefficient stays below c·d·γ^{d+1}; the constant is
/// derived from chaining ⌈β_ℓ⌉ ≤ 2β^{ℓ-1} ≤ 2γ^{ℓ-1}, α^E_d ≤ 4dγ and
/// α^E_ℓ ≤ 5d·γ^{d-ℓ+2}.
pub fn coefficient_growth_bound(params: &PotentialParams, c: &Rat) -> Result<bool> {
    let bound = params
        .gamma
        .pow(params.d as u32 + 1)
        .mul_rat(&(c * rusize(params.d)));
    for l in 1..=params.d {
        let cb = params.ceil_beta(l);
        let wd = AlgNum::from_rat(&cb * &params.alpha_d[l - 1]);
        let we = params.alpha_e[l - 1].mul_rat(&cb);
        if !wd.is_le(&bound)? || !we.is_le(&bound)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One row of the verification transcript: either an adversary move
/// (phase "adv") or one elementary step of the algorithm.
#[derive(Clone, Debug)]
pub struct VerifyRow {
    pub step: usize,
    pub phase: String,
    pub case_label: String,
    pub cost: Rat,
    pub dphi: RatInterval,
    pub slack: RatInterval,
    pub ok: bool,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub rows: Vec<VerifyRow>,
    pub phi_start: RatInterval,
    pub phi_end: RatInterval,
    pub lemma_skips: usize,
    /// Rows flagged by the excess-mass lemma instrumentation; they
    /// count into `ok` but can also be inspected separately from the
    /// step and adversary inequalities.
    pub lemma_violations: usize,
    pub ok: bool,
}

/// Replays a full run: for each request the adversary first moves to
/// its scheduled configuration (ΔΦ ≤ R·cost), then the algorithm
/// serves it and every elementary step is checked for cost + ΔΦ ≤ 0.
/// The excess-mass lemmas are evaluated on each pre-service snapshot.
pub fn verify_run(
    tree: &TreeMetric,
    params: &PotentialParams,
    algorithm: &mut dyn OnlineAlgorithm,
    online_start: &[PointLocation],
    adversary_start: &[NodeId],
    schedule: &[Vec<NodeId>],
    requests: &[NodeId],
) -> Result<RunReport> {
    if schedule.len() != requests.len() {
        return Err(Error::InvalidConfig(
            "schedule must contain one configuration per request".into(),
        ));
    }
    let mut online = online_start.to_vec();
    let mut adversary = adversary_start.to_vec();
    let phi_start = compute_phi(tree, &online, &adversary, params)?;
    let mut rows = Vec::new();
    let mut lemma_skips = 0usize;
    let mut lemma_violations = 0usize;
    let mut ok = true;
    let mut step_counter = 0usize;
    for (i, (&r, target)) in requests.iter().zip(schedule).enumerate() {
        if !target.contains(&r) {
            return Err(Error::InvalidConfig(format!(
                "schedule configuration {i} does not cover its request"
            )));
        }
        let move_cost = leaf_config_distance(tree, &adversary, target)?;
        let adv = verify_adversary_move(tree, params, &online, &adversary, target, &move_cost)?;
        ok &= adv.ok;
        rows.push(VerifyRow {
            step: step_counter,
            phase: "adv".into(),
            case_label: "-".into(),
            cost: adv.cost,
            dphi: adv.dphi,
            slack: adv.slack,
            ok: adv.ok,
            notes: adv.violations,
        });
        step_counter += 1;
        adversary = target.clone();

        let before = online.clone();
        let records = algorithm.serve(tree, &mut online, r)?;
        let mut state = before;
        let mut lemma_checked = false;
        for rec in &records {
            let check = verify_algorithm_step(tree, params, rec, &state, &adversary, r)?;
            if !lemma_checked {
                match check_excess_lemmas(tree, params, &state, &adversary, r, &rec.phase)? {
                    LemmaOutcome::Passed => {}
                    LemmaOutcome::Skipped(_) => lemma_skips += 1,
                    LemmaOutcome::Violated(v) => {
                        ok = false;
                        lemma_violations += 1;
                        rows.push(VerifyRow {
                            step: step_counter,
                            phase: rec.phase.clone(),
                            case_label: "lemma".into(),
                            cost: Rat::zero(),
                            dphi: RatInterval::from_int(0),
                            slack: RatInterval::from_int(0),
                            ok: false,
                            notes: vec![v],
                        });
                        step_counter += 1;
                    }
                }
                lemma_checked = true;
            }
            for m in &rec.moved {
                state[m.server] = m.to.clone();
            }
            ok &= check.ok;
            rows.push(VerifyRow {
                step: step_counter,
                phase: check.phase,
                case_label: check.case_label,
                cost: check.cost,
                dphi: check.dphi,
                slack: check.slack,
                ok: check.ok,
                notes: check.violations,
            });
            step_counter += 1;
        }
        if state != online {
            return Err(Error::Invariant(
                "records do not replay to the final state".into(),
            ));
        }
    }
    let phi_end = compute_phi(tree, &online, &adversary, params)?;
    if !phi_end.is_ge_rat(&Rat::zero())? || !phi_start.is_ge_rat(&Rat::zero())? {
        return Err(Error::Invariant("negative potential".into()));
    }
    Ok(RunReport {
        rows,
        phi_start: phi_start.enclosure(REPORT_BITS)?,
        phi_end: phi_end.enclosure(REPORT_BITS)?,
        lemma_skips,
        lemma_violations,
        ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algo::AggressiveAlgorithm;
    use crate::rational::{rat, rint};
    use crate::tree::HstSpec;
    use rand::{Rng, SeedableRng};

    fn params_d2_delta4() -> PotentialParams {
        PotentialParams::new(2, 2, 8).unwrap()
    }

    #[test]
    fn coefficients_for_depth2_delta4() {
        let p = params_d2_delta4();
        assert_eq!(p.beta, AlgNum::from_int(2));
        assert_eq!(p.gamma, AlgNum::from_int(2));
        assert_eq!(p.alpha_d, vec![rint(1), rint(3)]);
        // α^E_2 = (4/2)(3 + (2/4)·3) = 9; α^E_1 = 2(2 + 1/2) + 2·9 = 23
        assert_eq!(p.alpha_e[1], AlgNum::from_int(9));
        assert_eq!(p.alpha_e[0], AlgNum::from_int(23));
        // R = max(⌈1⌉·1, ⌈1⌉·23, ⌈2⌉·3, ⌈2⌉·9) = 23
        assert_eq!(p.r_coeff, AlgNum::from_int(23));
        // Phase-1 case-1 display: 2 + α^D_1/β − α^E_1/γ + α^D_2 = −6
        let display = rint(2) + rat(1, 2) - rat(23, 2) + rint(3);
        assert_eq!(display, rint(-6));
        assert!(display <= Rat::zero());
        // Phase-2 identity: α^E_1/γ = 2 + α^D_1/β + α^E_2
        assert_eq!(rat(23, 2), rint(2) + rat(1, 2) + rint(9));
    }

    #[test]
    fn irrational_beta_is_exact_in_its_field() {
        // d = 2, h = 2, k = 3: δ = 3/2 < 4, β = (3/2)^(1/2)
        let p = PotentialParams::new(2, 2, 3).unwrap();
        assert!(p.beta.as_rat().is_none());
        // β² = 3/2 as a literal equality, not an enclosure
        assert_eq!(p.beta.pow(2).as_rat(), Some(rat(3, 2)));
        assert!(p.beta.is_ge_rat(&Rat::one()).unwrap());
        // γ > 2 here since β < 2
        assert!(p.gamma.is_ge_rat(&rint(2)).unwrap());
        // α^E decreasing, α^D increasing
        assert!(p.alpha_e[1].is_le(&p.alpha_e[0]).unwrap());
        assert!(p.alpha_d[0] < p.alpha_d[1]);
        // thresholds: ⌊β·h⌋ for h = 2 is ⌊2.449…⌋ = 2
        assert_eq!(p.floor_exp(1, 2), rint(2));
        assert_eq!(p.ceil_beta(2), rint(2));
    }

    #[test]
    fn rejects_delta_at_most_one() {
        assert!(matches!(
            PotentialParams::new(2, 3, 3),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            PotentialParams::new(2, 3, 2),
            Err(Error::InvalidConfig(_))
        ));
    }

    fn star(n: usize) -> TreeMetric {
        TreeMetric::from_hst(&HstSpec {
            depth: 1,
            fanouts: vec![n],
            lengths: vec![rint(1)],
            require_geometric: false,
        })
        .unwrap()
    }

    #[test]
    fn phi_vanishes_when_every_edge_meets_its_threshold() {
        // δ = 2, β = 2, β_1 = 1: threshold of a leaf edge is h_u
        let t = star(2);
        let p = PotentialParams::new(1, 2, 4).unwrap();
        let l = t.leaves();
        let online = vec![
            PointLocation::AtNode(l[0]),
            PointLocation::AtNode(l[1]),
            PointLocation::AtNode(t.root()),
            PointLocation::AtNode(t.root()),
        ];
        let adversary = vec![l[0], l[1]];
        let phi = compute_phi(&t, &online, &adversary, &p).unwrap();
        assert!(phi.is_zero());
    }

    #[test]
    fn interior_server_excess_is_half_the_length() {
        let t = TreeMetric::from_hst(&HstSpec {
            depth: 1,
            fanouts: vec![2],
            lengths: vec![rat(1, 4)],
            require_geometric: false,
        })
        .unwrap();
        let p = PotentialParams::new(1, 1, 2).unwrap();
        let l = t.leaves();
        let online = vec![
            t.point_on_edge(l[0], rat(1, 8)).unwrap(),
            PointLocation::AtNode(t.root()),
        ];
        let terms = edge_terms(&t, &online, &[l[1]], &p).unwrap();
        let e = &terms[l[0]];
        assert_eq!(e.k_e, rat(1, 2));
        assert_eq!(e.h_u, 0);
        assert_eq!(e.excess, rat(1, 2) * rat(1, 4));
        assert_eq!(e.deficiency, Rat::zero());
    }

    #[test]
    fn adversary_move_obeys_crossing_bound() {
        let t = star(3);
        let p = PotentialParams::new(1, 2, 4).unwrap();
        let l = t.leaves();
        let online: Vec<PointLocation> = [l[0], l[0], l[1], l[1]].map(PointLocation::AtNode).into();
        // no move
        let c = verify_adversary_move(&t, &p, &online, &[l[0], l[1]], &[l[0], l[1]], &Rat::zero())
            .unwrap();
        assert!(c.ok);
        assert_eq!(c.dphi, RatInterval::from_int(0));
        // one server crosses two unit edges, cost 2
        let c =
            verify_adversary_move(&t, &p, &online, &[l[0], l[1]], &[l[0], l[2]], &rint(2)).unwrap();
        assert!(c.ok, "violations: {:?}", c.violations);
        // lying about the cost must fail
        let c = verify_adversary_move(&t, &p, &online, &[l[0], l[1]], &[l[0], l[2]], &Rat::zero())
            .unwrap();
        assert!(!c.ok);
    }

    #[test]
    fn coefficient_growth_constant_holds_on_a_grid() {
        let c = rint(10);
        for d in 1..=5usize {
            for (h, k) in [(2usize, 3usize), (4, 5), (1, 2), (2, 4), (3, 7), (8, 9)] {
                let p = PotentialParams::new(d, h, k).unwrap();
                assert!(
                    coefficient_growth_bound(&p, &c).unwrap(),
                    "bound fails for d={d}, h={h}, k={k}"
                );
            }
            let big = 1usize << d;
            let p = PotentialParams::new(d, 2, 2 * big).unwrap();
            assert!(
                coefficient_growth_bound(&p, &c).unwrap(),
                "bound fails for d={d}, δ=2^d"
            );
            let p = PotentialParams::new(d, 2, 8 * big).unwrap();
            assert!(
                coefficient_growth_bound(&p, &c).unwrap(),
                "bound fails for d={d}, δ=4·2^d"
            );
        }
    }

    #[test]
    fn aggressive_run_verifies_step_by_step() {
        // d = 2, δ = 4: exact coefficients. A fixed adversary sitting
        // on the requested leaves; requests cycle between subtrees.
        let t = TreeMetric::from_hst(&HstSpec {
            depth: 2,
            fanouts: vec![2, 2],
            lengths: vec![rat(3, 4), rat(1, 4)],
            require_geometric: true,
        })
        .unwrap();
        let p = PotentialParams::new(2, 2, 8).unwrap();
        let l = t.leaves().to_vec();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let online: Vec<PointLocation> = (0..8)
            .map(|_| PointLocation::AtNode(l[rng.gen_range(0..l.len())]))
            .collect();
        let requests: Vec<NodeId> = (0..30).map(|_| l[rng.gen_range(0..l.len())]).collect();
        // adversary: one server parked on l[0], the other chasing
        let schedule: Vec<Vec<NodeId>> = requests.iter().map(|&r| vec![l[0], r]).collect();
        let mut alg = AggressiveAlgorithm::default();
        let report = verify_run(
            &t,
            &p,
            &mut alg,
            &online,
            &[l[0], l[0]],
            &schedule,
            &requests,
        )
        .unwrap();
        let bad: Vec<_> = report.rows.iter().filter(|r| !r.ok).collect();
        assert!(report.ok, "failing rows: {bad:?}");
        // ΔΦ telescopes: Σ dphi == Φ_end − Φ_start (all exact here)
        let mut acc = report.phi_start.clone();
        for row in &report.rows {
            acc = acc.add(&row.dphi);
        }
        assert_eq!(acc, report.phi_end);
        assert!(report.phi_start.lo >= Rat::zero() && report.phi_end.lo >= Rat::zero());
    }

    #[test]
    fn excess_lemmas_never_report_false_violations() {
        // random snapshots at leaf positions; the lemma checker must
        // pass or skip (preconditions), never flag a violation
        let t = TreeMetric::from_hst(&HstSpec {
            depth: 2,
            fanouts: vec![3, 2],
            lengths: vec![rat(3, 4), rat(1, 4)],
            require_geometric: true,
        })
        .unwrap();
        let p = PotentialParams::new(2, 2, 8).unwrap();
        let l = t.leaves().to_vec();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let online: Vec<PointLocation> = (0..8)
                .map(|_| PointLocation::AtNode(l[rng.gen_range(0..l.len())]))
                .collect();
            let adversary: Vec<NodeId> = (0..2).map(|_| l[rng.gen_range(0..l.len())]).collect();
            let r = l[rng.gen_range(0..l.len())];
            for phase in ["1", "2"] {
                let out = check_excess_lemmas(&t, &p, &online, &adversary, r, phase).unwrap();
                assert!(
                    !matches!(out, LemmaOutcome::Violated(_)),
                    "unexpected violation: {out:?}"
                );
            }
        }
    }
}
