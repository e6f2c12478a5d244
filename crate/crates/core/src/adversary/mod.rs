//! Adversarial request generators with per-phase cost accounting.
//!
//! Each generator drives an online algorithm request by request,
//! observing the resulting configuration before choosing the next
//! request, and logs one PhaseLog per phase with the offline
//! accounting of the corresponding construction.

use crate::rational::Rat;
use crate::tree::NodeId;

mod dc;
mod general;
mod wfa;

pub use dc::{dc_adversary, dc_lower_bound_tree, parse_step_costs, DcAdversaryConfig};
pub use general::{
    general_adversary, general_lower_bound_tree, phase_case, GeneralAdversaryConfig, GeneralCase,
};
pub use wfa::{region_min_profile, wfa_adversary, wfa_lower_bound_tree, WfaAdversaryConfig};

#[derive(Clone, Debug)]
pub struct PhaseLog {
    pub phase: usize,
    pub alg_cost: Rat,
    pub adv_cost: Rat,
    pub opt_cost: Option<Rat>,
    pub requests: usize,
    pub annotations: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct AdversaryRun {
    pub trace: Vec<NodeId>,
    pub phases: Vec<PhaseLog>,
    pub alg_cost: Rat,
    pub adv_cost: Rat,
}

impl AdversaryRun {
    pub fn ratio(&self) -> Option<Rat> {
        use num::Zero;
        if self.adv_cost.is_zero() {
            None
        } else {
            Some(&self.alg_cost / &self.adv_cost)
        }
    }
}
