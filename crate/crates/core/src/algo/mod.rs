//! Online algorithms behind a common serving contract.
//!
//! Each algorithm sees only the online servers and the current request
//! and decomposes its response into elementary step records.

use crate::error::Result;
use crate::motion::ElementaryStepRecord;
use crate::rational::Rat;
use crate::tree::{NodeId, PointLocation, TreeMetric};

mod aggressive;
mod dc;
mod wfa;

pub use aggressive::{
    below_server, forward_edge_of, lowest_path_server, AggressiveAlgorithm, AggressivePlanner,
};
pub use dc::{DcAlgorithm, DcPlanner};
pub use wfa::WfaAlgorithm;

pub trait OnlineAlgorithm {
    fn name(&self) -> &'static str;

    /// Serves one request, mutating the online configuration. The
    /// returned records partition the motion; their costs sum to the
    /// service cost.
    fn serve(
        &mut self,
        tree: &TreeMetric,
        online: &mut Vec<PointLocation>,
        request: NodeId,
    ) -> Result<Vec<ElementaryStepRecord>>;
}

pub fn total_cost(records: &[ElementaryStepRecord]) -> Rat {
    records.iter().map(|r| r.cost.clone()).sum()
}
