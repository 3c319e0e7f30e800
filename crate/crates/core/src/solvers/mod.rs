//! Solvers for the joint labeling + partitioning problem: an exhaustive
//! oracle for tiny graphs, two single-modality baselines (ICM labeling and
//! greedy multicut), and the joint local search.

mod crf;
mod greedy;
mod local_search;
mod oracle;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::JointSolution;

pub use crf::crf_solve;
pub use greedy::multicut_greedy;
pub use local_search::joint_local_search;
pub use oracle::{oracle_exact, ORACLE_MAX_LABELS, ORACLE_MAX_NODES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub solution: JointSolution,
    /// Joint objective of `solution`, recomputed from scratch.
    pub objective: f64,
    pub rounds: usize,
    pub moves_applied: usize,
    pub wall_time: Duration,
    /// Objective at initialization followed by the value after each applied
    /// move (local search only).
    pub trace: Vec<f64>,
}

/// Wall-clock timer for `SolveResult::wall_time`. There is no clock on
/// `wasm32-unknown-unknown`, where it always reads zero.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stopwatch {
    #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Self {
            #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
            start: std::time::Instant::now(),
        }
    }

    pub(crate) fn elapsed(&self) -> Duration {
        #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
        return self.start.elapsed();
        #[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
        Duration::ZERO
    }
}
