//! Layer replication under a tile budget.
//!
//! Given per-layer base latencies `c_l` and per-copy tile footprints `s_l`,
//! choose integer replication factors `r_l >= 1` with `sum(r_l * s_l) <= n_tiles`
//! that minimize either total latency `sum(c_l / r_l)` or bottleneck latency
//! `max(c_l / r_l)`.
//!
//! Three independent solvers are provided: combinatorial optimizers
//! ([`optimize_latency`], [`optimize_throughput`]), a branch-and-bound MILP over
//! a choice-variable linearization ([`optimize_milp`]), and exhaustive
//! enumeration ([`brute_force`]) for cross-checking on small instances.

mod brute;
mod latency;
mod milp;
mod simplex;
mod throughput;

pub use brute::{brute_force, BRUTE_FORCE_LIMIT};
pub use latency::optimize_latency;
pub use milp::{optimize_milp, optimize_milp_with_limit, MILP_NODE_LIMIT};
pub use throughput::{min_feasible_replication, optimize_throughput};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Minimize the sum of per-layer latencies.
    Latency,
    /// Minimize the largest per-layer latency.
    Throughput,
}

impl std::str::FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "latency" => Ok(Objective::Latency),
            "throughput" => Ok(Objective::Throughput),
            _ => Err(format!("unknown objective `{s}` (expected latency or throughput)")),
        }
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Objective::Latency => "latency",
            Objective::Throughput => "throughput",
        })
    }
}

#[derive(Debug, Error)]
pub enum ReplicateError {
    #[error("infeasible: one copy of every layer needs {required} tiles, budget is {available}")]
    Infeasible { required: u64, available: u64 },
    #[error("brute force search space {size} exceeds limit {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },
    #[error("MILP node limit {limit} reached")]
    IterationLimit { limit: usize, best: Option<ReplicationPlan> },
    #[error("invalid replication instance: {0}")]
    InvalidInstance(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationInstance {
    /// Base latency of one copy of each layer (any time unit).
    pub c: Vec<f64>,
    /// Tiles per copy of each layer.
    pub s: Vec<u64>,
    pub n_tiles: u64,
}

impl ReplicationInstance {
    pub fn new(c: Vec<f64>, s: Vec<u64>, n_tiles: u64) -> Result<Self, ReplicateError> {
        if c.is_empty() || c.len() != s.len() {
            return Err(ReplicateError::InvalidInstance(format!(
                "need equally many latencies and footprints, got {} and {}",
                c.len(),
                s.len()
            )));
        }
        if let Some(bad) = c.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(ReplicateError::InvalidInstance(format!("latency {bad} is not positive")));
        }
        if s.contains(&0) {
            return Err(ReplicateError::InvalidInstance("tile footprints must be at least 1".into()));
        }
        Ok(Self { c, s, n_tiles })
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn base_tiles(&self) -> u64 {
        self.s.iter().sum()
    }

    /// Tiles left after one copy of every layer.
    pub fn slack(&self) -> Result<u64, ReplicateError> {
        let required = self.base_tiles();
        self.n_tiles.checked_sub(required).ok_or(ReplicateError::Infeasible { required, available: self.n_tiles })
    }

    /// Largest replication factor layer `l` can take with every other layer at 1.
    pub fn r_max(&self, l: usize) -> Result<u64, ReplicateError> {
        Ok(1 + self.slack()? / self.s[l])
    }

    pub fn evaluate(&self, objective: Objective, r: &[u64]) -> f64 {
        match objective {
            Objective::Latency => latency_objective(&self.c, r),
            Objective::Throughput => bottleneck_objective(&self.c, r),
        }
    }

    pub fn tiles_used(&self, r: &[u64]) -> u64 {
        self.s.iter().zip(r).map(|(s, r)| s * r).sum()
    }

    pub(crate) fn plan(&self, objective: Objective, r: Vec<u64>) -> ReplicationPlan {
        let plan =
            ReplicationPlan { objective_value: self.evaluate(objective, &r), tiles_used: self.tiles_used(&r), r };
        debug_assert!(plan.r.iter().all(|&r| r >= 1));
        debug_assert!(plan.tiles_used <= self.n_tiles);
        plan
    }
}

/// `sum(c_l / r_l)`, accumulated in layer order.
pub fn latency_objective(c: &[f64], r: &[u64]) -> f64 {
    c.iter().zip(r).map(|(c, &r)| c / r as f64).sum()
}

/// `max(c_l / r_l)`.
pub fn bottleneck_objective(c: &[f64], r: &[u64]) -> f64 {
    c.iter().zip(r).map(|(c, &r)| c / r as f64).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationPlan {
    pub r: Vec<u64>,
    /// Total latency or bottleneck latency, depending on the objective.
    pub objective_value: f64,
    pub tiles_used: u64,
}

impl ReplicationPlan {
    pub fn unreplicated(inst: &ReplicationInstance, objective: Objective) -> Self {
        inst.plan(objective, vec![1; inst.len()])
    }
}

/// Solves with the combinatorial optimizer for `objective`.
pub fn optimize(inst: &ReplicationInstance, objective: Objective) -> Result<ReplicationPlan, ReplicateError> {
    match objective {
        Objective::Latency => optimize_latency(inst),
        Objective::Throughput => optimize_throughput(inst),
    }
}
