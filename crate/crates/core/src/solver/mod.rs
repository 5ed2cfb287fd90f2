//! Exact solving of the carpool MIP.
//!
//! [`solve_exact`] is a depth-first branch-and-bound over the model's columns;
//! [`brute_force`] enumerates every feasible assignment of a small instance and
//! serves as the independent oracle for it.

mod bnb;
mod brute;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::Assignment;
use crate::prompt::syntax::{as_lines, as_lines_opt};

pub use bnb::{root_lower_bound, solve_exact};
pub use brute::{brute_force, enumerate_feasible, MAX_BRUTE_USERS, MAX_BRUTE_VEHICLES};

/// Objective differences below this are treated as ties.
pub const OBJ_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    #[serde(with = "as_lines")]
    pub solution: Assignment,
    pub objective: f64,
    /// 1 for the first feasible solution found.
    pub found_order: usize,
    /// `(objective - root bound) / objective`, 0 when the objective is 0.
    pub solver_gap: f64,
    /// Nodes explored when the incumbent was found.
    pub node: u64,
    /// Excluded from serialized output so repeated solves compare byte-for-byte.
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub instance_id: String,
    pub status: SolveStatus,
    pub incumbents: Vec<Incumbent>,
    #[serde(with = "as_lines_opt")]
    pub optimal: Option<Assignment>,
    pub objective: Option<f64>,
    pub nodes_explored: u64,
    pub root_bound: f64,
    /// 0 when optimal; relative distance to the root bound otherwise.
    pub proof_gap: f64,
}

impl SolveResult {
    pub fn best(&self) -> Option<&Incumbent> {
        self.incumbents.last()
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveLimits {
    pub max_nodes: u64,
    pub max_time: Duration,
}

impl Default for SolveLimits {
    fn default() -> Self {
        Self {
            max_nodes: 10_000_000,
            max_time: Duration::from_secs(60),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error(
        "instance too large to enumerate: {vehicles} vehicles, {users} users \
         (limit {MAX_BRUTE_VEHICLES} vehicles, {MAX_BRUTE_USERS} users)"
    )]
    CapacityExceeded { vehicles: usize, users: usize },
}

pub(crate) fn solver_gap(objective: f64, lower_bound: f64) -> f64 {
    if objective <= 0.0 {
        0.0
    } else {
        ((objective - lower_bound) / objective).clamp(0.0, 1.0)
    }
}

/// Up to `k` earliest incumbents.
pub fn first_k_incumbents(result: &SolveResult, k: usize) -> &[Incumbent] {
    &result.incumbents[..k.min(result.incumbents.len())]
}
