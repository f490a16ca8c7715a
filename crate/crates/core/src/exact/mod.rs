//! Exact optimization: an exhaustive oracle for tiny instances and a
//! depth-first branch-and-bound for the small and medium classes.

mod bnb;
mod bruteforce;
mod forest;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::{Solution, TaskTable, OBJ_TOL};

pub use bnb::{root_lower_bound, solve_bnb, solve_bnb_with, BnbOptions};
pub use bruteforce::{solve_bruteforce, solve_bruteforce_with, MAX_BRUTEFORCE_NURSES, MAX_BRUTEFORCE_TASKS};

#[derive(Debug, Clone)]
pub struct SearchLimits {
    pub time_limit: Duration,
    pub node_limit: u64,
    /// Known solution used as the starting incumbent.
    pub incumbent: Option<Solution>,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            time_limit: Duration::from_secs(300),
            node_limit: u64::MAX,
            incumbent: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    /// A limit stopped the search with an incumbent in hand.
    Feasible,
    Infeasible,
    /// A limit stopped the search before any solution was found.
    Unknown,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub solution: Option<Solution>,
    /// Lower bound on the optimal objective.
    pub bound: f64,
    pub nodes_explored: u64,
    /// Seconds.
    pub wall_time: f64,
    /// Incumbent objective after every improvement, in order.
    pub incumbent_trace: Vec<f64>,
}

impl SolveOutcome {
    pub fn objective(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.objective)
    }
}

/// `true` if `(cost, key)` should replace `(best_cost, best_key)`: cheaper
/// beyond tolerance, or tied and lexicographically smaller by
/// (nurse, visit order).
pub(crate) fn improves(cost: f64, key: &[Vec<usize>], best: Option<(f64, &[Vec<usize>])>) -> bool {
    match best {
        None => true,
        Some((best_cost, best_key)) => {
            cost < best_cost - OBJ_TOL || (cost <= best_cost + OBJ_TOL && key < best_key)
        }
    }
}

pub(crate) fn solution_key(table: &TaskTable, sol: &Solution) -> Vec<Vec<usize>> {
    sol.order_key(table)
}
