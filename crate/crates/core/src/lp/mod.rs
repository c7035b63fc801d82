//! Linear programs: the system type, a dense dual simplex, and LP-format
//! text export/import.

mod format;
mod simplex;
mod system;

pub use format::{export_lp, parse_lp, LpFormatError};
pub use simplex::{solve_with, SolverOptions};
pub use system::{merge_coefs, LinearSystem, Row, RowSense, Tag};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal objective at `x` (`+inf` if infeasible, `-inf` if unbounded).
    pub objective: f64,
    /// Objective of the dual solution; a valid lower bound whenever the
    /// multipliers are sign-feasible, which the dual simplex maintains.
    pub dual_bound: f64,
    pub x: Vec<f64>,
    /// One multiplier per row (`>= 0` on binding `>=` rows, `<= 0` on `<=`).
    pub duals: Vec<f64>,
    /// One multiplier per variable bound, same sign convention.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    fn infeasible(n: usize, m: usize) -> Self {
        LpSolution {
            status: LpStatus::Infeasible,
            objective: f64::INFINITY,
            dual_bound: f64::INFINITY,
            x: vec![0.0; n],
            duals: vec![0.0; m],
            reduced_costs: vec![0.0; n],
            iterations: 0,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solves `min c·x` over `sys` with default options.
pub fn solve(sys: &LinearSystem) -> LpSolution {
    solve_with(sys, &SolverOptions::default())
}

/// Same system with a different objective.
pub fn with_objective(sys: &LinearSystem, coefs: Vec<(usize, f64)>) -> LinearSystem {
    let mut s = sys.clone();
    s.set_objective(coefs, 0.0);
    s
}
