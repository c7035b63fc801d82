//! Random polynomial benchmark instances, primal bounds by local search,
//! gap metrics, and experiment reports.

mod experiment;
mod instance;
mod metrics;
mod primal;

pub use experiment::{run_experiment, ExperimentConfig, GapReport, Method, Record, TimingRow};
pub use instance::{
    gen_poly_instance, gen_poly_instance_with, monomial_gradient, monomial_value, CostSign,
    PolyInstance,
};
pub use metrics::{alpha_grid, instance_gaps, mu_curve, rcg, relative_remaining_gap, RcgPair};
pub use primal::{feasible_samples, local_search, primal_bound, PrimalPoint, FEAS_TOL};

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum BenchError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("cannot build worker pool: {0}")]
    ThreadPool(String),
}

/// Problem sizes `(n, m, r)` of the standard suite.
pub const STANDARD_SIZES: [(usize, usize, usize); 4] =
    [(15, 30, 20), (25, 50, 20), (50, 100, 20), (100, 200, 20)];
