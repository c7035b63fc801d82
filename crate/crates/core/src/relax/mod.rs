//! Polyhedral relaxations of an operator DAG.
//!
//! [`build_base`] relaxes every operator over the interval bounds of its
//! operands. [`build_vr`] adds, for every product and quotient, the convex
//! hull of estimator products lifted from the corners of an axis-aligned
//! outer approximation of the operands' joint domain. [`relax_dag`] runs the
//! whole pipeline with bound tightening and solves the LP.

mod base;
mod product;
mod reduce;

pub use base::{build_base, LinearForm, Relaxation};
pub use product::{
    build_vr, classify, inject_hull, lift_corners, product_hull, product_sites, relax_product_node,
    Factor, ProductHull, ProductSite,
};
pub use reduce::{add_objective_cut, duality_range_reduction, obbt};

use crate::envelopes::EnvelopeError;
use crate::expr::{factored_form, ExprDag, ExprError, Model, NodeId};
use crate::geometry::GeometryError;
use crate::interval::{
    forward_propagate, propagate_constraints, BoundStore, Interval, PropagationError,
};
use crate::lp::{solve, LpSolution, LpStatus};
use crate::voxel::{VoxelConfig, VoxelError};
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum RelaxError {
    #[error(transparent)]
    Model(#[from] ExprError),
    #[error(transparent)]
    Bounds(#[from] PropagationError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Voxel(#[from] VoxelError),
    #[error("operand {operand} of node {node} has unbounded range {bounds}")]
    UnboundedOperand {
        node: NodeId,
        operand: NodeId,
        bounds: Interval,
    },
    #[error("product node {node} has {arity} operands; binarize the DAG first")]
    NotBinary { node: NodeId, arity: usize },
    #[error("voxelization of nodes {0:?} is empty")]
    EmptyRegion([NodeId; 2]),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Factorable programming over forward-propagated bounds, nothing else.
    Fp,
    /// Factorable programming with bound tightening and range reduction.
    Base,
    /// `Base` plus voxelized product hulls.
    Vr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Voxelizer {
    Projection,
    Quadtree,
    /// Interval splitting of the operands' box down to `epsilon`.
    Split,
    /// The operands' bounding box only.
    BoundingBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxConfig {
    pub mode: Mode,
    pub voxelizer: Voxelizer,
    /// Breakpoints of the piecewise linear estimators.
    pub n_b: usize,
    pub voxel: VoxelConfig,
    pub iterations: usize,
    /// Tangent points per univariate hull.
    pub tangents: usize,
    pub duality_reduction: bool,
    pub obbt: bool,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        RelaxConfig {
            mode: Mode::Vr,
            voxelizer: Voxelizer::Projection,
            n_b: 9,
            voxel: VoxelConfig::default(),
            iterations: 1,
            tangents: 3,
            duality_reduction: true,
            obbt: true,
        }
    }
}

impl RelaxConfig {
    pub fn with_mode(mode: Mode) -> Self {
        RelaxConfig {
            mode,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), RelaxError> {
        if self.iterations < 1 {
            return Err(RelaxError::InvalidConfig(
                "iterations must be at least 1".into(),
            ));
        }
        if self.n_b < 2 {
            return Err(RelaxError::InvalidConfig(format!(
                "n_b must be at least 2, got {}",
                self.n_b
            )));
        }
        if self.tangents < 1 {
            return Err(RelaxError::InvalidConfig(
                "tangents must be at least 1".into(),
            ));
        }
        self.voxel.validate()?;
        Ok(())
    }
}

/// Outcome of [`relax_dag`].
#[derive(Debug, Clone)]
pub struct RelaxOutcome {
    /// Best bound over all rounds, in the model's sense (lower bound for
    /// minimization, upper for maximization).
    pub bound: f64,
    pub status: LpStatus,
    /// Relaxation and solution of the last round.
    pub relaxation: Relaxation,
    pub solution: LpSolution,
    /// Bounds used for the last round.
    pub store: BoundStore,
    pub rounds: usize,
    pub t_construct: f64,
    pub t_solve: f64,
}

/// Builds and solves the relaxation of `dag` (with binary products).
/// `primal` is a known objective value in the model's sense, used for the
/// objective cut in OBBT and for duality-based reduction.
pub fn relax_dag(
    dag: &ExprDag,
    cfg: &RelaxConfig,
    primal: Option<f64>,
) -> Result<RelaxOutcome, RelaxError> {
    cfg.validate()?;
    let t0 = Instant::now();
    let mut t_solve = 0.0;
    let enhanced = cfg.mode != Mode::Fp;
    // minimization-form primal value
    let primal_min = match (primal, &dag.objective) {
        (Some(p), Some(o)) if p.is_finite() => Some(o.to_model_sense(p)),
        _ => None,
    };
    let mut store = BoundStore::from_dag(dag);
    store = if enhanced {
        propagate_constraints(dag, &store)?
    } else {
        forward_propagate(dag, &store)?
    };
    if enhanced && cfg.obbt {
        let rel = build_base(dag, &store, cfg)?;
        let t = Instant::now();
        let cols = obbt(&rel.sys, &rel.variable_columns(dag.n_vars()), primal_min);
        t_solve += t.elapsed().as_secs_f64();
        rel.tighten_store(&mut store, &cols)?;
        store = propagate_constraints(dag, &store)?;
    }
    let mut best = f64::NEG_INFINITY;
    let mut last = None;
    for round in 0..cfg.iterations {
        let rel = match cfg.mode {
            Mode::Vr => build_vr(dag, &store, cfg)?,
            _ => build_base(dag, &store, cfg)?,
        };
        let t = Instant::now();
        let sol = solve(&rel.sys);
        t_solve += t.elapsed().as_secs_f64();
        log::debug!(
            "round {round}: {} columns, {} rows, status {:?}, objective {}",
            rel.sys.n_vars(),
            rel.sys.n_rows(),
            sol.status,
            sol.objective
        );
        if sol.status == LpStatus::Optimal {
            best = best.max(sol.objective);
        } else if sol.status == LpStatus::Infeasible {
            best = f64::INFINITY;
        }
        let more = round + 1 < cfg.iterations;
        if more && enhanced {
            if let (true, Some(p)) = (cfg.duality_reduction, primal_min) {
                let cols = duality_range_reduction(&rel.sys, &sol, p);
                rel.tighten_store(&mut store, &cols)?;
            }
            if cfg.obbt {
                let t = Instant::now();
                let cols = obbt(&rel.sys, &rel.variable_columns(dag.n_vars()), primal_min);
                t_solve += t.elapsed().as_secs_f64();
                rel.tighten_store(&mut store, &cols)?;
            }
            store = propagate_constraints(dag, &store)?;
        }
        last = Some((rel, sol));
    }
    let (relaxation, solution) = last.expect("at least one round");
    let status = if best == f64::INFINITY {
        LpStatus::Infeasible
    } else {
        solution.status
    };
    let bound = match &dag.objective {
        Some(o) => o.to_model_sense(best),
        None => 0.0,
    };
    let total = t0.elapsed().as_secs_f64();
    Ok(RelaxOutcome {
        bound,
        status,
        relaxation,
        solution,
        store,
        rounds: cfg.iterations,
        t_construct: (total - t_solve).max(0.0),
        t_solve,
    })
}

/// Normalizes `model` into a DAG with binary products and runs
/// [`relax_dag`]. Returns the DAG alongside the outcome.
pub fn relax_model(
    model: &Model,
    cfg: &RelaxConfig,
    primal: Option<f64>,
) -> Result<(ExprDag, RelaxOutcome), RelaxError> {
    let dag = factored_form(model)?;
    let out = relax_dag(&dag, cfg, primal)?;
    Ok((dag, out))
}
