//! Axis-aligned outer approximations of feasible regions: interval
//! splitting, boundary voxelization of an approximate projection, and a
//! quadtree over a fixed grid.

mod projection;
mod quadtree;
mod split;

pub use projection::{
    approx_projection, boundary_voxelize, convex_hull_2d, sort_clockwise, Polygon, Projection,
};
pub use quadtree::{quadtree_voxelize, uniform_grid};
pub use split::{merge_rows, outer_approx, outer_approx_capped};

use crate::expr::{ExprDag, Node, NodeId};
use crate::geometry::AxisBox;
use crate::interval::{forward_propagate, inverse_propagate_with, BoundStore, Interval, RootBound};
use crate::lp::LpStatus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum VoxelError {
    #[error("invalid voxel configuration: {0}")]
    InvalidConfig(String),
    #[error("projection LP is infeasible")]
    Infeasible,
    #[error("projection LP is unbounded in direction {0:?}")]
    Unbounded([f64; 2]),
    #[error("projection LP stopped with status {0:?}")]
    Lp(LpStatus),
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoxelConfig {
    /// Diameter tolerance for splitting, and the projection stopping gap.
    pub epsilon: f64,
    /// Refinement LPs per projection.
    pub n_max: usize,
    /// Rectangles per polygon edge.
    pub n_v: usize,
    /// Quadtree grid points per axis.
    pub grid: (usize, usize),
}

impl Default for VoxelConfig {
    fn default() -> Self {
        VoxelConfig {
            epsilon: 1e-3,
            n_max: 5,
            n_v: 5,
            grid: (3, 3),
        }
    }
}

impl VoxelConfig {
    pub fn validate(&self) -> Result<(), VoxelError> {
        if !(self.epsilon > 0.0) {
            return Err(VoxelError::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.n_v < 1 {
            return Err(VoxelError::InvalidConfig("n_v must be at least 1".into()));
        }
        if self.grid.0 < 2 || self.grid.1 < 2 {
            return Err(VoxelError::InvalidConfig(format!(
                "grid must be at least 2x2, got {:?}",
                self.grid
            )));
        }
        Ok(())
    }
}

/// Propagation sweeps per undecided box.
const PROPAGATION_SWEEPS: usize = 5;

/// Outcome of an interval test of the constraints over a box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Every point of the box satisfies every constraint.
    Inside,
    /// Some constraint fails everywhere on the box.
    Outside,
    Unknown,
}

/// Interval test of `roots` over boxes in the nodes `targets`.
///
/// Other variables keep their bounds from `store`; intermediate nodes are
/// recomputed from the variable bounds only, so that constraint-derived
/// bounds on roots cannot make a box look feasible. A box the forward test
/// cannot decide is also run through constraint propagation with the box
/// imposed on the targets; an empty result certifies it outside. This is
/// what ties a box over intermediate nodes back to the variables.
pub struct DagTester<'a> {
    dag: &'a ExprDag,
    base: BoundStore,
    roots: Vec<RootBound>,
    targets: Vec<NodeId>,
}

impl<'a> DagTester<'a> {
    pub fn new(
        dag: &'a ExprDag,
        store: &BoundStore,
        roots: Vec<RootBound>,
        targets: Vec<NodeId>,
    ) -> Self {
        let mut base = BoundStore::from_dag(dag);
        for (id, n) in dag.nodes.iter().enumerate() {
            if matches!(n, Node::Var(_)) {
                base.bounds[id] = store.get(id);
            }
        }
        DagTester {
            dag,
            base,
            roots,
            targets,
        }
    }

    pub fn test(&self, b: &AxisBox) -> Verdict {
        let mut s = self.base.clone();
        for (k, &id) in self.targets.iter().enumerate() {
            let iv = Interval::new(b.lo[k], b.hi[k]);
            if s.tighten(id, iv).is_err() {
                return Verdict::Outside;
            }
        }
        let Ok(r) = forward_propagate(self.dag, &s) else {
            return Verdict::Outside;
        };
        // a box over intermediate nodes may hold values they never take
        let mut inside = self
            .targets
            .iter()
            .all(|&id| matches!(self.dag.node(id), Node::Var(_)));
        for rb in &self.roots {
            let v = r.get(rb.root);
            if v.lo > rb.bounds.hi || v.hi < rb.bounds.lo {
                return Verdict::Outside;
            }
            if !v.is_subset_of(&rb.bounds) {
                inside = false;
            }
        }
        if inside {
            return Verdict::Inside;
        }
        let mut imposed = self.roots.clone();
        imposed.extend(self.targets.iter().enumerate().map(|(k, &id)| RootBound {
            root: id,
            bounds: Interval::new(b.lo[k], b.hi[k]),
        }));
        match inverse_propagate_with(self.dag, &self.base, &imposed, PROPAGATION_SWEEPS) {
            Err(_) => Verdict::Outside,
            Ok(_) => Verdict::Unknown,
        }
    }
}
