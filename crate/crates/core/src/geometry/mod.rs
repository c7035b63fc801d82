//! Axis-aligned regions, corner points, grid covers, the corner Markov
//! chain, and a small-dimension convex hull.

mod chain;
mod hull;
mod region;

pub use chain::{
    build_chain_from, build_corner_chain, corner_decompose, limiting_matrix, CornerChain,
};
pub use hull::{quickhull, quickhull_points, FacetSystem, Halfspace, HULL_TOL};
pub use region::{corner_points, disc_points, grid_cover, grid_cover_indexed, AxisBox, AxisRegion};

use serde::Serialize;
use thiserror::Error;

/// Points closer than this (relative max-norm) are merged. Must not exceed
/// the region coordinate tolerance, or a corner can merge into a neighbour.
pub const POINT_TOL: f64 = 1e-12;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("convex hull supports dimensions 1 to 5, got {0}")]
    UnsupportedDimension(usize),
    #[error("need at least one point")]
    NoPoints,
    #[error("point {0:?} is not in the region")]
    NotInRegion(Vec<f64>),
    #[error("chain is not absorbing")]
    NotAbsorbing,
    #[error("box has lo > hi on axis {0}")]
    InvalidBox(usize),
}

/// Points of a common dimension, deduplicated within [`POINT_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSet {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
}

impl PointSet {
    pub fn new(dim: usize) -> Self {
        PointSet {
            dim,
            points: Vec::new(),
        }
    }

    pub fn from_points(
        dim: usize,
        pts: impl IntoIterator<Item = Vec<f64>>,
    ) -> Result<Self, GeometryError> {
        let mut s = PointSet::new(dim);
        for p in pts {
            s.insert(p)?;
        }
        Ok(s)
    }

    /// Index of a point within tolerance of `p`.
    pub fn find(&self, p: &[f64]) -> Option<usize> {
        self.points.iter().position(|q| {
            q.iter()
                .zip(p)
                .all(|(a, b)| (a - b).abs() <= POINT_TOL * (1.0 + a.abs().max(b.abs())))
        })
    }

    /// Inserts `p` unless a duplicate exists; returns its index.
    pub fn insert(&mut self, p: Vec<f64>) -> Result<usize, GeometryError> {
        if p.len() != self.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                found: p.len(),
            });
        }
        if let Some(i) = self.find(&p) {
            return Ok(i);
        }
        self.points.push(p);
        Ok(self.points.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.find(p).is_some()
    }

    /// `self ⊆ other` up to tolerance.
    pub fn is_subset_of(&self, other: &PointSet) -> bool {
        self.points.iter().all(|p| other.contains(p))
    }
}
