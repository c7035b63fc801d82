//! Polyhedral relaxations of factorable nonlinear programs.
//!
//! Models are parsed from a small text format, normalized into an operator
//! DAG, bounded by interval propagation, and relaxed either operator by
//! operator ([`relax::Mode::Base`]) or by voxelizing the domains of product
//! nodes and taking convex hulls of lifted corner points
//! ([`relax::Mode::Vr`]).

pub mod bench;
pub mod envelopes;
pub mod expr;
pub mod geometry;
pub mod golden;
pub mod interval;
pub mod lp;
pub mod relax;
pub mod voxel;
