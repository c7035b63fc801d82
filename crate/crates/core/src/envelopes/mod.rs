//! Closed-form relaxations: McCormick, univariate hulls, piecewise-linear
//! estimators and the pentagon-product envelope.

mod mccormick;
mod pentagon;
mod univariate;

pub use mccormick::{mccormick, mccormick_cuts, BilinearCut};
pub use pentagon::{pentagon_envelope, Pentagon, PentagonEnvelope};
pub use univariate::{
    pl_estimators, tangency_point, univariate_cuts, univariate_hull, AffineCut, CutSide,
    PiecewiseLinear, Shape, UnivariateKind, DEFAULT_TANGENTS,
};

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum EnvelopeError {
    #[error("{kind} is not defined on [{lo}, {hi}]")]
    Domain { kind: String, lo: f64, hi: f64 },
    #[error("bounds [{lo}, {hi}] are not finite")]
    Unbounded { lo: f64, hi: f64 },
    #[error("need at least 2 breakpoints, got {0}")]
    TooFewBreakpoints(usize),
    #[error("function value at breakpoint {0} is not finite")]
    NonFinite(f64),
    #[error("invalid pentagon: {0}")]
    InvalidPentagon(String),
    #[error("degenerate pentagon: r1 = {r1} must exceed r2 = {r2}")]
    DegeneratePentagon { r1: f64, r2: f64 },
}
