//! Interval arithmetic and bound propagation over expression DAGs.
//!
//! Endpoints are rounded outward. Arithmetic uses error-free transformations
//! so exact results stay exact; `exp`, `log` and fractional powers are
//! widened by one ulp.

mod propagate;
pub mod round;

pub use propagate::{
    constraint_roots, evaluate_ranges, forward_propagate, inverse_propagate,
    inverse_propagate_with, propagate_constraints, BoundStore, PropagationError, RootBound,
    MAX_SWEEPS,
};

use round::*;
use thiserror::Error;

/// Violations of `lo <= hi` up to this size are clamped instead of reported.
pub const EMPTY_TOL: f64 = 1e-12;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum IntervalError {
    #[error("division by an interval containing zero: {0}")]
    DivisionByZero(Interval),
    #[error("logarithm of an interval touching non-positive values: {0}")]
    LogDomain(Interval),
    #[error("power x^{exponent} undefined on {domain}")]
    PowDomain { exponent: f64, domain: Interval },
    #[error("empty intersection of {0} and {1}")]
    Empty(Interval, Interval),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Exp,
    Log,
    Pow(f64),
}

/// Applies `op` to `a` (and `b` for binary operators).
///
/// # Panics
/// Panics if `b` is missing for a binary operator.
pub fn interval_op(op: Op, a: Interval, b: Option<Interval>) -> Result<Interval, IntervalError> {
    let rhs = || b.expect("binary interval operator needs a second operand");
    match op {
        Op::Add => Ok(a.add(rhs())),
        Op::Sub => Ok(a.sub(rhs())),
        Op::Mul => Ok(a.mul(rhs())),
        Op::Div => a.div(rhs()),
        Op::Neg => Ok(a.neg()),
        Op::Exp => Ok(a.exp()),
        Op::Log => a.ln(),
        Op::Pow(e) => a.pow(e),
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(!(lo > hi), "invalid interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn entire() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        if self.is_finite() {
            0.5 * (self.lo + self.hi)
        } else if self.lo.is_finite() {
            self.lo
        } else if self.hi.is_finite() {
            self.hi
        } else {
            0.0
        }
    }

    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn hull(&self, other: Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    /// Intersection; a crossing of at most [`EMPTY_TOL`] (relative to the
    /// magnitude) collapses to a point, anything larger is reported empty.
    pub fn intersect(&self, other: Interval) -> Result<Interval, IntervalError> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            return Ok(Interval { lo, hi });
        }
        let scale = 1.0f64.max(lo.abs()).max(hi.abs());
        if lo - hi <= EMPTY_TOL * scale {
            let m = 0.5 * (lo + hi);
            Ok(Interval { lo: m, hi: m })
        } else {
            Err(IntervalError::Empty(*self, other))
        }
    }

    pub fn add(self, o: Interval) -> Interval {
        Interval::new(add_down(self.lo, o.lo), add_up(self.hi, o.hi))
    }

    pub fn sub(self, o: Interval) -> Interval {
        Interval::new(sub_down(self.lo, o.hi), sub_up(self.hi, o.lo))
    }

    pub fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }

    pub fn add_scalar(self, c: f64) -> Interval {
        self.add(Interval::point(c))
    }

    pub fn scale(self, c: f64) -> Interval {
        if c >= 0.0 {
            Interval::new(mul_down(self.lo, c), mul_up(self.hi, c))
        } else {
            Interval::new(mul_down(self.hi, c), mul_up(self.lo, c))
        }
    }

    pub fn mul(self, o: Interval) -> Interval {
        let (a, b, c, d) = (self.lo, self.hi, o.lo, o.hi);
        let lo = mul_down(a, c)
            .min(mul_down(a, d))
            .min(mul_down(b, c))
            .min(mul_down(b, d));
        let hi = mul_up(a, c)
            .max(mul_up(a, d))
            .max(mul_up(b, c))
            .max(mul_up(b, d));
        Interval::new(lo, hi)
    }

    pub fn div(self, o: Interval) -> Result<Interval, IntervalError> {
        if o.contains_zero() {
            return Err(IntervalError::DivisionByZero(o));
        }
        let (a, b, c, d) = (self.lo, self.hi, o.lo, o.hi);
        let lo = div_down(a, c)
            .min(div_down(a, d))
            .min(div_down(b, c))
            .min(div_down(b, d));
        let hi = div_up(a, c)
            .max(div_up(a, d))
            .max(div_up(b, c))
            .max(div_up(b, d));
        Ok(Interval::new(lo, hi))
    }

    pub fn exp(self) -> Interval {
        Interval::new(exp_down(self.lo), exp_up(self.hi))
    }

    pub fn ln(self) -> Result<Interval, IntervalError> {
        if self.lo <= 0.0 {
            return Err(IntervalError::LogDomain(self));
        }
        Ok(Interval::new(ln_down(self.lo), ln_up(self.hi)))
    }

    pub fn pow(self, e: f64) -> Result<Interval, IntervalError> {
        match as_integer(e) {
            Some(k) => self.powi(k),
            None => self.powf(e),
        }
    }

    /// Integer power with the piecewise-monotone rule for even exponents.
    pub fn powi(self, k: i64) -> Result<Interval, IntervalError> {
        if k == 0 {
            return Ok(Interval::point(1.0));
        }
        if k < 0 {
            if self.contains_zero() {
                return Err(IntervalError::PowDomain {
                    exponent: k as f64,
                    domain: self,
                });
            }
            let p = self.powi(-k)?;
            return Interval::point(1.0).div(p);
        }
        let ku = k as u32;
        let (lo, hi) = (self.lo, self.hi);
        if k % 2 == 0 {
            if lo >= 0.0 {
                Ok(Interval::new(
                    powi_nonneg_down(lo, ku),
                    powi_nonneg_up(hi, ku),
                ))
            } else if hi <= 0.0 {
                Ok(Interval::new(
                    powi_nonneg_down(-hi, ku),
                    powi_nonneg_up(-lo, ku),
                ))
            } else {
                Ok(Interval::new(
                    0.0,
                    powi_nonneg_up(-lo, ku).max(powi_nonneg_up(hi, ku)),
                ))
            }
        } else {
            Ok(Interval::new(
                signed_powi_down(lo, ku),
                signed_powi_up(hi, ku),
            ))
        }
    }

    fn powf(self, e: f64) -> Result<Interval, IntervalError> {
        let bad = if e > 0.0 {
            self.lo < 0.0
        } else {
            self.lo <= 0.0
        };
        if bad {
            return Err(IntervalError::PowDomain {
                exponent: e,
                domain: self,
            });
        }
        if e > 0.0 {
            Ok(Interval::new(
                powf_nonneg_down(self.lo, e),
                powf_nonneg_up(self.hi, e),
            ))
        } else {
            Ok(Interval::new(
                powf_nonneg_down(self.hi, e),
                powf_nonneg_up(self.lo, e),
            ))
        }
    }
}

/// Returns `Some(k)` when `e` is an integer of moderate size.
pub fn as_integer(e: f64) -> Option<i64> {
    if e.fract() == 0.0 && e.abs() < 1e9 {
        Some(e as i64)
    } else {
        None
    }
}

fn signed_powi_down(x: f64, k: u32) -> f64 {
    if x >= 0.0 {
        powi_nonneg_down(x, k)
    } else {
        -powi_nonneg_up(-x, k)
    }
}

fn signed_powi_up(x: f64, k: u32) -> f64 {
    if x >= 0.0 {
        powi_nonneg_up(x, k)
    } else {
        -powi_nonneg_down(-x, k)
    }
}
