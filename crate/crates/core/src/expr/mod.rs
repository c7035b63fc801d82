//! Model text format, expression trees, and the normalized operator DAG.

mod dag;
mod model;
mod normal;
mod parse;

pub use dag::{DagBuilder, DagConstraint, DagObjective, ExprDag, Node, NodeId};
pub use model::{fmt_num, pow_value, Constraint, Expr, Model, ObjSense, Objective, Sense, VarDecl};
pub use normal::{factored_form, normalize, normalize_with, NormalizeOptions, MAX_EXPONENT};
pub use parse::{parse_model, ParseError};

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ExprError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("exponent {0} exceeds the supported range")]
    ExponentOverflow(f64),
    #[error("constant expression outside its domain: {0}")]
    ConstantDomain(String),
    #[error("variable index {0} is not declared")]
    UndeclaredVariable(usize),
    #[error("variable `{name}` has invalid bounds [{lo}, {hi}]")]
    InvalidBounds { name: String, lo: f64, hi: f64 },
}

impl Model {
    /// Checks that every referenced variable exists and bounds are ordered.
    pub fn validate(&self) -> Result<(), ExprError> {
        for v in &self.vars {
            if v.lo.is_nan() || v.hi.is_nan() || v.lo > v.hi {
                return Err(ExprError::InvalidBounds {
                    name: v.name.clone(),
                    lo: v.lo,
                    hi: v.hi,
                });
            }
        }
        let n = self.vars.len();
        let mut exprs: Vec<&Expr> = self.constraints.iter().map(|c| &c.body).collect();
        if let Some(o) = &self.objective {
            exprs.push(&o.expr);
        }
        for e in exprs {
            if let Some(i) = max_var(e) {
                if i >= n {
                    return Err(ExprError::UndeclaredVariable(i));
                }
            }
        }
        Ok(())
    }
}

fn max_var(e: &Expr) -> Option<usize> {
    match e {
        Expr::Num(_) => None,
        Expr::Var(i) => Some(*i),
        Expr::Neg(a) | Expr::Pow(a, _) | Expr::Exp(a) | Expr::Log(a) => max_var(a),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            match (max_var(a), max_var(b)) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            }
        }
    }
}

/// Parses and normalizes in one step.
pub fn load_model(src: &str) -> Result<(Model, ExprDag), ExprError> {
    let m = parse_model(src)?;
    let d = normalize(&m)?;
    Ok((m, d))
}
