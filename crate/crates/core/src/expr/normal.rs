//! Canonical polynomial form used during normalization.
//!
//! An expression becomes `constant + Σ coef·monomial`, where a monomial is a
//! product of factors raised to real exponents. Factors are variables or
//! opaque atoms (`exp`, `log`, quotients, and sums that could not be
//! expanded). Flattening, distribution, power collapsing and constant folding
//! all fall out of the arithmetic on this form; sharing comes from the
//! hash-consing builder afterwards.

use super::dag::{DagBuilder, DagConstraint, DagObjective, ExprDag, Node, NodeId};
use super::model::{pow_value, Expr, Model, ObjSense, Sense};
use super::ExprError;
use crate::interval::as_integer;
use std::cmp::Ordering;
use std::collections::BTreeMap;

/// Largest exponent magnitude accepted after consolidation.
pub const MAX_EXPONENT: f64 = 1e6;

#[derive(Debug, Clone, Copy)]
pub struct NormalizeOptions {
    /// Products of sums are expanded only when the result has at most this
    /// many terms.
    pub distribute_cap: usize,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions {
            distribute_cap: 200,
        }
    }
}

/// `f64` with a total order.
#[derive(Debug, Clone, Copy)]
struct Real(f64);

impl PartialEq for Real {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Real {}
impl PartialOrd for Real {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Real {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Factor {
    Var(usize),
    Exp(Box<Poly>),
    Log(Box<Poly>),
    Div(Box<Poly>, Box<Poly>),
    Group(Box<Poly>),
}

type Mono = BTreeMap<Factor, Real>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Poly {
    constant: Real,
    terms: BTreeMap<Mono, Real>,
}

struct Ctx {
    cap: usize,
}

impl Poly {
    fn constant(c: f64) -> Poly {
        Poly {
            constant: Real(c),
            terms: BTreeMap::new(),
        }
    }

    fn mono(coef: f64, m: Mono) -> Poly {
        let mut p = Poly::constant(0.0);
        if m.is_empty() {
            p.constant = Real(coef);
        } else if coef != 0.0 {
            p.terms.insert(m, Real(coef));
        }
        p
    }

    fn factor(f: Factor) -> Poly {
        let mut m = Mono::new();
        m.insert(f, Real(1.0));
        Poly::mono(1.0, m)
    }

    fn as_constant(&self) -> Option<f64> {
        self.terms.is_empty().then_some(self.constant.0)
    }

    /// `Some((coef, mono))` for a single monomial without constant.
    fn single(&self) -> Option<(f64, &Mono)> {
        if self.constant.0 == 0.0 && self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            Some((c.0, m))
        } else {
            None
        }
    }

    fn term_count(&self) -> usize {
        self.terms.len() + usize::from(self.constant.0 != 0.0)
    }

    fn add(mut self, o: &Poly) -> Poly {
        self.constant = Real(self.constant.0 + o.constant.0);
        for (m, c) in &o.terms {
            let e = self.terms.entry(m.clone()).or_insert(Real(0.0));
            e.0 += c.0;
            if e.0 == 0.0 {
                self.terms.remove(m);
            }
        }
        self
    }

    fn scale(mut self, s: f64) -> Poly {
        if s == 0.0 {
            return Poly::constant(0.0);
        }
        self.constant = Real(self.constant.0 * s);
        for c in self.terms.values_mut() {
            c.0 *= s;
        }
        self
    }

    fn mono_pow(m: &Mono, e: f64) -> Result<Mono, ExprError> {
        let mut out = Mono::new();
        for (f, a) in m {
            let k = a.0 * e;
            if k.abs() > MAX_EXPONENT {
                return Err(ExprError::ExponentOverflow(k));
            }
            if k != 0.0 {
                out.insert(f.clone(), Real(k));
            }
        }
        Ok(out)
    }

    fn mono_mul(a: &Mono, b: &Mono) -> Result<Mono, ExprError> {
        let mut out = a.clone();
        for (f, e) in b {
            let s = out.get(f).map_or(0.0, |x| x.0) + e.0;
            if s.abs() > MAX_EXPONENT {
                return Err(ExprError::ExponentOverflow(s));
            }
            if s == 0.0 {
                out.remove(f);
            } else {
                out.insert(f.clone(), Real(s));
            }
        }
        Ok(out)
    }

    /// Wraps a sum into an opaque factor.
    fn grouped(self) -> Poly {
        if self.terms.is_empty() || self.single().is_some() {
            return self;
        }
        Poly::factor(Factor::Group(Box::new(self)))
    }

    fn mul(self, o: Poly, ctx: &Ctx) -> Result<Poly, ExprError> {
        let (a, b) = if self.term_count() > 1
            && o.term_count() > 1
            && self.term_count() * o.term_count() > ctx.cap
        {
            (self.grouped(), o.grouped())
        } else {
            (self, o)
        };
        let mut out = Poly::constant(a.constant.0 * b.constant.0);
        let ac = Poly {
            constant: Real(0.0),
            terms: a.terms.clone(),
        };
        if b.constant.0 != 0.0 {
            out = out.add(&ac.clone().scale(b.constant.0));
        }
        if a.constant.0 != 0.0 {
            out = out.add(
                &Poly {
                    constant: Real(0.0),
                    terms: b.terms.clone(),
                }
                .scale(a.constant.0),
            );
        }
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                let m = Poly::mono_mul(ma, mb)?;
                out = out.add(&Poly::mono(ca.0 * cb.0, m));
            }
        }
        Ok(out)
    }

    fn pow(self, e: f64, ctx: &Ctx) -> Result<Poly, ExprError> {
        if e == 0.0 {
            return Ok(Poly::constant(1.0));
        }
        if e == 1.0 {
            return Ok(self);
        }
        if e.abs() > MAX_EXPONENT {
            return Err(ExprError::ExponentOverflow(e));
        }
        if let Some(c) = self.as_constant() {
            let v = pow_value(c, e);
            if !v.is_finite() {
                return Err(ExprError::ConstantDomain(format!("{c}^{e}")));
            }
            return Ok(Poly::constant(v));
        }
        let int = as_integer(e);
        if let Some((c, m)) = self.single() {
            if int.is_some() || (c > 0.0 && m.len() == 1 && m.values().all(|a| a.0 == 1.0)) {
                let m = Poly::mono_pow(m, e)?;
                return Ok(Poly::mono(pow_value(c, e), m));
            }
            return Ok(Poly::factor(Factor::Group(Box::new(self))).pow_factor(e));
        }
        if let Some(k) = int {
            if k > 1 {
                let t = self.term_count() as f64;
                if t.powi(k as i32) <= ctx.cap as f64 {
                    let mut acc = self.clone();
                    for _ in 1..k {
                        acc = acc.mul(self.clone(), ctx)?;
                    }
                    return Ok(acc);
                }
            }
        }
        Ok(Poly::factor(Factor::Group(Box::new(self))).pow_factor(e))
    }

    /// `self^e` where `self` is a single factor with coefficient one.
    fn pow_factor(self, e: f64) -> Poly {
        let (_, m) = self.single().expect("single factor");
        let m = m.iter().map(|(f, a)| (f.clone(), Real(a.0 * e))).collect();
        Poly::mono(1.0, m)
    }
}

fn to_poly(e: &Expr, ctx: &Ctx) -> Result<Poly, ExprError> {
    Ok(match e {
        Expr::Num(v) => Poly::constant(*v),
        Expr::Var(i) => Poly::factor(Factor::Var(*i)),
        Expr::Neg(a) => to_poly(a, ctx)?.scale(-1.0),
        Expr::Add(a, b) => to_poly(a, ctx)?.add(&to_poly(b, ctx)?),
        Expr::Sub(a, b) => to_poly(a, ctx)?.add(&to_poly(b, ctx)?.scale(-1.0)),
        Expr::Mul(a, b) => to_poly(a, ctx)?.mul(to_poly(b, ctx)?, ctx)?,
        Expr::Div(a, b) => {
            let num = to_poly(a, ctx)?;
            let den = to_poly(b, ctx)?;
            if let Some(c) = den.as_constant() {
                if c == 0.0 {
                    return Err(ExprError::ConstantDomain("division by zero".into()));
                }
                num.scale(1.0 / c)
            } else if let Some((c, m)) = den.single() {
                let inv = Poly::mono(1.0 / c, Poly::mono_pow(m, -1.0)?);
                num.mul(inv, ctx)?
            } else if let Some(c) = num.as_constant() {
                Poly::factor(Factor::Group(Box::new(den)))
                    .pow_factor(-1.0)
                    .scale(c)
            } else {
                Poly::factor(Factor::Div(Box::new(num), Box::new(den)))
            }
        }
        Expr::Pow(a, k) => to_poly(a, ctx)?.pow(*k, ctx)?,
        Expr::Exp(a) => {
            let p = to_poly(a, ctx)?;
            match p.as_constant() {
                Some(c) => Poly::constant(c.exp()),
                None => Poly::factor(Factor::Exp(Box::new(p))),
            }
        }
        Expr::Log(a) => {
            let p = to_poly(a, ctx)?;
            match p.as_constant() {
                Some(c) if c > 0.0 => Poly::constant(c.ln()),
                Some(c) => return Err(ExprError::ConstantDomain(format!("log({c})"))),
                None => Poly::factor(Factor::Log(Box::new(p))),
            }
        }
    })
}

fn factor_node(f: &Factor, b: &mut DagBuilder) -> NodeId {
    match f {
        Factor::Var(i) => *i,
        Factor::Exp(p) => {
            let c = poly_node(p, b);
            b.add(Node::Exp(c))
        }
        Factor::Log(p) => {
            let c = poly_node(p, b);
            b.add(Node::Log(c))
        }
        Factor::Div(n, d) => {
            let n = poly_node(n, b);
            let d = poly_node(d, b);
            b.add(Node::Div(n, d))
        }
        Factor::Group(p) => poly_node(p, b),
    }
}

fn mono_node(m: &Mono, b: &mut DagBuilder) -> NodeId {
    let mut ch = Vec::with_capacity(m.len());
    for (f, e) in m {
        let id = factor_node(f, b);
        ch.push(if e.0 == 1.0 {
            id
        } else {
            b.add(Node::Pow(id, e.0))
        });
    }
    if ch.len() == 1 {
        ch[0]
    } else {
        b.add(Node::Mul(ch))
    }
}

fn poly_node(p: &Poly, b: &mut DagBuilder) -> NodeId {
    if let Some(c) = p.as_constant() {
        return b.constant(c);
    }
    if let Some((c, m)) = p.single() {
        if c == 1.0 {
            return mono_node(m, b);
        }
    }
    let terms = p
        .terms
        .iter()
        .map(|(m, c)| (mono_node(m, b), c.0))
        .collect();
    b.add(Node::Affine {
        terms,
        constant: p.constant.0,
    })
}

/// Splits `p` into `(root, scale, offset)` with `p = scale·root + offset`.
fn rooted(p: &Poly, b: &mut DagBuilder) -> (NodeId, f64, f64) {
    if p.terms.is_empty() {
        return (b.constant(0.0), 1.0, p.constant.0);
    }
    if p.terms.len() == 1 {
        let (m, c) = p.terms.iter().next().unwrap();
        return (mono_node(m, b), c.0, p.constant.0);
    }
    let body = Poly {
        constant: Real(0.0),
        terms: p.terms.clone(),
    };
    (poly_node(&body, b), 1.0, p.constant.0)
}

/// Normalizes `m` into a shared DAG with n-ary products.
pub fn normalize(m: &Model) -> Result<ExprDag, ExprError> {
    normalize_with(m, &NormalizeOptions::default())
}

pub fn normalize_with(m: &Model, opts: &NormalizeOptions) -> Result<ExprDag, ExprError> {
    m.validate()?;
    let ctx = Ctx {
        cap: opts.distribute_cap.max(1),
    };
    let mut b = DagBuilder::new(m.vars.len());
    let objective = match &m.objective {
        None => None,
        Some(o) => {
            let mut p = to_poly(&o.expr, &ctx)?;
            if o.sense == ObjSense::Max {
                p = p.scale(-1.0);
            }
            let (root, scale, offset) = rooted(&p, &mut b);
            Some(DagObjective {
                root,
                scale,
                offset,
                sense: o.sense,
            })
        }
    };
    let mut constraints = Vec::with_capacity(m.constraints.len());
    for c in &m.constraints {
        let p = to_poly(&c.body, &ctx)?;
        let (root, a, off) = rooted(&p, &mut b);
        let r = c.rhs - off;
        let (mut lo, mut hi) = match c.sense {
            Sense::Le => (f64::NEG_INFINITY, r),
            Sense::Ge => (r, f64::INFINITY),
            Sense::Eq => (r, r),
        };
        if a != 1.0 {
            lo /= a;
            hi /= a;
            if a < 0.0 {
                std::mem::swap(&mut lo, &mut hi);
            }
        }
        constraints.push(DagConstraint {
            name: c.name.clone(),
            root,
            lo,
            hi,
        });
    }
    Ok(b.finish(m.vars.clone(), objective, constraints))
}

/// Normalized DAG with binary products, ready for relaxation.
pub fn factored_form(m: &Model) -> Result<ExprDag, ExprError> {
    Ok(normalize(m)?.binarize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_model;

    fn dag(src: &str) -> ExprDag {
        normalize(&parse_model(src).unwrap()).unwrap()
    }

    #[test]
    fn cube_collapses_to_power() {
        let d = dag("var x in [0,1]; min x*x*x;");
        let o = d.objective.as_ref().unwrap();
        assert!(matches!(d.node(o.root), Node::Pow(0, e) if *e == 3.0));
    }

    #[test]
    fn products_distribute_over_sums() {
        let d = dag("var x, y, z in [0,1]; min (x+y)*z;");
        let o = d.objective.as_ref().unwrap();
        let Node::Affine { terms, constant } = d.node(o.root) else {
            panic!("expected affine root");
        };
        assert_eq!(*constant, 0.0);
        assert_eq!(terms.len(), 2);
        for &(t, c) in terms {
            assert_eq!(c, 1.0);
            assert!(matches!(d.node(t), Node::Mul(ch) if ch.contains(&2)));
        }
    }

    #[test]
    fn shared_subexpressions_get_one_node() {
        let d = dag("var x, y in [0,1]; min 0; s.t. exp(x-y) <= 2; exp(x-y) + x >= 0.5;");
        assert_eq!(
            d.nodes.iter().filter(|n| matches!(n, Node::Exp(_))).count(),
            1
        );
    }

    #[test]
    fn distribution_respects_the_cap() {
        let m = parse_model("var a,b,c,d in [0,1]; min (a+b+c+d)*(a+2*b+3*c+4*d);").unwrap();
        let small = normalize_with(&m, &NormalizeOptions { distribute_cap: 4 }).unwrap();
        let o = small.objective.as_ref().unwrap();
        assert!(matches!(small.node(o.root), Node::Mul(ch) if ch.len() == 2));
        let full = normalize(&m).unwrap();
        let x = [0.1, 0.2, 0.3, 0.4];
        assert!((small.objective_value(&x) - full.objective_value(&x)).abs() < 1e-12);
    }

    #[test]
    fn division_forms() {
        let d = dag("var x, y in [1,2]; min x/2 + 3/(x+y) + x/y + (x+1)/(x+y);");
        let x = [1.5, 1.25];
        let want = 1.5 / 2.0 + 3.0 / 2.75 + 1.5 / 1.25 + 2.5 / 2.75;
        assert!((d.objective_value(&x) - want).abs() < 1e-12);
        assert_eq!(
            d.nodes
                .iter()
                .filter(|n| matches!(n, Node::Div(..)))
                .count(),
            1
        );
    }

    #[test]
    fn fractional_power_of_a_square_is_not_simplified() {
        let d = dag("var x in [-2,2]; min (x^2)^0.5;");
        assert_eq!(d.objective_value(&[-1.5]), 1.5);
    }

    #[test]
    fn exponent_overflow_is_reported() {
        let m = parse_model("var x in [1,2]; min (x^1000)^10000;").unwrap();
        assert!(matches!(normalize(&m), Err(ExprError::ExponentOverflow(_))));
    }

    #[test]
    fn max_objective_is_negated_with_scale() {
        let d = dag("var x, y in [0,1]; max exp(x-y)*x*y;");
        let o = d.objective.as_ref().unwrap();
        assert_eq!(o.scale, -1.0);
        assert!(matches!(d.node(o.root), Node::Mul(_)));
        assert!((d.objective_value(&[1.0, 1.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constraint_constants_move_to_bounds() {
        let d = dag("var x, y in [0,1]; min 0; s.t. -2*x*y + 3 >= 1;");
        let c = &d.constraints[0];
        assert!(matches!(d.node(c.root), Node::Mul(_)));
        assert_eq!((c.lo, c.hi), (f64::NEG_INFINITY, 1.0));
    }
}
