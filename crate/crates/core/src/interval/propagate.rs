use super::round::*;
use super::{as_integer, Interval};
use crate::expr::{ExprDag, Node, NodeId};
use thiserror::Error;

/// Sweep cap for alternating forward/inverse propagation.
pub const MAX_SWEEPS: usize = 10;

/// Relative improvement below which a sweep counts as no progress.
const PROGRESS_TOL: f64 = 1e-9;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PropagationError {
    #[error("bounds of node {node} became empty: {a} and {b} do not intersect")]
    Infeasible {
        node: NodeId,
        a: Interval,
        b: Interval,
    },
    #[error("node {node} needs finite bounds, found {bounds}")]
    Unbounded { node: NodeId, bounds: Interval },
}

/// Required range of a root node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBound {
    pub root: NodeId,
    pub bounds: Interval,
}

/// One interval per DAG node.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundStore {
    pub bounds: Vec<Interval>,
}

impl BoundStore {
    /// Declared variable bounds, constants as points, everything else free.
    pub fn from_dag(dag: &ExprDag) -> Self {
        let bounds = dag
            .nodes
            .iter()
            .map(|n| match n {
                Node::Var(i) => Interval::new(dag.vars[*i].lo, dag.vars[*i].hi),
                Node::Const(c) => Interval::point(*c),
                _ => Interval::entire(),
            })
            .collect();
        BoundStore { bounds }
    }

    pub fn get(&self, id: NodeId) -> Interval {
        self.bounds[id]
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    /// Intersects node `id` with `iv`; returns whether anything changed.
    pub fn tighten(&mut self, id: NodeId, iv: Interval) -> Result<bool, PropagationError> {
        let cur = self.bounds[id];
        let new = cur
            .intersect(iv)
            .map_err(|_| PropagationError::Infeasible {
                node: id,
                a: cur,
                b: iv,
            })?;
        let changed = new != cur;
        self.bounds[id] = new;
        Ok(changed)
    }

    /// Componentwise `self ⊆ other`.
    pub fn is_subset_of(&self, other: &BoundStore) -> bool {
        self.bounds.len() == other.bounds.len()
            && self
                .bounds
                .iter()
                .zip(&other.bounds)
                .all(|(a, b)| a.is_subset_of(b))
    }

    pub fn require_finite(&self, id: NodeId) -> Result<Interval, PropagationError> {
        let b = self.bounds[id];
        if b.is_finite() {
            Ok(b)
        } else {
            Err(PropagationError::Unbounded {
                node: id,
                bounds: b,
            })
        }
    }
}

/// Sound range of `node` given its children's ranges; never fails, domain
/// violations are handled by restricting to the function's domain.
fn forward_node(node: &Node, b: &[Interval]) -> Interval {
    match node {
        Node::Var(_) => Interval::entire(),
        Node::Const(c) => Interval::point(*c),
        Node::Affine { terms, constant } => terms
            .iter()
            .fold(Interval::point(*constant), |acc, &(c, a)| {
                acc.add(b[c].scale(a))
            }),
        Node::Mul(ch) => ch
            .iter()
            .fold(Interval::point(1.0), |acc, &c| acc.mul(b[c])),
        Node::Div(x, y) => b[*x].div(b[*y]).unwrap_or_else(|_| Interval::entire()),
        Node::Exp(x) => b[*x].exp(),
        Node::Log(x) => {
            let d = b[*x];
            if d.hi <= 0.0 {
                return Interval::entire();
            }
            Interval::new(
                if d.lo <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    ln_down(d.lo)
                },
                ln_up(d.hi),
            )
        }
        Node::Pow(x, e) => pow_forward(b[*x], *e),
    }
}

fn pow_forward(d: Interval, e: f64) -> Interval {
    if let Ok(r) = d.pow(e) {
        return r;
    }
    match as_integer(e) {
        // negative integer power over an interval containing zero
        Some(k) => {
            if d.lo == 0.0 && d.hi > 0.0 {
                Interval::new(powi_neg_down(d.hi, k), f64::INFINITY)
            } else if d.hi == 0.0 && d.lo < 0.0 && k % 2 == 0 {
                Interval::new(powi_neg_down(-d.lo, k), f64::INFINITY)
            } else if k % 2 == 0 {
                Interval::new(0.0, f64::INFINITY)
            } else {
                Interval::entire()
            }
        }
        // fractional power: restrict to x >= 0
        None => {
            if d.hi < 0.0 || (e < 0.0 && d.hi <= 0.0) {
                return Interval::entire();
            }
            let lo = d.lo.max(0.0);
            if e > 0.0 {
                Interval::new(powf_nonneg_down(lo, e), powf_nonneg_up(d.hi, e))
            } else {
                let top = if lo == 0.0 {
                    f64::INFINITY
                } else {
                    powf_nonneg_up(lo, e)
                };
                Interval::new(powf_nonneg_down(d.hi, e), top)
            }
        }
    }
}

/// `x^k` for `x > 0`, `k < 0`, rounded down.
fn powi_neg_down(x: f64, k: i64) -> f64 {
    div_down(1.0, powi_nonneg_up(x, (-k) as u32))
}

/// Forward pass in topological order, intersecting with the existing store.
pub fn forward_propagate(
    dag: &ExprDag,
    store: &BoundStore,
) -> Result<BoundStore, PropagationError> {
    let mut s = store.clone();
    forward_in_place(dag, &mut s)?;
    Ok(s)
}

fn forward_in_place(dag: &ExprDag, s: &mut BoundStore) -> Result<bool, PropagationError> {
    let mut changed = false;
    for (id, node) in dag.nodes.iter().enumerate() {
        if matches!(node, Node::Var(_)) {
            continue;
        }
        let r = forward_node(node, &s.bounds);
        changed |= s.tighten(id, r)?;
    }
    Ok(changed)
}

/// Ranges of every node from the declared variable bounds.
pub fn evaluate_ranges(dag: &ExprDag) -> Result<BoundStore, PropagationError> {
    forward_propagate(dag, &BoundStore::from_dag(dag))
}

/// `x` with `|x| ∈ w` restricted to the non-negative piece, for `y = x^e`.
fn pow_inverse_abs(w: Interval, e: f64) -> Option<Interval> {
    if w.hi < 0.0 {
        return None;
    }
    let w = Interval::new(w.lo.max(0.0), w.hi);
    let int = as_integer(e);
    let (lo, hi) = if e > 0.0 {
        match int {
            Some(k) if k <= u32::MAX as i64 => (
                root_nonneg(w.lo, k as u32, false),
                root_nonneg(w.hi, k as u32, true),
            ),
            _ => (
                widen_down(widen_down(w.lo.powf(1.0 / e))).max(0.0),
                widen_up(widen_up(w.hi.powf(1.0 / e))),
            ),
        }
    } else {
        // decreasing on x > 0
        if w.hi == 0.0 {
            return None;
        }
        let top = if w.lo == 0.0 {
            f64::INFINITY
        } else {
            match int {
                Some(k) => div_up(1.0, root_nonneg(w.lo, (-k) as u32, false)),
                None => widen_up(widen_up(w.lo.powf(1.0 / e))),
            }
        };
        let bottom = match int {
            Some(k) => div_down(1.0, root_nonneg(w.hi, (-k) as u32, true)),
            None => widen_down(widen_down(w.hi.powf(1.0 / e))).max(0.0),
        };
        (bottom.max(0.0), top)
    };
    Some(Interval::new(lo, hi.max(lo)))
}

fn pow_inverse(child: Interval, z: Interval, e: f64) -> Option<Interval> {
    let mut out: Option<Interval> = None;
    let mut push = |piece: Interval| {
        out = Some(match out {
            Some(o) => o.hull(piece),
            None => piece,
        });
    };
    // non-negative piece
    if child.hi >= 0.0 {
        let pos = Interval::new(child.lo.max(0.0), child.hi);
        if let Some(a) = pow_inverse_abs(z, e) {
            if let Ok(p) = pos.intersect(a) {
                push(p);
            }
        }
    }
    // negative piece, integer exponents only
    if child.lo < 0.0 {
        if let Some(k) = as_integer(e) {
            let neg = Interval::new(child.lo, child.hi.min(0.0));
            let w = if k % 2 == 0 { z } else { z.neg() };
            if let Some(a) = pow_inverse_abs(w, e) {
                if let Ok(p) = neg.intersect(a.neg()) {
                    push(p);
                }
            }
        }
    }
    out
}

/// Applies the inverse rule of node `id`; returns whether a child changed.
fn inverse_node(dag: &ExprDag, id: NodeId, s: &mut BoundStore) -> Result<bool, PropagationError> {
    let z = s.get(id);
    let mut changed = false;
    match dag.node(id) {
        Node::Var(_) | Node::Const(_) => {}
        Node::Affine { terms, constant } => {
            if terms.len() > 64
                && !z.is_finite()
                && z.lo == f64::NEG_INFINITY
                && z.hi == f64::INFINITY
            {
                return Ok(false);
            }
            let parts: Vec<Interval> = terms.iter().map(|&(c, a)| s.get(c).scale(a)).collect();
            let n = parts.len();
            let mut prefix = vec![Interval::point(0.0); n + 1];
            let mut suffix = vec![Interval::point(0.0); n + 1];
            for i in 0..n {
                prefix[i + 1] = prefix[i].add(parts[i]);
            }
            for i in (0..n).rev() {
                suffix[i] = suffix[i + 1].add(parts[i]);
            }
            let base = z.add_scalar(-constant);
            for (i, &(c, a)) in terms.iter().enumerate() {
                let rest = prefix[i].add(suffix[i + 1]);
                let target = base.sub(rest);
                let iv = target.div(Interval::point(a)).expect("nonzero coefficient");
                changed |= s.tighten(c, iv)?;
            }
        }
        Node::Mul(ch) => {
            for (i, &c) in ch.iter().enumerate() {
                let others = ch
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .fold(Interval::point(1.0), |acc, (_, &d)| acc.mul(s.get(d)));
                if let Ok(iv) = z.div(others) {
                    changed |= s.tighten(c, iv)?;
                }
            }
        }
        Node::Div(a, b) => {
            let iv = z.mul(s.get(*b));
            changed |= s.tighten(*a, iv)?;
            if let Ok(iv) = s.get(*a).div(z) {
                changed |= s.tighten(*b, iv)?;
            }
        }
        Node::Exp(a) => {
            if z.hi <= 0.0 {
                return Err(PropagationError::Infeasible {
                    node: id,
                    a: z,
                    b: Interval::new(0.0, f64::INFINITY),
                });
            }
            let lo = if z.lo > 0.0 {
                ln_down(z.lo)
            } else {
                f64::NEG_INFINITY
            };
            changed |= s.tighten(*a, Interval::new(lo, ln_up(z.hi)))?;
        }
        Node::Log(a) => {
            let iv = z.exp();
            changed |= s.tighten(*a, Interval::new(iv.lo.max(0.0), iv.hi))?;
        }
        Node::Pow(a, e) => {
            let child = s.get(*a);
            if as_integer(*e).is_none() {
                changed |= s.tighten(*a, Interval::new(0.0, f64::INFINITY))?;
            }
            match pow_inverse(s.get(*a), z, *e) {
                Some(iv) => changed |= s.tighten(*a, iv)?,
                None => {
                    return Err(PropagationError::Infeasible {
                        node: *a,
                        a: child,
                        b: z,
                    })
                }
            }
        }
    }
    Ok(changed)
}

fn round_integers(dag: &ExprDag, s: &mut BoundStore) -> Result<bool, PropagationError> {
    let mut changed = false;
    for (i, v) in dag.vars.iter().enumerate() {
        if v.integer {
            let b = s.get(i);
            let r = Interval {
                lo: (b.lo - 1e-9).ceil(),
                hi: (b.hi + 1e-9).floor(),
            };
            if r.lo > r.hi {
                return Err(PropagationError::Infeasible {
                    node: i,
                    a: b,
                    b: r,
                });
            }
            changed |= s.tighten(i, r)?;
        }
    }
    Ok(changed)
}

fn significant(before: &BoundStore, after: &BoundStore) -> bool {
    before.bounds.iter().zip(&after.bounds).any(|(a, b)| {
        let scale = 1.0f64.max(a.mag().min(1e12));
        let dl = if a.lo.is_finite() {
            b.lo - a.lo
        } else if b.lo.is_finite() {
            f64::INFINITY
        } else {
            0.0
        };
        let dh = if a.hi.is_finite() {
            a.hi - b.hi
        } else if b.hi.is_finite() {
            f64::INFINITY
        } else {
            0.0
        };
        dl > PROGRESS_TOL * scale || dh > PROGRESS_TOL * scale
    })
}

/// Alternating forward and top-down inverse sweeps with the given root
/// ranges, until no significant change or [`MAX_SWEEPS`] sweeps.
pub fn inverse_propagate(
    dag: &ExprDag,
    store: &BoundStore,
    roots: &[RootBound],
) -> Result<BoundStore, PropagationError> {
    inverse_propagate_with(dag, store, roots, MAX_SWEEPS)
}

pub fn inverse_propagate_with(
    dag: &ExprDag,
    store: &BoundStore,
    roots: &[RootBound],
    max_sweeps: usize,
) -> Result<BoundStore, PropagationError> {
    let mut s = store.clone();
    forward_in_place(dag, &mut s)?;
    for _ in 0..max_sweeps {
        let before = s.clone();
        for r in roots {
            s.tighten(r.root, r.bounds)?;
        }
        for id in (0..dag.len()).rev() {
            inverse_node(dag, id, &mut s)?;
        }
        round_integers(dag, &mut s)?;
        forward_in_place(dag, &mut s)?;
        if !significant(&before, &s) {
            break;
        }
    }
    Ok(s)
}

/// Root ranges of the model's constraints.
pub fn constraint_roots(dag: &ExprDag) -> Vec<RootBound> {
    dag.constraints
        .iter()
        .map(|c| RootBound {
            root: c.root,
            bounds: Interval { lo: c.lo, hi: c.hi },
        })
        .collect()
}

/// Full bound tightening from the declared bounds and the model's
/// constraints.
pub fn propagate_constraints(
    dag: &ExprDag,
    store: &BoundStore,
) -> Result<BoundStore, PropagationError> {
    inverse_propagate(dag, store, &constraint_roots(dag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{normalize, parse_model};

    fn run(src: &str) -> (ExprDag, BoundStore) {
        let d = normalize(&parse_model(src).unwrap()).unwrap();
        let s = propagate_constraints(&d, &BoundStore::from_dag(&d)).unwrap();
        (d, s)
    }

    #[test]
    fn linear_constraint_tightens_both_variables() {
        let (_, s) = run("var x, y in [0,2]; min 0; s.t. x + y <= 1;");
        assert_eq!(s.get(0), Interval::new(0.0, 1.0));
        assert_eq!(s.get(1), Interval::new(0.0, 1.0));
    }

    #[test]
    fn square_bound_gives_symmetric_range() {
        let (_, s) = run("var x in [-5,5]; min 0; s.t. x^2 <= 1;");
        assert_eq!(s.get(0), Interval::new(-1.0, 1.0));
    }

    #[test]
    fn product_equality_divides() {
        let (_, s) = run("var x in [1,2]; var y in [1,10]; min 0; s.t. x*y = 6;");
        assert_eq!(s.get(1), Interval::new(3.0, 6.0));
    }

    #[test]
    fn infeasibility_is_reported() {
        let d = normalize(&parse_model("var x in [0,1]; min 0; s.t. x >= 2;").unwrap()).unwrap();
        let r = propagate_constraints(&d, &BoundStore::from_dag(&d));
        assert!(matches!(r, Err(PropagationError::Infeasible { .. })));
    }

    #[test]
    fn integer_bounds_are_rounded() {
        let (_, s) = run("var n in [0,10] integer; min 0; s.t. 2*n <= 7;");
        assert_eq!(s.get(0), Interval::new(0.0, 3.0));
    }

    #[test]
    fn log_and_exp_inverses() {
        let (_, s) = run("var x in [0.1,100]; min 0; s.t. log(x) <= 0;");
        assert!(s.get(0).hi <= 1.0 + 1e-15 && s.get(0).hi >= 1.0);
        let (_, s) = run("var x in [-10,10]; min 0; s.t. exp(x) <= 1;");
        assert!(s.get(0).hi >= 0.0 && s.get(0).hi <= 1e-15);
    }

    #[test]
    fn odd_power_inverse_keeps_sign() {
        let (_, s) = run("var x in [-5,5]; min 0; s.t. x^3 >= 8;");
        let b = s.get(0);
        assert!(b.lo <= 2.0 && b.lo > 2.0 - 1e-12 && b.hi == 5.0);
    }

    #[test]
    fn negative_power_inverse() {
        let (_, s) = run("var x in [0.1,10]; min 0; s.t. x^(-1) >= 2;");
        let b = s.get(0);
        assert!(b.hi >= 0.5 && b.hi < 0.5 + 1e-12);
    }
}
