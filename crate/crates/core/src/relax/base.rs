use super::{RelaxConfig, RelaxError};
use crate::envelopes::{mccormick_cuts, univariate_cuts, CutSide, UnivariateKind};
use crate::expr::{ExprDag, Node, NodeId};
use crate::interval::{BoundStore, Interval};
use crate::lp::{LinearSystem, RowSense, Tag};

/// A linear system together with the LP column of each DAG node.
#[derive(Debug, Clone, PartialEq)]
pub struct Relaxation {
    pub sys: LinearSystem,
    pub columns: Vec<Option<usize>>,
}

/// `Σ coef·column + constant`.
pub type LinearForm = (Vec<(usize, f64)>, f64);

impl Relaxation {
    pub fn column(&self, id: NodeId) -> Option<usize> {
        self.columns[id]
    }

    /// Node value as a linear form over the columns; affine nodes without a
    /// column are expanded.
    pub fn linear_form(&self, dag: &ExprDag, id: NodeId) -> LinearForm {
        if let Some(c) = self.columns[id] {
            return (vec![(c, 1.0)], 0.0);
        }
        match dag.node(id) {
            Node::Const(v) => (vec![], *v),
            Node::Affine { terms, constant } => {
                let mut coefs = Vec::new();
                let mut k = *constant;
                for &(c, a) in terms {
                    let (cf, ck) = self.linear_form(dag, c);
                    coefs.extend(cf.into_iter().map(|(j, b)| (j, a * b)));
                    k += a * ck;
                }
                (coefs, k)
            }
            n => panic!("node {id} ({}) has no column", n.label()),
        }
    }

    /// LP point for a model point: every column gets its node's value.
    pub fn lift(&self, dag: &ExprDag, x: &[f64]) -> Vec<f64> {
        let vals = dag.eval(x);
        let mut out = vec![0.0; self.sys.n_vars()];
        for (id, c) in self.columns.iter().enumerate() {
            if let Some(c) = c {
                out[*c] = vals[id];
            }
        }
        out
    }

    /// Intersects the store with per-column bounds.
    pub fn tighten_store(
        &self,
        store: &mut BoundStore,
        cols: &[Interval],
    ) -> Result<usize, RelaxError> {
        let mut changed = 0;
        for (id, c) in self.columns.iter().enumerate() {
            if let Some(c) = c {
                if store.tighten(id, cols[*c])? {
                    changed += 1;
                }
            }
        }
        Ok(changed)
    }

    /// Adds `form (sense) rhs`.
    pub(crate) fn add_form_row(
        &mut self,
        name: String,
        form: LinearForm,
        sense: RowSense,
        rhs: f64,
        tag: Tag,
    ) {
        let (coefs, k) = form;
        self.sys.add_row(name, coefs, sense, rhs - k, tag);
    }
}

pub(crate) fn scaled(form: &LinearForm, a: f64) -> LinearForm {
    (
        form.0.iter().map(|&(j, c)| (j, a * c)).collect(),
        a * form.1,
    )
}

pub(crate) fn sum_forms(forms: &[LinearForm]) -> LinearForm {
    let mut coefs = Vec::new();
    let mut k = 0.0;
    for f in forms {
        coefs.extend_from_slice(&f.0);
        k += f.1;
    }
    (coefs, k)
}

pub(crate) fn univariate_kind(n: &Node) -> Option<(UnivariateKind, NodeId)> {
    match n {
        Node::Pow(c, e) => Some((UnivariateKind::Pow(*e), *c)),
        Node::Exp(c) => Some((UnivariateKind::Exp, *c)),
        Node::Log(c) => Some((UnivariateKind::Log, *c)),
        _ => None,
    }
}

fn finite(store: &BoundStore, id: NodeId, at: NodeId) -> Result<Interval, RelaxError> {
    let b = store.get(id);
    if b.is_finite() {
        Ok(b)
    } else {
        Err(RelaxError::UnboundedOperand {
            node: at,
            operand: id,
            bounds: b,
        })
    }
}

/// Factorable relaxation: one column per variable and per nonlinear node
/// (plus affine operands of nonlinear nodes), affine definitions as
/// equalities, McCormick rows for products and quotients, tangent/secant
/// rows for univariate nodes, and the model constraints on the roots.
/// Integer variables are treated as continuous.
pub fn build_base(
    dag: &ExprDag,
    store: &BoundStore,
    cfg: &RelaxConfig,
) -> Result<Relaxation, RelaxError> {
    let need = dag.needs_column();
    let names = dag.node_names();
    let mut rel = Relaxation {
        sys: LinearSystem::new(),
        columns: vec![None; dag.len()],
    };
    for id in 0..dag.len() {
        if need[id] {
            let b = store.get(id);
            rel.columns[id] = Some(rel.sys.add_var(names[id].clone(), b.lo, b.hi));
        }
    }
    let reach = dag.reachable();
    for id in 0..dag.len() {
        if !reach[id] || rel.columns[id].is_none() {
            continue;
        }
        let me: LinearForm = (vec![(rel.columns[id].unwrap(), 1.0)], 0.0);
        match dag.node(id) {
            Node::Var(_) | Node::Const(_) => {}
            Node::Affine { terms, constant } => {
                let parts: Vec<LinearForm> = terms
                    .iter()
                    .map(|&(c, a)| scaled(&rel.linear_form(dag, c), a))
                    .collect();
                let rhs = sum_forms(&parts);
                let row = sum_forms(&[me, scaled(&rhs, -1.0)]);
                rel.add_form_row(
                    format!("def_{}", names[id]),
                    row,
                    RowSense::Eq,
                    *constant,
                    Tag::ModelLinear,
                );
            }
            Node::Mul(ch) => {
                let &[a, b] = ch.as_slice() else {
                    return Err(RelaxError::NotBinary {
                        node: id,
                        arity: ch.len(),
                    });
                };
                let (ia, ib) = (finite(store, a, id)?, finite(store, b, id)?);
                let (fa, fb) = (rel.linear_form(dag, a), rel.linear_form(dag, b));
                add_mccormick(&mut rel, &names[id], &me, &fa, &fb, ia, ib);
            }
            Node::Div(a, b) => {
                // a = self·b
                let (iv, ib) = (finite(store, id, id)?, finite(store, *b, id)?);
                let (fa, fb) = (rel.linear_form(dag, *a), rel.linear_form(dag, *b));
                add_mccormick(&mut rel, &names[id], &fa, &me, &fb, iv, ib);
            }
            n => {
                let (kind, c) = univariate_kind(n).expect("remaining nodes are univariate");
                let dom = finite(store, c, id)?;
                let cuts = univariate_cuts(kind, dom, cfg.tangents)?;
                let fc = rel.linear_form(dag, c);
                for (k, cut) in cuts.iter().enumerate() {
                    // t - slope·x (>= | <=) intercept
                    let row = sum_forms(&[me.clone(), scaled(&fc, -cut.slope)]);
                    let sense = match cut.side {
                        CutSide::Under => RowSense::Ge,
                        CutSide::Over => RowSense::Le,
                    };
                    rel.add_form_row(
                        format!("uv_{}_{k}", names[id]),
                        row,
                        sense,
                        cut.intercept,
                        Tag::Univariate,
                    );
                }
            }
        }
    }
    for c in &dag.constraints {
        let f = rel.linear_form(dag, c.root);
        if c.lo == c.hi {
            rel.add_form_row(c.name.clone(), f, RowSense::Eq, c.lo, Tag::ModelLinear);
            continue;
        }
        if c.lo.is_finite() {
            rel.add_form_row(
                format!("{}_lo", c.name),
                f.clone(),
                RowSense::Ge,
                c.lo,
                Tag::ModelLinear,
            );
        }
        if c.hi.is_finite() {
            rel.add_form_row(c.name.clone(), f, RowSense::Le, c.hi, Tag::ModelLinear);
        }
    }
    if let Some(o) = &dag.objective {
        let (coefs, k) = scaled(&rel.linear_form(dag, o.root), o.scale);
        rel.sys.set_objective(coefs, k + o.offset);
    }
    Ok(rel)
}

/// McCormick rows for `mu = x·y` with `x ∈ ix`, `y ∈ iy`.
fn add_mccormick(
    rel: &mut Relaxation,
    name: &str,
    mu: &LinearForm,
    x: &LinearForm,
    y: &LinearForm,
    ix: Interval,
    iy: Interval,
) {
    for (k, cut) in mccormick_cuts(ix, iy).iter().enumerate() {
        let row = sum_forms(&[mu.clone(), scaled(x, -cut.a), scaled(y, -cut.b)]);
        let sense = if cut.under {
            RowSense::Ge
        } else {
            RowSense::Le
        };
        rel.add_form_row(format!("mc_{name}_{k}"), row, sense, cut.c, Tag::McCormick);
    }
}
