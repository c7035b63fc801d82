use super::model::{pow_value, Constraint, Expr, Model, ObjSense, Objective, Sense, VarDecl};
use std::collections::HashMap;

pub type NodeId = usize;

/// Operator node. Children always have smaller ids than their parent.
#[derive(Debug, Clone)]
pub enum Node {
    Var(usize),
    Const(f64),
    /// `constant + Σ coef·child`
    Affine {
        terms: Vec<(NodeId, f64)>,
        constant: f64,
    },
    /// n-ary product; children sorted by id
    Mul(Vec<NodeId>),
    /// `num / den`, relaxed through `num = self·den`
    Div(NodeId, NodeId),
    Pow(NodeId, f64),
    Exp(NodeId),
    Log(NodeId),
}

fn canon(v: f64) -> u64 {
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Var(usize),
    Const(u64),
    Affine(Vec<(NodeId, u64)>, u64),
    Mul(Vec<NodeId>),
    Div(NodeId, NodeId),
    Pow(NodeId, u64),
    Exp(NodeId),
    Log(NodeId),
}

impl Node {
    fn key(&self) -> Key {
        match self {
            Node::Var(i) => Key::Var(*i),
            Node::Const(v) => Key::Const(canon(*v)),
            Node::Affine { terms, constant } => Key::Affine(
                terms.iter().map(|&(c, a)| (c, canon(a))).collect(),
                canon(*constant),
            ),
            Node::Mul(ch) => Key::Mul(ch.clone()),
            Node::Div(a, b) => Key::Div(*a, *b),
            Node::Pow(a, e) => Key::Pow(*a, canon(*e)),
            Node::Exp(a) => Key::Exp(*a),
            Node::Log(a) => Key::Log(*a),
        }
    }

    pub fn children(&self) -> Vec<NodeId> {
        match self {
            Node::Var(_) | Node::Const(_) => vec![],
            Node::Affine { terms, .. } => terms.iter().map(|t| t.0).collect(),
            Node::Mul(ch) => ch.clone(),
            Node::Div(a, b) => vec![*a, *b],
            Node::Pow(a, _) | Node::Exp(a) | Node::Log(a) => vec![*a],
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Var(_) | Node::Const(_))
    }

    /// Anything other than leaves and affine combinations.
    pub fn is_nonlinear(&self) -> bool {
        !matches!(self, Node::Var(_) | Node::Const(_) | Node::Affine { .. })
    }

    pub fn is_univariate(&self) -> bool {
        matches!(self, Node::Pow(..) | Node::Exp(_) | Node::Log(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Node::Var(_) => "var",
            Node::Const(_) => "const",
            Node::Affine { .. } => "affine",
            Node::Mul(_) => "mul",
            Node::Div(..) => "div",
            Node::Pow(..) => "pow",
            Node::Exp(_) => "exp",
            Node::Log(_) => "log",
        }
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

/// Objective in minimization form: `scale·value(root) + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct DagObjective {
    pub root: NodeId,
    pub scale: f64,
    pub offset: f64,
    /// Sense of the source model; `Max` objectives were negated.
    pub sense: ObjSense,
}

impl DagObjective {
    /// Minimization-form value given the root value.
    pub fn internal(&self, root_value: f64) -> f64 {
        self.scale * root_value + self.offset
    }

    /// Converts a minimization-form value back to the model's sense.
    pub fn to_model_sense(&self, v: f64) -> f64 {
        match self.sense {
            ObjSense::Min => v,
            ObjSense::Max => -v,
        }
    }
}

/// `lo <= value(root) <= hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct DagConstraint {
    pub name: String,
    pub root: NodeId,
    pub lo: f64,
    pub hi: f64,
}

/// Hash-consed expression DAG of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprDag {
    pub nodes: Vec<Node>,
    pub vars: Vec<VarDecl>,
    pub objective: Option<DagObjective>,
    pub constraints: Vec<DagConstraint>,
}

/// Incremental builder with structural sharing.
#[derive(Debug, Default)]
pub struct DagBuilder {
    nodes: Vec<Node>,
    index: HashMap<Key, NodeId>,
}

impl DagBuilder {
    pub fn new(n_vars: usize) -> Self {
        let mut b = DagBuilder::default();
        for i in 0..n_vars {
            b.add(Node::Var(i));
        }
        b
    }

    pub fn add(&mut self, node: Node) -> NodeId {
        let node = match node {
            Node::Const(v) if v == 0.0 => Node::Const(0.0),
            Node::Mul(mut ch) => {
                ch.sort_unstable();
                Node::Mul(ch)
            }
            Node::Affine {
                mut terms,
                constant,
            } => {
                terms.sort_by_key(|t| t.0);
                Node::Affine { terms, constant }
            }
            n => n,
        };
        debug_assert!(node.children().iter().all(|&c| c < self.nodes.len()));
        let key = node.key();
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(node);
        self.index.insert(key, id);
        id
    }

    pub fn constant(&mut self, v: f64) -> NodeId {
        self.add(Node::Const(v))
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn finish(
        self,
        vars: Vec<VarDecl>,
        objective: Option<DagObjective>,
        constraints: Vec<DagConstraint>,
    ) -> ExprDag {
        ExprDag {
            nodes: self.nodes,
            vars,
            objective,
            constraints,
        }
    }
}

impl ExprDag {
    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    /// Id of the leaf for variable `i`.
    pub fn var_node(&self, i: usize) -> NodeId {
        debug_assert!(matches!(self.nodes[i], Node::Var(j) if j == i));
        i
    }

    pub fn roots(&self) -> Vec<NodeId> {
        let mut r: Vec<NodeId> = self.objective.iter().map(|o| o.root).collect();
        r.extend(self.constraints.iter().map(|c| c.root));
        r
    }

    /// Number of parents of each node.
    pub fn parent_counts(&self) -> Vec<usize> {
        let mut cnt = vec![0; self.nodes.len()];
        for n in &self.nodes {
            for c in n.children() {
                cnt[c] += 1;
            }
        }
        cnt
    }

    /// Operator nodes that feed another operator; each gets its own auxiliary
    /// variable. Roots used only as roots are written directly.
    pub fn auxiliary_nodes(&self) -> Vec<NodeId> {
        let parents = self.parent_counts();
        (0..self.nodes.len())
            .filter(|&i| !self.nodes[i].is_leaf() && parents[i] > 0)
            .collect()
    }

    /// Nodes reachable from the roots, in id (topological) order.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = self.roots();
        while let Some(id) = stack.pop() {
            if !seen[id] {
                seen[id] = true;
                stack.extend(self.nodes[id].children());
            }
        }
        seen
    }

    /// Count of nonlinear operator nodes.
    pub fn nonlinear_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_nonlinear()).count()
    }

    /// Evaluates every node at `x`.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            v[i] = match n {
                Node::Var(j) => x[*j],
                Node::Const(c) => *c,
                Node::Affine { terms, constant } => {
                    terms.iter().fold(*constant, |acc, &(c, a)| acc + a * v[c])
                }
                Node::Mul(ch) => ch.iter().map(|&c| v[c]).product(),
                Node::Div(a, b) => v[*a] / v[*b],
                Node::Pow(a, e) => pow_value(v[*a], *e),
                Node::Exp(a) => v[*a].exp(),
                Node::Log(a) => v[*a].ln(),
            };
        }
        v
    }

    /// Objective value in the model's own sense.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        match &self.objective {
            None => 0.0,
            Some(o) => {
                let v = self.eval(x);
                o.to_model_sense(o.internal(v[o.root]))
            }
        }
    }

    /// Expression for node `id`.
    pub fn to_expr(&self, id: NodeId) -> Expr {
        match &self.nodes[id] {
            Node::Var(i) => Expr::Var(*i),
            Node::Const(c) => Expr::Num(*c),
            Node::Affine { terms, constant } => {
                let mut items: Vec<Expr> = terms
                    .iter()
                    .map(|&(c, a)| {
                        if a == 1.0 {
                            self.to_expr(c)
                        } else {
                            Expr::mul(Expr::Num(a), self.to_expr(c))
                        }
                    })
                    .collect();
                if *constant != 0.0 || items.is_empty() {
                    items.push(Expr::Num(*constant));
                }
                Expr::sum(items)
            }
            Node::Mul(ch) => Expr::product(ch.iter().map(|&c| self.to_expr(c)).collect()),
            Node::Div(a, b) => Expr::div(self.to_expr(*a), self.to_expr(*b)),
            Node::Pow(a, e) => Expr::pow(self.to_expr(*a), *e),
            Node::Exp(a) => Expr::exp(self.to_expr(*a)),
            Node::Log(a) => Expr::log(self.to_expr(*a)),
        }
    }

    /// Rebuilds a model whose normalization reproduces this DAG.
    pub fn to_model(&self) -> Model {
        let objective = self.objective.as_ref().map(|o| {
            let (s, c) = match o.sense {
                ObjSense::Min => (o.scale, o.offset),
                ObjSense::Max => (-o.scale, -o.offset),
            };
            let mut e = self.to_expr(o.root);
            if s != 1.0 {
                e = Expr::mul(Expr::Num(s), e);
            }
            if c != 0.0 {
                e = Expr::add(e, Expr::Num(c));
            }
            Objective {
                sense: o.sense,
                expr: e,
            }
        });
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                let (sense, rhs) = if c.lo == c.hi {
                    (Sense::Eq, c.lo)
                } else if c.hi.is_finite() {
                    (Sense::Le, c.hi)
                } else {
                    (Sense::Ge, c.lo)
                };
                Constraint {
                    name: c.name.clone(),
                    body: self.to_expr(c.root),
                    sense,
                    rhs,
                }
            })
            .collect();
        Model {
            vars: self.vars.clone(),
            objective,
            constraints,
        }
    }

    /// Same DAG with every n-ary product split into a left-deep chain of
    /// binary products (children in canonical order, leaves first).
    pub fn binarize(&self) -> ExprDag {
        let mut b = DagBuilder::new(self.n_vars());
        let mut map = vec![0usize; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            map[i] = match n {
                Node::Var(j) => *j,
                Node::Const(c) => b.constant(*c),
                Node::Affine { terms, constant } => b.add(Node::Affine {
                    terms: terms.iter().map(|&(c, a)| (map[c], a)).collect(),
                    constant: *constant,
                }),
                Node::Mul(ch) => {
                    let mut it = ch.iter().map(|&c| map[c]);
                    let first = it.next().expect("empty product");
                    it.fold(first, |acc, c| b.add(Node::Mul(vec![acc, c])))
                }
                Node::Div(x, y) => b.add(Node::Div(map[*x], map[*y])),
                Node::Pow(x, e) => b.add(Node::Pow(map[*x], *e)),
                Node::Exp(x) => b.add(Node::Exp(map[*x])),
                Node::Log(x) => b.add(Node::Log(map[*x])),
            };
        }
        let objective = self.objective.as_ref().map(|o| DagObjective {
            root: map[o.root],
            ..o.clone()
        });
        let constraints = self
            .constraints
            .iter()
            .map(|c| DagConstraint {
                root: map[c.root],
                ..c.clone()
            })
            .collect();
        b.finish(self.vars.clone(), objective, constraints)
    }

    /// Names used in printouts: model names for leaves, `t1, t2, ...` for
    /// auxiliary nodes (numbered in reverse topological order).
    pub fn node_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.nodes.len()).map(|i| format!("n{i}")).collect();
        for (i, v) in self.vars.iter().enumerate() {
            names[i] = v.name.clone();
        }
        let aux = self.auxiliary_nodes();
        let mut k = 1;
        for &id in aux.iter().rev() {
            names[id] = format!("t{k}");
            k += 1;
        }
        names
    }

    /// Auxiliary equations `t = op(children)` in topological order.
    pub fn equations(&self) -> Vec<String> {
        let names = self.node_names();
        self.auxiliary_nodes()
            .into_iter()
            .map(|id| format!("{} = {}", names[id], self.describe(id, &names)))
            .collect()
    }

    /// One-level description of node `id` using `names` for its children.
    pub fn describe(&self, id: NodeId, names: &[String]) -> String {
        let show = |c: NodeId| match &self.nodes[c] {
            Node::Const(v) => format!("{v}"),
            _ => names[c].clone(),
        };
        match &self.nodes[id] {
            Node::Var(i) => self.vars[*i].name.clone(),
            Node::Const(v) => format!("{v}"),
            Node::Affine { terms, constant } => {
                let mut s = String::new();
                for (k, &(c, a)) in terms.iter().enumerate() {
                    let sign = if a < 0.0 {
                        "-"
                    } else if k > 0 {
                        "+"
                    } else {
                        ""
                    };
                    let mag = a.abs();
                    if k > 0 {
                        s.push(' ');
                    }
                    s.push_str(sign);
                    if k > 0 {
                        s.push(' ');
                    }
                    if mag != 1.0 {
                        s.push_str(&format!("{mag}*"));
                    }
                    s.push_str(&show(c));
                }
                if *constant != 0.0 || terms.is_empty() {
                    let sign = if *constant < 0.0 { " - " } else { " + " };
                    s.push_str(&format!("{sign}{}", constant.abs()));
                }
                s
            }
            Node::Mul(ch) => ch.iter().map(|&c| show(c)).collect::<Vec<_>>().join("*"),
            Node::Div(a, b) => format!("{}/{}", show(*a), show(*b)),
            Node::Pow(a, e) => format!("{}^{}", show(*a), e),
            Node::Exp(a) => format!("exp({})", show(*a)),
            Node::Log(a) => format!("log({})", show(*a)),
        }
    }

    /// Counts of node kinds, keyed by a short label.
    pub fn kind_counts(&self) -> std::collections::BTreeMap<&'static str, usize> {
        let mut m = std::collections::BTreeMap::new();
        for n in &self.nodes {
            *m.entry(n.label()).or_insert(0) += 1;
        }
        m
    }

    /// Columns needed by a factorable relaxation: variables, nonlinear
    /// nodes, and affine nodes that are operands of nonlinear nodes.
    pub fn needs_column(&self) -> Vec<bool> {
        let reach = self.reachable();
        let mut need = vec![false; self.nodes.len()];
        for i in 0..self.n_vars() {
            need[i] = true;
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if !reach[i] || !n.is_nonlinear() {
                continue;
            }
            need[i] = true;
            for c in n.children() {
                if !matches!(self.nodes[c], Node::Const(_)) {
                    need[c] = true;
                }
            }
        }
        // affine nodes under affine operands of nonlinear nodes are expanded
        // inline, so only the direct operand needs a column
        need
    }
}
