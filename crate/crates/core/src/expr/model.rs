use std::fmt;

/// Expression tree as written in the model file. Variables refer to
/// positions in [`Model::vars`].
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Exp(Box<Expr>),
    Log(Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjSense {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub sense: ObjSense,
    pub expr: Expr,
}

/// `body (sense) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub body: Expr,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Model {
    pub vars: Vec<VarDecl>,
    pub objective: Option<Objective>,
    pub constraints: Vec<Constraint>,
}

impl Expr {
    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, e: f64) -> Expr {
        Expr::Pow(Box::new(a), e)
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::Exp(Box::new(a))
    }

    pub fn log(a: Expr) -> Expr {
        Expr::Log(Box::new(a))
    }

    /// Sum of a list of expressions; `0` when empty.
    pub fn sum(items: Vec<Expr>) -> Expr {
        let mut it = items.into_iter();
        match it.next() {
            None => Expr::Num(0.0),
            Some(first) => it.fold(first, Expr::add),
        }
    }

    pub fn product(items: Vec<Expr>) -> Expr {
        let mut it = items.into_iter();
        match it.next() {
            None => Expr::Num(1.0),
            Some(first) => it.fold(first, Expr::mul),
        }
    }

    /// Evaluates at `x`; domain violations yield NaN or infinities.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, e) => pow_value(a.eval(x), *e),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Log(a) => a.eval(x).ln(),
        }
    }

    /// Number of operator nodes when viewed as a tree.
    pub fn operator_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 0,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Exp(a) | Expr::Log(a) => 1 + a.operator_count(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.operator_count() + b.operator_count()
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Exp(a) | Expr::Log(a) => a.is_constant(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.is_constant() && b.is_constant()
            }
        }
    }

    pub fn fmt_with(&self, names: &[String]) -> String {
        let mut s = String::new();
        self.write(&mut s, names, 0);
        s
    }

    fn write(&self, out: &mut String, names: &[String], parent: u8) {
        // precedence: 1 additive, 2 multiplicative, 3 unary, 4 power
        match self {
            Expr::Num(v) => {
                let t = fmt_num(*v);
                if *v < 0.0 && parent > 1 {
                    out.push('(');
                    out.push_str(&t);
                    out.push(')');
                } else {
                    out.push_str(&t);
                }
                return;
            }
            Expr::Var(i) => {
                match names.get(*i) {
                    Some(n) => out.push_str(n),
                    None => out.push_str(&format!("x{i}")),
                }
                return;
            }
            _ => {}
        }
        let my = match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        };
        let paren = my < parent;
        if paren {
            out.push('(');
        }
        match self {
            Expr::Add(a, b) => {
                a.write(out, names, 1);
                out.push_str(" + ");
                b.write(out, names, 2);
            }
            Expr::Sub(a, b) => {
                a.write(out, names, 1);
                out.push_str(" - ");
                b.write(out, names, 2);
            }
            Expr::Mul(a, b) => {
                a.write(out, names, 2);
                out.push('*');
                b.write(out, names, 3);
            }
            Expr::Div(a, b) => {
                a.write(out, names, 2);
                out.push('/');
                b.write(out, names, 3);
            }
            Expr::Neg(a) => {
                out.push('-');
                a.write(out, names, 3);
            }
            Expr::Pow(a, e) => {
                a.write(out, names, 5);
                out.push('^');
                if *e < 0.0 || e.fract() != 0.0 {
                    out.push('(');
                    out.push_str(&fmt_num(*e));
                    out.push(')');
                } else {
                    out.push_str(&fmt_num(*e));
                }
            }
            Expr::Exp(a) => {
                out.push_str("exp(");
                a.write(out, names, 0);
                out.push(')');
            }
            Expr::Log(a) => {
                out.push_str("log(");
                a.write(out, names, 0);
                out.push(')');
            }
            Expr::Num(_) | Expr::Var(_) => unreachable!(),
        }
        if paren {
            out.push(')');
        }
    }
}

/// Formats a float so that parsing it back yields the same value.
pub fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:?}")
    }
}

/// `x^e` with the sign convention of the interval layer: integer exponents
/// use `powi`, fractional exponents require `x >= 0`.
pub fn pow_value(x: f64, e: f64) -> f64 {
    match crate::interval::as_integer(e) {
        Some(k) if k.abs() <= i32::MAX as i64 => x.powi(k as i32),
        _ => {
            if x < 0.0 {
                f64::NAN
            } else {
                x.powf(e)
            }
        }
    }
}

impl Model {
    pub fn var_names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn add_var(&mut self, name: &str, lo: f64, hi: f64) -> usize {
        self.vars.push(VarDecl {
            name: name.to_string(),
            lo,
            hi,
            integer: false,
        });
        self.vars.len() - 1
    }

    /// Objective value in the model's own sense; `0` without an objective.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.as_ref().map_or(0.0, |o| o.expr.eval(x))
    }

    /// Largest constraint or bound violation at `x`, scaled by `1 + |rhs|`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &xi) in self.vars.iter().zip(x) {
            worst = worst.max((v.lo - xi) / (1.0 + v.lo.abs()));
            worst = worst.max((xi - v.hi) / (1.0 + v.hi.abs()));
        }
        for c in &self.constraints {
            let g = c.body.eval(x);
            if !g.is_finite() {
                return f64::INFINITY;
            }
            let s = 1.0 + c.rhs.abs();
            let viol = match c.sense {
                Sense::Le => g - c.rhs,
                Sense::Ge => c.rhs - g,
                Sense::Eq => (g - c.rhs).abs(),
            };
            worst = worst.max(viol / s);
        }
        worst
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    pub fn to_text(&self) -> String {
        let names = self.var_names();
        let mut s = String::new();
        for v in &self.vars {
            s.push_str(&format!(
                "var {} in [{}, {}]{};\n",
                v.name,
                fmt_num(v.lo),
                fmt_num(v.hi),
                if v.integer { " integer" } else { "" }
            ));
        }
        if let Some(o) = &self.objective {
            let kw = match o.sense {
                ObjSense::Min => "min",
                ObjSense::Max => "max",
            };
            s.push_str(&format!("{kw} {};\n", o.expr.fmt_with(&names)));
        }
        for c in &self.constraints {
            let op = match c.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            s.push_str(&format!(
                "s.t. {} {op} {};\n",
                c.body.fmt_with(&names),
                fmt_num(c.rhs)
            ));
        }
        s
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
