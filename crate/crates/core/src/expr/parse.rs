//! Recursive-descent parser for the model text format.
//!
//! ```text
//! # comment
//! var x, y in [0.1, 1];
//! var n in [0, 5] integer;
//! min x*log(y);
//! s.t. x + y <= 1;
//! ```

use super::model::{Constraint, Expr, Model, ObjSense, Objective, Sense, VarDecl};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("line {line}, column {col}: undeclared variable `{name}`")]
    UndeclaredVariable {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("line {line}, column {col}: unsupported operator `{name}`")]
    UnsupportedOperator {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("line {line}: variable `{name}` declared twice")]
    DuplicateVariable { line: usize, name: String },
    #[error("line {line}: invalid bounds for `{name}`: [{lo}, {hi}]")]
    InvalidBounds {
        line: usize,
        name: String,
        lo: f64,
        hi: f64,
    },
    #[error("line {line}: more than one objective")]
    DuplicateObjective { line: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    SubjectTo,
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tl, tc) = (line, col);
        let rest: String = chars[i..chars.len().min(i + 4)].iter().collect();
        if rest == "s.t." {
            out.push(Token {
                tok: Tok::SubjectTo,
                line: tl,
                col: tc,
            });
            i += 4;
            col += 4;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                line: tl,
                col: tc,
                msg: format!("malformed number `{text}`"),
            })?;
            col += i - start;
            out.push(Token {
                tok: Tok::Num(v),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.')
            {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(text),
                line: tl,
                col: tc,
            });
            continue;
        }
        let two: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let sym: Option<(&'static str, usize)> = match two.as_str() {
            "<=" => Some(("<=", 2)),
            ">=" => Some((">=", 2)),
            "==" => Some(("=", 2)),
            _ => match c {
                '+' => Some(("+", 1)),
                '-' => Some(("-", 1)),
                '*' => Some(("*", 1)),
                '/' => Some(("/", 1)),
                '^' => Some(("^", 1)),
                '(' => Some(("(", 1)),
                ')' => Some((")", 1)),
                '[' => Some(("[", 1)),
                ']' => Some(("]", 1)),
                ',' => Some((",", 1)),
                ';' => Some((";", 1)),
                '=' => Some(("=", 1)),
                ':' => Some((":", 1)),
                _ => None,
            },
        };
        match sym {
            Some((s, n)) => {
                out.push(Token {
                    tok: Tok::Sym(s),
                    line: tl,
                    col: tc,
                });
                i += n;
                col += n;
            }
            None => {
                return Err(ParseError::Syntax {
                    line: tl,
                    col: tc,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    model: Model,
}

/// Parses a model from text.
pub fn parse_model(src: &str) -> Result<Model, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        model: Model::default(),
    };
    p.parse_all()?;
    Ok(p.model)
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, t: &Token, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(x) if *x == s)
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Sym(x) if *x == s => Ok(()),
            other => self.err(&t, format!("expected `{s}`, found {}", describe(other))),
        }
    }

    fn parse_all(&mut self) -> Result<(), ParseError> {
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof => return Ok(()),
                Tok::Sym(";") => {
                    self.next();
                }
                Tok::Ident(w) if w == "var" => {
                    self.next();
                    self.parse_var_decl(t.line)?;
                }
                Tok::Ident(w) if w == "min" || w == "max" => {
                    self.next();
                    if self.model.objective.is_some() {
                        return Err(ParseError::DuplicateObjective { line: t.line });
                    }
                    let sense = if w == "min" {
                        ObjSense::Min
                    } else {
                        ObjSense::Max
                    };
                    let expr = self.parse_expr()?;
                    self.end_statement()?;
                    self.model.objective = Some(Objective { sense, expr });
                }
                Tok::SubjectTo => {
                    self.next();
                    if matches!(self.peek().tok, Tok::Eof) {
                        return Ok(());
                    }
                    self.parse_constraint()?;
                }
                Tok::Ident(w) if w == "subject" => {
                    self.next();
                    match self.next().tok {
                        Tok::Ident(ref to) if to == "to" => {}
                        ref other => {
                            return self
                                .err(&t, format!("expected `to`, found {}", describe(other)))
                        }
                    }
                    self.parse_constraint()?;
                }
                _ => self.parse_constraint()?,
            }
        }
    }

    fn end_statement(&mut self) -> Result<(), ParseError> {
        if matches!(self.peek().tok, Tok::Eof) {
            return Ok(());
        }
        self.expect_sym(";")
    }

    fn parse_var_decl(&mut self, line: usize) -> Result<(), ParseError> {
        let mut names = Vec::new();
        loop {
            let t = self.next();
            match t.tok {
                Tok::Ident(ref n) if !is_reserved(n) => names.push(n.clone()),
                ref other => {
                    return self.err(
                        &t,
                        format!("expected variable name, found {}", describe(other)),
                    )
                }
            }
            if self.is_sym(",") {
                self.next();
            } else {
                break;
            }
        }
        let t = self.next();
        match t.tok {
            Tok::Ident(ref w) if w == "in" => {}
            ref other => return self.err(&t, format!("expected `in`, found {}", describe(other))),
        }
        self.expect_sym("[")?;
        let lo = self.parse_const()?;
        self.expect_sym(",")?;
        let hi = self.parse_const()?;
        self.expect_sym("]")?;
        let mut integer = false;
        if let Tok::Ident(w) = &self.peek().tok {
            if w == "integer" {
                integer = true;
                self.next();
            }
        }
        self.end_statement()?;
        for name in names {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(ParseError::InvalidBounds { line, name, lo, hi });
            }
            if self.model.var_index(&name).is_some() {
                return Err(ParseError::DuplicateVariable { line, name });
            }
            self.model.vars.push(VarDecl {
                name,
                lo,
                hi,
                integer,
            });
        }
        Ok(())
    }

    fn parse_const(&mut self) -> Result<f64, ParseError> {
        let t = self.peek().clone();
        let e = self.parse_expr()?;
        if !e.is_constant() {
            return self.err(&t, "bound must be a constant expression");
        }
        Ok(e.eval(&[]))
    }

    fn parse_constraint(&mut self) -> Result<(), ParseError> {
        let start = self.peek().clone();
        // optional `name:` prefix
        let mut name = None;
        if let Tok::Ident(n) = &start.tok {
            if matches!(
                self.toks.get(self.pos + 1).map(|t| &t.tok),
                Some(Tok::Sym(":"))
            ) {
                name = Some(n.clone());
                self.next();
                self.next();
            }
        }
        let lhs = self.parse_expr()?;
        let t = self.next();
        let sense = match t.tok {
            Tok::Sym("<=") => Sense::Le,
            Tok::Sym(">=") => Sense::Ge,
            Tok::Sym("=") => Sense::Eq,
            ref other => {
                return self.err(
                    &t,
                    format!("expected `<=`, `>=` or `=`, found {}", describe(other)),
                )
            }
        };
        let rhs = self.parse_expr()?;
        self.end_statement()?;
        let (body, rhs) = if rhs.is_constant() {
            (lhs, rhs.eval(&[]))
        } else {
            (Expr::sub(lhs, rhs), 0.0)
        };
        let idx = self.model.constraints.len();
        self.model.constraints.push(Constraint {
            name: name.unwrap_or_else(|| format!("c{idx}")),
            body,
            sense,
            rhs,
        });
        Ok(())
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_term()?;
        loop {
            if self.is_sym("+") {
                self.next();
                lhs = Expr::add(lhs, self.parse_term()?);
            } else if self.is_sym("-") {
                self.next();
                lhs = Expr::sub(lhs, self.parse_term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            if self.is_sym("*") {
                self.next();
                lhs = Expr::mul(lhs, self.parse_unary()?);
            } else if self.is_sym("/") {
                self.next();
                lhs = Expr::div(lhs, self.parse_unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        if self.is_sym("-") {
            self.next();
            let inner = self.parse_unary()?;
            return Ok(match inner {
                Expr::Num(v) => Expr::Num(-v),
                other => Expr::Neg(Box::new(other)),
            });
        }
        if self.is_sym("+") {
            self.next();
            return self.parse_unary();
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_primary()?;
        if self.is_sym("^") {
            let t = self.next();
            let exp = self.parse_unary()?;
            if !exp.is_constant() {
                return Err(ParseError::UnsupportedOperator {
                    line: t.line,
                    col: t.col,
                    name: "^ with a variable exponent".into(),
                });
            }
            let e = exp.eval(&[]);
            if !e.is_finite() {
                return self.err(&t, "exponent must be finite");
            }
            return Ok(Expr::pow(base, e));
        }
        Ok(base)
    }

    fn parse_primary(&mut self) -> Result<Expr, ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Sym("(") => {
                let e = self.parse_expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(ref name) => {
                if self.is_sym("(") {
                    let f = match name.as_str() {
                        "exp" => Expr::exp as fn(Expr) -> Expr,
                        "log" | "ln" => Expr::log,
                        _ => {
                            return Err(ParseError::UnsupportedOperator {
                                line: t.line,
                                col: t.col,
                                name: name.clone(),
                            })
                        }
                    };
                    self.next();
                    let arg = self.parse_expr()?;
                    self.expect_sym(")")?;
                    return Ok(f(arg));
                }
                match name.as_str() {
                    "inf" => return Ok(Expr::Num(f64::INFINITY)),
                    "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
                    _ => {}
                }
                match self.model.var_index(name) {
                    Some(i) => Ok(Expr::Var(i)),
                    None => Err(ParseError::UndeclaredVariable {
                        line: t.line,
                        col: t.col,
                        name: name.clone(),
                    }),
                }
            }
            ref other => self.err(
                &t,
                format!("expected an expression, found {}", describe(other)),
            ),
        }
    }
}

fn is_reserved(w: &str) -> bool {
    matches!(
        w,
        "var" | "min" | "max" | "in" | "integer" | "exp" | "log" | "ln" | "inf" | "pi"
    )
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(v) => format!("number {v}"),
        Tok::SubjectTo => "`s.t.`".into(),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}
