//! CPLEX-style LP text.
//!
//! ```text
//! Minimize
//!  obj: 2 x + 3 y
//! Subject To
//!  c1: x + y <= 1
//! Bounds
//!  0 <= x <= 1
//!  y free
//! End
//! ```

use super::system::{LinearSystem, RowSense, Tag};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LpFormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

fn fmt(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

fn linear(coefs: &[(usize, f64)], names: &[String]) -> String {
    if coefs.is_empty() {
        return "0".into();
    }
    let mut s = String::new();
    for (k, &(j, a)) in coefs.iter().enumerate() {
        if k == 0 {
            if a < 0.0 {
                s.push_str("- ");
            }
        } else {
            s.push_str(if a < 0.0 { " - " } else { " + " });
        }
        s.push_str(&format!("{} {}", fmt(a.abs()), names[j]));
    }
    s
}

fn sanitize(names: &[String]) -> Vec<String> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let ok = !n.is_empty()
                && !n.starts_with(|c: char| c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E')
                && n.chars()
                    .all(|c| c.is_ascii_alphanumeric() || "_.[]".contains(c));
            if ok {
                n.clone()
            } else {
                format!("v{i}")
            }
        })
        .collect()
}

/// Writes `sys` in LP format; rows keep their names when those are valid
/// identifiers. Tags are emitted as comments.
pub fn export_lp(sys: &LinearSystem) -> String {
    let names = sanitize(&sys.names);
    let mut s = String::from("\\ relaxation\nMinimize\n");
    let mut obj = linear(&sys.objective, &names);
    if sys.obj_constant != 0.0 {
        if sys.objective.is_empty() {
            obj = fmt(sys.obj_constant);
        } else {
            let c = sys.obj_constant;
            obj.push_str(&format!(
                " {} {}",
                if c < 0.0 { "-" } else { "+" },
                fmt(c.abs())
            ));
        }
    }
    s.push_str(&format!(" obj: {obj}\nSubject To\n"));
    for (i, r) in sys.rows.iter().enumerate() {
        let valid = sanitize(std::slice::from_ref(&r.name))[0] == r.name;
        let name = if valid {
            r.name.clone()
        } else {
            format!("r{i}")
        };
        let op = match r.sense {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        };
        s.push_str(&format!(
            " {name}: {} {op} {}\n",
            linear(&r.coefs, &names),
            fmt(r.rhs)
        ));
    }
    s.push_str("Bounds\n");
    for (j, n) in names.iter().enumerate() {
        let (lo, hi) = (sys.lo[j], sys.hi[j]);
        let line = match (lo.is_finite(), hi.is_finite()) {
            (false, false) => format!(" {n} free"),
            (true, false) => format!(" {n} >= {}", fmt(lo)),
            (false, true) => format!(" -inf <= {n} <= {}", fmt(hi)),
            (true, true) => format!(" {} <= {n} <= {}", fmt(lo), fmt(hi)),
        };
        s.push_str(&line);
        s.push('\n');
    }
    s.push_str("End\n");
    s
}

#[derive(PartialEq)]
enum Section {
    None,
    Objective,
    Rows,
    Bounds,
}

fn num(t: &str) -> Option<f64> {
    match t.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        _ => t.parse().ok(),
    }
}

/// Parses `lhs` of the form `[-] a x + b y - c` into coefficients and a
/// constant.
fn parse_linear(
    text: &str,
    sys: &mut LinearSystem,
    line: usize,
) -> Result<(Vec<(usize, f64)>, f64), LpFormatError> {
    let spaced = text.replace('+', " + ").replace('-', " - ");
    // re-join exponents like 1e - 05
    let mut toks: Vec<String> = Vec::new();
    for t in spaced.split_whitespace() {
        if let Some(last) = toks.last_mut() {
            if (t == "-" || t == "+")
                && (last.ends_with('e') || last.ends_with('E'))
                && last[..last.len() - 1].parse::<f64>().is_ok()
            {
                last.push_str(t);
                continue;
            }
            if (last.ends_with("e-")
                || last.ends_with("e+")
                || last.ends_with("E-")
                || last.ends_with("E+"))
                && t.parse::<f64>().is_ok()
            {
                last.push_str(t);
                continue;
            }
        }
        toks.push(t.to_string());
    }
    let mut coefs = Vec::new();
    let mut constant = 0.0;
    let mut sign = 1.0;
    let mut pending: Option<f64> = None;
    for t in toks {
        match t.as_str() {
            "+" => {}
            "-" => sign = -sign,
            _ => {
                if let Some(v) = num(&t) {
                    if let Some(p) = pending {
                        constant += p;
                    }
                    pending = Some(sign * v);
                    sign = 1.0;
                } else {
                    let j = match sys.var_index(&t) {
                        Some(j) => j,
                        None => sys.add_var(t.clone(), 0.0, f64::INFINITY),
                    };
                    coefs.push((j, pending.take().unwrap_or(1.0) * sign));
                    sign = 1.0;
                }
            }
        }
    }
    if let Some(p) = pending {
        constant += p;
    }
    if sign != 1.0 {
        return Err(LpFormatError::Syntax {
            line,
            msg: "dangling sign".into(),
        });
    }
    Ok((coefs, constant))
}

/// Reads LP text produced by [`export_lp`] (and the common subset of the
/// format: `Minimize`/`Maximize`, `Subject To`, `Bounds`, `End`).
pub fn parse_lp(text: &str) -> Result<LinearSystem, LpFormatError> {
    let mut sys = LinearSystem::new();
    let mut sec = Section::None;
    let mut maximize = false;
    let mut obj_text = String::new();
    let mut bounds: Vec<(usize, String)> = Vec::new();
    let mut rows: Vec<(usize, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.split('\\').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        match l.to_ascii_lowercase().as_str() {
            "minimize" | "minimise" | "min" => {
                sec = Section::Objective;
                continue;
            }
            "maximize" | "maximise" | "max" => {
                maximize = true;
                sec = Section::Objective;
                continue;
            }
            "subject to" | "such that" | "st" | "s.t." => {
                sec = Section::Rows;
                continue;
            }
            "bounds" => {
                sec = Section::Bounds;
                continue;
            }
            "end" => break,
            _ => {}
        }
        match sec {
            Section::Objective => {
                obj_text.push(' ');
                obj_text.push_str(l);
            }
            Section::Rows => rows.push((line, l.to_string())),
            Section::Bounds => bounds.push((line, l.to_string())),
            Section::None => {
                return Err(LpFormatError::Syntax {
                    line,
                    msg: "content outside a section".into(),
                })
            }
        }
    }
    // declare variables in bound order first so re-export is stable
    for (_, b) in &bounds {
        let toks: Vec<&str> = b.split_whitespace().collect();
        let name = match toks.as_slice() {
            [_, "<=", v, "<=", _] => v,
            [v, ..] => v,
            [] => continue,
        };
        if sys.var_index(name).is_none() {
            sys.add_var(*name, 0.0, f64::INFINITY);
        }
    }
    // objective
    let body = match obj_text.split_once(':') {
        Some((_, b)) => b.to_string(),
        None => obj_text,
    };
    let (c, k) = parse_linear(&body, &mut sys, 0)?;
    let (c, k) = if maximize {
        (c.into_iter().map(|(j, a)| (j, -a)).collect(), -k)
    } else {
        (c, k)
    };
    for (line, r) in rows {
        let (name, body) = match r.split_once(':') {
            Some((n, b)) => (n.trim().to_string(), b.to_string()),
            None => (format!("r{}", sys.n_rows()), r.clone()),
        };
        let (op, sense) = if body.contains("<=") {
            ("<=", RowSense::Le)
        } else if body.contains(">=") {
            (">=", RowSense::Ge)
        } else if body.contains("=<") {
            ("=<", RowSense::Le)
        } else if body.contains("=>") {
            ("=>", RowSense::Ge)
        } else if body.contains('=') {
            ("=", RowSense::Eq)
        } else if body.contains('<') {
            ("<", RowSense::Le)
        } else if body.contains('>') {
            (">", RowSense::Ge)
        } else {
            return Err(LpFormatError::Syntax {
                line,
                msg: "constraint without relational operator".into(),
            });
        };
        let (lhs, rhs) = body.split_once(op).unwrap();
        let (coefs, kl) = parse_linear(lhs, &mut sys, line)?;
        let rhs = num(rhs.trim()).ok_or_else(|| LpFormatError::Syntax {
            line,
            msg: format!("bad right-hand side `{}`", rhs.trim()),
        })?;
        sys.add_row(name, coefs, sense, rhs - kl, Tag::ModelLinear);
    }
    for (line, b) in bounds {
        let err = || LpFormatError::Syntax {
            line,
            msg: format!("cannot read bound `{b}`"),
        };
        let toks: Vec<&str> = b.split_whitespace().collect();
        let var = |t: &str, sys: &mut LinearSystem| match sys.var_index(t) {
            Some(j) => j,
            None => sys.add_var(t, 0.0, f64::INFINITY),
        };
        match toks.as_slice() {
            [v, f] if f.eq_ignore_ascii_case("free") => {
                let j = var(v, &mut sys);
                sys.lo[j] = f64::NEG_INFINITY;
                sys.hi[j] = f64::INFINITY;
            }
            [l, "<=", v, "<=", u] => {
                let j = var(v, &mut sys);
                sys.lo[j] = num(l).ok_or_else(err)?;
                sys.hi[j] = num(u).ok_or_else(err)?;
            }
            [v, op, val] => {
                let j = var(v, &mut sys);
                let x = num(val).ok_or_else(err)?;
                match *op {
                    ">=" => sys.lo[j] = x,
                    "<=" => sys.hi[j] = x,
                    "=" => {
                        sys.lo[j] = x;
                        sys.hi[j] = x;
                    }
                    _ => return Err(err()),
                }
            }
            _ => return Err(err()),
        }
    }
    sys.set_objective(c, k);
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::solve;

    fn small() -> LinearSystem {
        let mut s = LinearSystem::new();
        let x = s.add_var("x", 0.0, 1.0);
        let y = s.add_var("y", f64::NEG_INFINITY, 2.5e-5);
        let z = s.add_var("z", f64::NEG_INFINITY, f64::INFINITY);
        s.add_row(
            "c1",
            [(x, 1.0), (y, -2.0)],
            RowSense::Le,
            1.0,
            Tag::ModelLinear,
        );
        s.add_row(
            "c2",
            [(z, 1.0), (x, 1.0)],
            RowSense::Eq,
            -0.5,
            Tag::McCormick,
        );
        s.set_objective([(x, -1.0), (y, -1.0), (z, 1e-3)], 2.0);
        s
    }

    #[test]
    fn export_is_stable() {
        let a = export_lp(&small());
        let b = export_lp(&parse_lp(&a).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn round_trip_preserves_optimum() {
        let s = small();
        let r = parse_lp(&export_lp(&s)).unwrap();
        let (a, b) = (solve(&s), solve(&r));
        assert!(a.is_optimal() && b.is_optimal());
        assert!((a.objective - b.objective).abs() < 1e-9);
    }

    #[test]
    fn empty_objective_is_written_as_zero() {
        let mut s = LinearSystem::new();
        s.add_var("x", 0.0, 1.0);
        assert!(export_lp(&s).contains("obj: 0\n"));
    }
}
