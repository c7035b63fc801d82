//! Dual simplex over a row basis.
//!
//! Every row and every variable bound is a constraint `lo <= g·x <= hi`.
//! A vertex is fixed by `n` active constraints; the basis matrix holds their
//! `g` vectors as rows and its explicit inverse is kept up to date with rank
//! one updates. Starting from the all-bounds basis with each variable at the
//! bound favoured by its cost the start is dual feasible, and each pivot adds
//! the most violated constraint while the ratio test on the multipliers
//! keeps dual feasibility.

use super::system::{LinearSystem, RowSense};
use super::{LpSolution, LpStatus};
use nalgebra::DMatrix;

const FEAS_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-10;
const REL_PIVOT_TOL: f64 = 1e-9;
/// Stand-in for an infinite bound that has to be active in the start basis.
const BIG: f64 = 1e7;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_SWITCH: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone)]
struct Cons {
    coefs: Vec<(usize, f64)>,
    lo: f64,
    hi: f64,
    /// multiply by this to recover the original row multiplier
    scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 1_000_000,
        }
    }
}

struct State<'a> {
    n: usize,
    cons: Vec<Cons>,
    cost: &'a [f64],
    basis: Vec<usize>,
    side: Vec<Side>,
    artificial: Vec<bool>,
    pos: Vec<Option<usize>>,
    /// `binv[i]` is column `i` of the inverse basis matrix
    binv: Vec<Vec<f64>>,
}

impl State<'_> {
    fn rhs(&self, i: usize) -> f64 {
        let c = &self.cons[self.basis[i]];
        match (self.side[i], self.artificial[i]) {
            (Side::Lower, false) => c.lo,
            (Side::Upper, false) => c.hi,
            (Side::Lower, true) => -BIG,
            (Side::Upper, true) => BIG,
        }
    }

    fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for i in 0..self.n {
            let r = self.rhs(i);
            if r != 0.0 {
                for (xj, b) in x.iter_mut().zip(&self.binv[i]) {
                    *xj += b * r;
                }
            }
        }
        x
    }

    fn dual(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.binv[i].iter().zip(self.cost).map(|(b, c)| b * c).sum())
            .collect()
    }

    fn refactor(&mut self) -> bool {
        let n = self.n;
        let mut b = DMatrix::<f64>::zeros(n, n);
        for (i, &k) in self.basis.iter().enumerate() {
            for &(j, a) in &self.cons[k].coefs {
                b[(i, j)] = a;
            }
        }
        match b.try_inverse() {
            Some(inv) => {
                for i in 0..n {
                    for j in 0..n {
                        self.binv[i][j] = inv[(j, i)];
                    }
                }
                true
            }
            None => false,
        }
    }
}

/// Solves `sys` (minimization).
pub fn solve_with(sys: &LinearSystem, opts: &SolverOptions) -> LpSolution {
    let n = sys.n_vars();
    let m = sys.n_rows();
    let mut cost = vec![0.0; n];
    for &(j, c) in &sys.objective {
        cost[j] += c;
    }
    for j in 0..n {
        if sys.lo[j] > sys.hi[j] {
            return LpSolution::infeasible(n, m);
        }
    }
    let mut cons: Vec<Cons> = (0..n)
        .map(|j| Cons {
            coefs: vec![(j, 1.0)],
            lo: sys.lo[j],
            hi: sys.hi[j],
            scale: 1.0,
        })
        .collect();
    for r in &sys.rows {
        let mx = r.coefs.iter().fold(0.0f64, |a, &(_, c)| a.max(c.abs()));
        if mx == 0.0 {
            let ok = match r.sense {
                RowSense::Le => 0.0 <= r.rhs + FEAS_TOL,
                RowSense::Ge => 0.0 >= r.rhs - FEAS_TOL,
                RowSense::Eq => r.rhs.abs() <= FEAS_TOL,
            };
            if !ok {
                return LpSolution::infeasible(n, m);
            }
        }
        let s = if mx > 0.0 { 1.0 / mx } else { 1.0 };
        let b = r.rhs * s;
        let (lo, hi) = match r.sense {
            RowSense::Le => (f64::NEG_INFINITY, b),
            RowSense::Ge => (b, f64::INFINITY),
            RowSense::Eq => (b, b),
        };
        cons.push(Cons {
            coefs: r.coefs.iter().map(|&(j, a)| (j, a * s)).collect(),
            lo,
            hi,
            scale: s,
        });
    }

    let mut st = State {
        n,
        cost: &cost,
        basis: (0..n).collect(),
        side: vec![Side::Lower; n],
        artificial: vec![false; n],
        pos: (0..cons.len()).map(|k| (k < n).then_some(k)).collect(),
        binv: (0..n)
            .map(|i| {
                let mut col = vec![0.0; n];
                col[i] = 1.0;
                col
            })
            .collect(),
        cons,
    };
    for j in 0..n {
        let (lo, hi) = (sys.lo[j], sys.hi[j]);
        let (side, art) = if cost[j] > 0.0 {
            (Side::Lower, !lo.is_finite())
        } else if cost[j] < 0.0 {
            (Side::Upper, !hi.is_finite())
        } else if lo.is_finite() {
            (Side::Lower, false)
        } else if hi.is_finite() {
            (Side::Upper, false)
        } else {
            (Side::Lower, true)
        };
        st.side[j] = side;
        st.artificial[j] = art;
    }

    let mut iterations = 0usize;
    let mut degenerate = 0usize;
    let mut since_refactor = 0usize;
    loop {
        if iterations >= opts.max_iterations {
            return finish(sys, &st, LpStatus::IterationLimit, iterations);
        }
        if since_refactor >= REFACTOR_EVERY {
            if !st.refactor() {
                log::warn!("basis became singular after {iterations} iterations");
                return finish(sys, &st, LpStatus::IterationLimit, iterations);
            }
            since_refactor = 0;
        }
        let x = st.primal();
        let bland = degenerate >= DEGENERATE_SWITCH;

        // pricing: most violated non-basic constraint
        let mut enter: Option<(usize, f64, f64)> = None; // (cons, s, violation)
        for (k, c) in st.cons.iter().enumerate() {
            if st.pos[k].is_some() {
                continue;
            }
            let act: f64 = c.coefs.iter().map(|&(j, a)| a * x[j]).sum();
            let (s, v) = if act < c.lo - FEAS_TOL * (1.0 + c.lo.abs()) {
                (1.0, c.lo - act)
            } else if act > c.hi + FEAS_TOL * (1.0 + c.hi.abs()) {
                (-1.0, act - c.hi)
            } else {
                continue;
            };
            let better = match enter {
                None => true,
                Some((_, _, best)) => !bland && v > best,
            };
            if better {
                enter = Some((k, s, v));
            }
            if bland {
                break;
            }
        }
        // infeasible artificial bounds are real infeasibility only when they
        // are not artificial; an artificial row never enters from outside
        let Some((q, s, _)) = enter else {
            let y = st.dual();
            let unbounded = (0..n).any(|i| st.artificial[i] && y[i].abs() > DUAL_TOL);
            let status = if unbounded {
                LpStatus::Unbounded
            } else {
                LpStatus::Optimal
            };
            return finish(sys, &st, status, iterations);
        };

        let y = st.dual();
        let gq = st.cons[q].coefs.clone();
        let w: Vec<f64> = (0..n)
            .map(|i| gq.iter().map(|&(j, a)| st.binv[i][j] * a).sum())
            .collect();

        // ratio test on the multipliers of basic, non-equality constraints
        let mut best: Option<(usize, f64)> = None;
        let mut theta_min = f64::INFINITY;
        let mut cand: Vec<(usize, f64)> = Vec::new();
        let wmax = w.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for i in 0..n {
            let c = &st.cons[st.basis[i]];
            if c.lo == c.hi && !st.artificial[i] {
                continue;
            }
            let sw = s * w[i];
            if sw.abs() <= PIVOT_TOL.max(REL_PIVOT_TOL * wmax) {
                continue;
            }
            let ratio = match st.side[i] {
                Side::Lower if sw > 0.0 => y[i].max(0.0) / sw,
                Side::Upper if sw < 0.0 => y[i].min(0.0) / sw,
                _ => continue,
            };
            cand.push((i, ratio));
            theta_min = theta_min.min(ratio);
        }
        for &(i, ratio) in &cand {
            if ratio <= theta_min + 1e-12 * (1.0 + theta_min) {
                let pick = match best {
                    None => true,
                    Some((b, _)) => {
                        if bland {
                            st.basis[i] < st.basis[b]
                        } else {
                            w[i].abs() > w[b].abs()
                        }
                    }
                };
                if pick {
                    best = Some((i, ratio));
                }
            }
        }
        let Some((p, theta)) = best else {
            return finish(sys, &st, LpStatus::Infeasible, iterations);
        };
        if theta <= 1e-12 {
            degenerate += 1;
        } else {
            degenerate = 0;
        }

        // basis change: row p is replaced by constraint q
        let wp = w[p];
        let d = st.binv[p].clone();
        for (i, col) in st.binv.iter_mut().enumerate() {
            let f = if i == p { (wp - 1.0) / wp } else { w[i] / wp };
            if f != 0.0 {
                for (cj, dj) in col.iter_mut().zip(&d) {
                    *cj -= f * dj;
                }
            }
        }
        let leaving = st.basis[p];
        st.pos[leaving] = None;
        st.pos[q] = Some(p);
        st.basis[p] = q;
        st.side[p] = if s > 0.0 { Side::Lower } else { Side::Upper };
        st.artificial[p] = false;
        iterations += 1;
        since_refactor += 1;
    }
}

fn finish(sys: &LinearSystem, st: &State, status: LpStatus, iterations: usize) -> LpSolution {
    let n = st.n;
    let m = sys.n_rows();
    let x = st.primal();
    let y = st.dual();
    let mut duals = vec![0.0; m];
    let mut reduced = vec![0.0; n];
    let mut dual_obj = sys.obj_constant;
    for i in 0..n {
        let k = st.basis[i];
        dual_obj += y[i] * st.rhs(i);
        if k < n {
            reduced[k] = y[i];
        } else {
            duals[k - n] = y[i] * st.cons[k].scale;
        }
    }
    let objective = match status {
        LpStatus::Infeasible => f64::INFINITY,
        LpStatus::Unbounded => f64::NEG_INFINITY,
        _ => sys.objective_value(&x),
    };
    LpSolution {
        status,
        objective,
        dual_bound: dual_obj,
        x,
        duals,
        reduced_costs: reduced,
        iterations,
    }
}
