use super::base::Relaxation;
use crate::interval::Interval;
use crate::lp::{solve, with_objective, LinearSystem, LpSolution, LpStatus, RowSense, Tag};

/// Reduced costs smaller than this are treated as zero.
const MIN_MULTIPLIER: f64 = 1e-9;

/// Relative slack applied to LP-derived bounds.
const BOUND_SLACK: f64 = 1e-9;

/// Adds `objective <= primal` (with a small relative slack).
pub fn add_objective_cut(sys: &mut LinearSystem, primal: f64) {
    if !primal.is_finite() || sys.objective.is_empty() {
        return;
    }
    let rhs = primal - sys.obj_constant + BOUND_SLACK * (1.0 + primal.abs());
    let coefs = sys.objective.clone();
    sys.add_row("objective_cut", coefs, RowSense::Le, rhs, Tag::ObjectiveCut);
}

/// Per-column bounds implied by reduced costs at an optimal LP solution
/// and an upper bound `primal` on the minimization objective. A column at
/// its lower bound with reduced cost `λ > 0` gets `x <= lo + gap/λ`; one at
/// its upper bound gets `x >= hi - gap/|λ|`. Returns the current bounds
/// unchanged if the solution is not optimal or the gap is not finite.
pub fn duality_range_reduction(sys: &LinearSystem, sol: &LpSolution, primal: f64) -> Vec<Interval> {
    let mut out: Vec<Interval> = (0..sys.n_vars())
        .map(|j| Interval::new(sys.lo[j], sys.hi[j]))
        .collect();
    if sol.status != LpStatus::Optimal || !primal.is_finite() {
        return out;
    }
    let gap = primal - sol.objective;
    if gap < -BOUND_SLACK * (1.0 + primal.abs()) {
        log::warn!(
            "primal bound {primal} is below the relaxation bound {}",
            sol.objective
        );
        return out;
    }
    let gap = gap.max(0.0);
    for (j, b) in out.iter_mut().enumerate() {
        let lam = sol.reduced_costs[j];
        if lam > MIN_MULTIPLIER && b.lo.is_finite() {
            b.hi = b.hi.min(b.lo + gap / lam).max(b.lo);
        } else if lam < -MIN_MULTIPLIER && b.hi.is_finite() {
            b.lo = b.lo.max(b.hi - gap / -lam).min(b.hi);
        }
    }
    out
}

/// Minimizes and maximizes each column in `cols` over `sys`, optionally
/// with the cut `objective <= primal`, and intersects with the current
/// bounds. Columns whose LPs do not solve keep their bounds.
pub fn obbt(sys: &LinearSystem, cols: &[usize], primal: Option<f64>) -> Vec<Interval> {
    let mut base = sys.clone();
    if let Some(p) = primal {
        add_objective_cut(&mut base, p);
    }
    let mut out: Vec<Interval> = (0..sys.n_vars())
        .map(|j| Interval::new(sys.lo[j], sys.hi[j]))
        .collect();
    for &j in cols {
        let lo = column_bound(&base, j, 1.0);
        let hi = column_bound(&base, j, -1.0).map(|v| -v);
        let b = &mut out[j];
        if let Some(l) = lo {
            b.lo = b.lo.max(l);
        }
        if let Some(h) = hi {
            b.hi = b.hi.min(h);
        }
        if b.lo > b.hi {
            // only rounding can cross the bounds here
            let m = 0.5 * (b.lo + b.hi);
            *b = Interval::point(m);
        }
    }
    out
}

fn column_bound(sys: &LinearSystem, j: usize, dir: f64) -> Option<f64> {
    let s = solve(&with_objective(sys, vec![(j, dir)]));
    if s.status != LpStatus::Optimal {
        return None;
    }
    let v = s.objective.min(s.dual_bound);
    Some(v - BOUND_SLACK * (1.0 + v.abs()))
}

impl Relaxation {
    /// Columns of the model variables.
    pub fn variable_columns(&self, n_vars: usize) -> Vec<usize> {
        (0..n_vars).filter_map(|i| self.columns[i]).collect()
    }
}
