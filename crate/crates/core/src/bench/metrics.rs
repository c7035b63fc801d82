use serde::Serialize;

/// Relative remaining gap `(u - v) / (u - v_min)` of a lower bound `v`
/// against the primal value `u` and the weakest bound `v_min`. When
/// `u == v_min` the gap is 0 for bounds attaining `u` and 1 otherwise.
pub fn relative_remaining_gap(u: f64, v: f64, v_min: f64) -> f64 {
    let den = u - v_min;
    if den == 0.0 || !den.is_finite() {
        log::debug!("degenerate gap: u = {u}, min bound = {v_min}");
        return if v == u { 0.0 } else { 1.0 };
    }
    (u - v) / den
}

/// Remaining gaps of all methods on one instance (bounds in minimization
/// form).
pub fn instance_gaps(u: f64, bounds: &[f64]) -> Vec<f64> {
    let v_min = bounds.iter().cloned().fold(f64::INFINITY, f64::min);
    bounds
        .iter()
        .map(|&v| relative_remaining_gap(u, v, v_min))
        .collect()
}

/// Uniform grid `0, 1/steps, ..., 1`.
pub fn alpha_grid(steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| k as f64 / steps as f64).collect()
}

/// Fraction of `gaps` that are `<= alpha`, for each alpha of the grid.
pub fn mu_curve(gaps: &[f64], alphas: &[f64]) -> Vec<f64> {
    if gaps.is_empty() {
        return vec![0.0; alphas.len()];
    }
    alphas
        .iter()
        .map(|&a| gaps.iter().filter(|&&r| r <= a + 1e-12).count() as f64 / gaps.len() as f64)
        .collect()
}

/// Relative gap closed by bound `p1` over bound `p2` given the primal
/// value; `None` when `p1 < p2`.
pub fn rcg(p1: f64, p2: f64, primal: f64) -> Option<f64> {
    if p1 < p2 {
        return None;
    }
    let den = primal - p2;
    if p1 == p2 || den == 0.0 {
        return Some(0.0);
    }
    Some((p1 - p2) / den)
}

/// RCG of one ordered pair of methods on one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RcgPair {
    pub instance_id: String,
    pub better: String,
    pub worse: String,
    pub rcg: f64,
}
