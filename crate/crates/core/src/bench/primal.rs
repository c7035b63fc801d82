use crate::expr::{Model, ObjSense};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Scaled violation accepted as feasible.
pub const FEAS_TOL: f64 = 1e-9;
const RESTARTS: usize = 50;
const MIN_STEP: f64 = 1e-9;

/// Local search for a feasible point with a good objective.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalPoint {
    pub x: Vec<f64>,
    /// Objective in the model's sense.
    pub value: f64,
}

fn better(sense: ObjSense, a: f64, b: f64) -> bool {
    match sense {
        ObjSense::Min => a < b,
        ObjSense::Max => a > b,
    }
}

/// Coordinate descent from a feasible `x`: each coordinate is moved by
/// `±step` (clipped to its bounds) while that improves the objective and
/// keeps every constraint satisfied. When no single coordinate helps, the
/// diagonal moves `±step e_i ± step e_j` are tried, which lets the search
/// slide along a tilted active constraint; the step halves when nothing
/// helps.
fn descend(m: &Model, sense: ObjSense, mut x: Vec<f64>, mut fx: f64) -> (Vec<f64>, f64) {
    let width: Vec<f64> = m.vars.iter().map(|v| (v.hi - v.lo).min(1e3)).collect();
    let n = x.len();
    let mut scale = 0.25;
    // returns the improved point, if any
    let try_move =
        |x: &[f64], fx: f64, moves: &[(usize, f64)], scale: f64| -> Option<(Vec<f64>, f64)> {
            let mut y = x.to_vec();
            for &(i, dir) in moves {
                y[i] = (x[i] + dir * scale * width[i]).clamp(m.vars[i].lo, m.vars[i].hi);
            }
            if y == x {
                return None;
            }
            let fy = m.objective_value(&y);
            (fy.is_finite() && better(sense, fy, fx) && m.is_feasible(&y, FEAS_TOL))
                .then_some((y, fy))
        };
    while scale > MIN_STEP {
        let mut moved = false;
        for i in 0..n {
            for dir in [1.0, -1.0] {
                if let Some((y, fy)) = try_move(&x, fx, &[(i, dir)], scale) {
                    (x, fx, moved) = (y, fy, true);
                    break;
                }
            }
        }
        if !moved {
            'pairs: for i in 0..n {
                for j in i + 1..n {
                    for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                        if let Some((y, fy)) = try_move(&x, fx, &[(i, a), (j, b)], scale) {
                            (x, fx, moved) = (y, fy, true);
                            break 'pairs;
                        }
                    }
                }
            }
        }
        if !moved {
            scale *= 0.5;
        }
    }
    (x, fx)
}

/// Best feasible point found by coordinate descent from `start` and from
/// [`RESTARTS`] random perturbations of the incumbent. Returns `None` when
/// no feasible point is found.
pub fn local_search(m: &Model, start: &[f64], seed: u64) -> Option<PrimalPoint> {
    let sense = m.objective.as_ref().map_or(ObjSense::Min, |o| o.sense);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let clip = |x: &mut Vec<f64>| {
        for (xi, v) in x.iter_mut().zip(&m.vars) {
            *xi = xi.clamp(v.lo, v.hi);
        }
    };
    let mut x0 = start.to_vec();
    clip(&mut x0);
    if m.is_feasible(&x0, FEAS_TOL) {
        let f = m.objective_value(&x0);
        best = Some(descend(m, sense, x0, f));
    }
    for k in 0..RESTARTS {
        // perturbations shrink with the restart index
        let radius = 0.5 / (1.0 + k as f64);
        let base = best.as_ref().map_or(start.to_vec(), |b| b.0.clone());
        let mut x: Vec<f64> = base
            .iter()
            .zip(&m.vars)
            .map(|(&xi, v)| {
                let w = (v.hi - v.lo).min(1e3);
                xi + radius * w * (2.0 * rng.gen::<f64>() - 1.0)
            })
            .collect();
        clip(&mut x);
        if !m.is_feasible(&x, FEAS_TOL) {
            continue;
        }
        let f = m.objective_value(&x);
        let (y, fy) = descend(m, sense, x, f);
        if best.as_ref().is_none_or(|b| better(sense, fy, b.1)) {
            best = Some((y, fy));
        }
    }
    best.map(|(x, value)| PrimalPoint { x, value })
}

/// Objective value of the best feasible point found from `start`, in the
/// model's sense; `+inf` (minimization) or `-inf` (maximization) if none.
pub fn primal_bound(m: &Model, start: &[f64]) -> f64 {
    match local_search(m, start, 0) {
        Some(p) => p.value,
        None => match m.objective.as_ref().map(|o| o.sense) {
            Some(ObjSense::Max) => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        },
    }
}

/// `count` feasible points from a random walk started at the feasible
/// point `start`. Proposals along random directions are accepted when
/// feasible; the step length adapts to the acceptance rate. May return
/// fewer points if the walk stalls.
pub fn feasible_samples(m: &Model, start: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(
        m.is_feasible(start, FEAS_TOL),
        "random walk needs a feasible start"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width: Vec<f64> = m.vars.iter().map(|v| (v.hi - v.lo).min(1e3)).collect();
    let mut x = start.to_vec();
    let mut step = 0.1;
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count && tries < 1000 * count {
        tries += 1;
        let y: Vec<f64> = x
            .iter()
            .zip(&width)
            .zip(&m.vars)
            .map(|((&xi, &w), v)| {
                (xi + step * w * (2.0 * rng.gen::<f64>() - 1.0)).clamp(v.lo, v.hi)
            })
            .collect();
        if m.is_feasible(&y, FEAS_TOL) {
            x = y;
            out.push(x.clone());
            step = (step * 1.5).min(0.5);
        } else {
            step = (step * 0.8).max(1e-9);
        }
    }
    out
}
