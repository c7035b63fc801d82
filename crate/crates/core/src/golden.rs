//! Reference values with known closed forms, checked by `voxrelax verify`.
//!
//! Every check recomputes its value through the library and compares it
//! with a constant in [`GoldenValues`]. Perturbing a constant must make the
//! matching check fail.

use crate::envelopes::{pentagon_envelope, CutSide, Pentagon, PiecewiseLinear, UnivariateKind};
use crate::expr::load_model;
use crate::geometry::{build_corner_chain, limiting_matrix, quickhull_points, AxisBox, AxisRegion};
use crate::interval::{evaluate_ranges, propagate_constraints, BoundStore, Interval};
use crate::relax::{lift_corners, Factor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldenCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Expected values.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenValues {
    /// Absorption probabilities from `(2, 1)` in the six-box staircase.
    pub chain_weights: Vec<([f64; 2], f64)>,
    /// `(2, 1)` and `2·1`, recovered as expectations.
    pub chain_mean: [f64; 3],
    /// Tight pentagon-composite, box-composite and true value of `x1²x2²`
    /// at `(1.5, 1.5)`.
    pub r_pentagon: f64,
    pub r_box: f64,
    pub r_true: f64,
    /// Limit of ever finer piecewise estimators at the same point.
    pub r_limit: f64,
    /// Range of `x1² exp(x1) x2 - x2² x3³ x1³` on the unit cube.
    pub range: [f64; 2],
}

impl Default for GoldenValues {
    fn default() -> Self {
        GoldenValues {
            chain_weights: vec![
                ([0.0, 0.0], 24.0 / 95.0),
                ([0.0, 2.0], 24.0 / 95.0),
                ([5.0, 4.0], 8.0 / 95.0),
                ([2.0, 5.0], 3.0 / 95.0),
                ([4.0, 0.0], 36.0 / 95.0),
            ],
            chain_mean: [2.0, 1.0, 2.0],
            r_pentagon: 3.0,
            r_box: 4.0,
            r_true: 81.0 / 16.0,
            r_limit: 3.274653,
            range: [-1.0, std::f64::consts::E],
        }
    }
}

impl GoldenValues {
    /// Names accepted by [`GoldenValues::perturb`].
    pub const FIELDS: [&'static str; 7] = [
        "chain-weight",
        "chain-mean",
        "r-pentagon",
        "r-box",
        "r-true",
        "r-limit",
        "range",
    ];

    /// Adds `delta` to one constant.
    pub fn perturb(&mut self, field: &str, delta: f64) -> bool {
        match field {
            "chain-weight" => self.chain_weights[0].1 += delta,
            "chain-mean" => self.chain_mean[2] += delta,
            "r-pentagon" => self.r_pentagon += delta,
            "r-box" => self.r_box += delta,
            "r-true" => self.r_true += delta,
            "r-limit" => self.r_limit += delta,
            "range" => self.range[0] += delta,
            _ => return false,
        }
        true
    }
}

/// The six-box staircase region.
pub fn staircase_region() -> AxisRegion {
    let boxes = vec![
        AxisBox::rect(0.0, 1.0, 0.0, 2.0),
        AxisBox::rect(0.0, 2.0, 1.0, 2.0),
        AxisBox::rect(2.0, 4.0, 1.0, 4.0),
        AxisBox::rect(2.0, 3.0, 4.0, 5.0),
        AxisBox::rect(4.0, 5.0, 3.0, 4.0),
        AxisBox::rect(3.0, 4.0, 0.0, 1.0),
    ];
    AxisRegion::new(2, boxes).expect("valid boxes")
}

/// Absorption distribution of `start` in the corner chain of `h`.
pub fn absorption_row(h: &AxisRegion, start: &[f64]) -> Result<Vec<(Vec<f64>, f64)>, String> {
    let chain = build_corner_chain(h);
    let t = limiting_matrix(&chain).map_err(|e| e.to_string())?;
    let i = chain.index_of(start).ok_or("start point is not a state")?;
    Ok(chain
        .absorbing
        .iter()
        .map(|&j| (chain.states.points[j].clone(), t[(i, j)]))
        .filter(|(_, w)| *w > 0.0)
        .collect())
}

fn check(name: &'static str, passed: bool, detail: String) -> GoldenCheck {
    GoldenCheck {
        name,
        passed,
        detail,
    }
}

fn chain_checks(g: &GoldenValues) -> Vec<GoldenCheck> {
    let row = match absorption_row(&staircase_region(), &[2.0, 1.0]) {
        Ok(r) => r,
        Err(e) => {
            return vec![
                check("chain-weights", false, e),
                check("chain-mean", false, "no chain".into()),
            ];
        }
    };
    let mut worst: f64 = 0.0;
    let mut missing = Vec::new();
    for (v, w) in &g.chain_weights {
        match row.iter().find(|(p, _)| p[0] == v[0] && p[1] == v[1]) {
            Some((_, got)) => worst = worst.max((got - w).abs()),
            None => missing.push(*v),
        }
    }
    let extra = row.len() != g.chain_weights.len();
    let weights = check(
        "chain-weights",
        missing.is_empty() && !extra && worst <= 1e-10,
        format!(
            "{} absorbing corners, max weight error {worst:.3e}, missing {missing:?}",
            row.len()
        ),
    );
    let mut m = [0.0; 3];
    for (p, w) in &row {
        m[0] += w * p[0];
        m[1] += w * p[1];
        m[2] += w * p[0] * p[1];
    }
    let err = (0..3)
        .map(|k| (m[k] - g.chain_mean[k]).abs())
        .fold(0.0, f64::max);
    let mean = check(
        "chain-mean",
        err <= 1e-9,
        format!("E[(v1, v2, v1 v2)] = {m:?}, error {err:.3e}"),
    );
    vec![weights, mean]
}

/// `max{0, 2x - 1, 4x - 4}` and the constant 4, the estimators of `x²` on
/// `[0, 2]` with breakpoints `0, 1/2, 3/2, 2`.
pub fn square_estimators() -> (PiecewiseLinear, PiecewiseLinear) {
    let bp = vec![0.0, 0.5, 1.5, 2.0];
    (
        PiecewiseLinear {
            breakpoints: bp.clone(),
            pieces: vec![(0.0, 0.0), (2.0, -1.0), (4.0, -4.0)],
            side: CutSide::Under,
        },
        PiecewiseLinear {
            breakpoints: bp,
            pieces: vec![(0.0, 4.0); 3],
            side: CutSide::Over,
        },
    )
}

/// Lower envelope at `(x1, x2)` of the hull of lifted corner products of
/// the two estimators of `x1²` and `x2²` over `[0, 2]²`.
pub fn projected_square_underestimator(x1: f64, x2: f64) -> Result<f64, String> {
    let (under, over) = square_estimators();
    let f = |n| Factor::Function {
        node: n,
        input: n,
        kind: UnivariateKind::Pow(2.0),
        under: under.clone(),
        over: over.clone(),
    };
    let region = AxisRegion::from_box(AxisBox::rect(0.0, 2.0, 0.0, 2.0));
    let pts = lift_corners(&[f(0), f(1)], &region);
    let hull = quickhull_points(3, &pts).map_err(|e| e.to_string())?;
    Ok(hull
        .inequalities
        .iter()
        .filter(|h| h.normal[2] < -1e-9)
        .map(|h| (h.offset - h.normal[0] * x1 - h.normal[1] * x2) / h.normal[2])
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Composite under-estimator built from the pentagon envelope pieces.
pub fn r_pentagon(x1: f64, x2: f64) -> f64 {
    [
        0.0,
        4.0 * x1 * x1 + 4.0 * x2 * x2 - 16.0,
        8.0 * x1 + 3.0 * x2 * x2 - 16.0,
        3.0 * x1 * x1 + 8.0 * x2 - 16.0,
        6.0 * x1 + 6.0 * x2 - 15.0,
        2.0 * x1 + 2.0 * x2 + 3.0 * x1 * x1 + 3.0 * x2 * x2 - 17.0,
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max)
}

/// Composite under-estimator over the box only.
pub fn r_box(x1: f64, x2: f64) -> f64 {
    [
        0.0,
        4.0 * x1 * x1 + 4.0 * x2 * x2 - 16.0,
        8.0 * x1 + 8.0 * x2 - 20.0,
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max)
}

/// Limit of the piecewise composite as the breakpoints become dense, by
/// composite Simpson quadrature.
pub fn r_limit(x1: f64, x2: f64) -> f64 {
    let f = |l: f64| {
        ((4.0 * l * l - 4.0 + 4.0 * x1 - x1 * x1) / (l * l))
            * ((4.0 * l * l - 8.0 * l + 4.0 * x2 - x2 * x2) / ((1.0 - l) * (1.0 - l)))
    };
    let (a, b) = (1.0 - x1 / 2.0, x2 / 2.0);
    if b <= a {
        return 0.0;
    }
    let n = 20_000;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    (s * h / 3.0).max(0.0)
}

fn square_checks(g: &GoldenValues) -> Vec<GoldenCheck> {
    let (x1, x2) = (1.5, 1.5);
    let mut out = vec![
        check(
            "r-pentagon",
            (r_pentagon(x1, x2) - g.r_pentagon).abs() <= 1e-12,
            format!("{}", r_pentagon(x1, x2)),
        ),
        check(
            "r-box",
            (r_box(x1, x2) - g.r_box).abs() <= 1e-12,
            format!("{}", r_box(x1, x2)),
        ),
        check(
            "r-true",
            (x1 * x1 * x2 * x2 - g.r_true).abs() <= 1e-12,
            format!("{}", x1 * x1 * x2 * x2),
        ),
    ];
    let lim = r_limit(x1, x2);
    out.push(check(
        "r-limit",
        (lim - g.r_limit).abs() <= 1e-6,
        format!("{lim:.9}"),
    ));
    match projected_square_underestimator(x1, x2) {
        Ok(v) => out.push(check(
            "r-engine",
            (v - g.r_box).abs() <= 1e-9 && v > g.r_limit,
            format!("{v} (expected {} > {})", g.r_box, g.r_limit),
        )),
        Err(e) => out.push(check("r-engine", false, e)),
    }
    out
}

/// Random pentagon with strictly valid parameters.
pub fn random_pentagon(rng: &mut ChaCha8Rng) -> Pentagon {
    loop {
        let lo = rng.gen_range(-3.0..3.0);
        let f_lo = rng.gen_range(-3.0..3.0);
        let f_hi = f_lo + rng.gen_range(0.2..5.0);
        let p1 = rng.gen_range(0.0..0.6);
        let p = Pentagon {
            x: Interval::new(lo, lo + rng.gen_range(0.2..3.0)),
            f_lo,
            f_hi,
            b: rng.gen_range(f_lo + 0.05 * (f_hi - f_lo)..f_hi - 0.05 * (f_hi - f_lo)),
            p1,
            p2: rng.gen_range(p1 + 0.05..1.0),
        };
        if p.validate().is_ok() {
            return p;
        }
    }
}

fn simplex_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Largest mutual-membership violation between the twelve-piece envelope
/// and the quickhull of the 25 lifted vertex products, over `pairs` random
/// pentagon pairs with `samples` points drawn from each description.
pub fn pentagon_hull_agreement(pairs: usize, samples: usize, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let (p, q) = (random_pentagon(&mut rng), random_pentagon(&mut rng));
        let env = pentagon_envelope(&p, &q).map_err(|e| e.to_string())?;
        let fs = env.facets();
        let (pv, qv) = (p.vertices(), q.vertices());
        let mut pts = Vec::with_capacity(25);
        for a in pv {
            for b in qv {
                pts.push(vec![a.0, b.0, a.1, b.1, a.1 * b.1]);
            }
        }
        let hull = quickhull_points(5, &pts).map_err(|e| e.to_string())?;
        for _ in 0..samples {
            // hull point checked against the envelope
            let w = simplex_weights(&mut rng, pts.len());
            let z: Vec<f64> = (0..5)
                .map(|k| pts.iter().zip(&w).map(|(p, w)| w * p[k]).sum())
                .collect();
            worst = worst.max(fs.max_violation(&z));
            // envelope point checked against the hull
            let (u, v) = (simplex_weights(&mut rng, 5), simplex_weights(&mut rng, 5));
            let x1: f64 = (0..5).map(|i| u[i] * pv[i].0).sum();
            let t1: f64 = (0..5).map(|i| u[i] * pv[i].1).sum();
            let x2: f64 = (0..5).map(|i| v[i] * qv[i].0).sum();
            let t2: f64 = (0..5).map(|i| v[i] * qv[i].1).sum();
            let zz = [x1, x2, t1, t2];
            let (lo, hi) = (env.convex_value(&zz), env.concave_value(&zz));
            let mu = lo + rng.gen::<f64>() * (hi - lo);
            for m in [lo, hi, mu] {
                worst = worst.max(hull.max_violation(&[x1, x2, t1, t2, m]));
            }
        }
    }
    Ok(worst)
}

fn pentagon_check() -> GoldenCheck {
    match pentagon_hull_agreement(10, 200, 7) {
        Ok(v) => check(
            "pentagon-hull",
            v <= 1e-6,
            format!("max violation {v:.3e} over 10 pairs"),
        ),
        Err(e) => check("pentagon-hull", false, e),
    }
}

fn interval_checks(g: &GoldenValues) -> Vec<GoldenCheck> {
    let src = "var x1, x2, x3 in [0,1]; min x1^2*exp(x1)*x2 - x2^2*x3^3*x1^3;";
    let range = load_model(src)
        .map_err(|e| e.to_string())
        .and_then(|(_, d)| {
            let s = evaluate_ranges(&d).map_err(|e| e.to_string())?;
            let root = d.objective.as_ref().ok_or("no objective")?.root;
            Ok(s.get(root))
        });
    let mut out = vec![match range {
        Ok(r) => check(
            "interval-range",
            r.lo == g.range[0]
                && r.hi >= g.range[1]
                && r.hi - g.range[1] <= 4.0 * f64::EPSILON * g.range[1],
            format!("{r}"),
        ),
        Err(e) => check("interval-range", false, e),
    }];
    let cases = [
        (
            "var x in [-5,5]; min 0; s.t. x^2 <= 1;",
            vec![Interval::new(-1.0, 1.0)],
        ),
        (
            "var x, y in [0,2]; min 0; s.t. x + y <= 1;",
            vec![Interval::new(0.0, 1.0), Interval::new(0.0, 1.0)],
        ),
    ];
    for (i, (src, want)) in cases.iter().enumerate() {
        let got = load_model(src)
            .map_err(|e| e.to_string())
            .and_then(|(_, d)| {
                let s = propagate_constraints(&d, &BoundStore::from_dag(&d))
                    .map_err(|e| e.to_string())?;
                Ok((0..d.n_vars())
                    .map(|k| s.get(d.var_node(k)))
                    .collect::<Vec<_>>())
            });
        let name = if i == 0 {
            "inverse-square"
        } else {
            "inverse-sum"
        };
        out.push(match got {
            Ok(b) => check(name, b == *want, format!("{b:?}")),
            Err(e) => check(name, false, e),
        });
    }
    out
}

/// Runs every check against `g`.
pub fn run_golden(g: &GoldenValues) -> Vec<GoldenCheck> {
    let mut out = chain_checks(g);
    out.extend(square_checks(g));
    out.push(pentagon_check());
    out.extend(interval_checks(g));
    out
}
