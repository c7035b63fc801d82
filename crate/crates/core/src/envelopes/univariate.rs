//! Univariate functions: hull cuts over an interval and piecewise-linear
//! estimators on a uniform breakpoint grid.

use super::EnvelopeError;
use crate::expr::pow_value;
use crate::geometry::{FacetSystem, Halfspace};
use crate::interval::{as_integer, Interval};
use serde::{Deserialize, Serialize};

/// Tangent cuts placed on the convex side of a hull when not configured.
pub const DEFAULT_TANGENTS: usize = 3;

const BISECT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UnivariateKind {
    Pow(f64),
    Exp,
    Log,
}

/// Curvature of a function over an interval. `ConcaveConvex` is an odd power
/// over an interval containing zero in its interior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Linear,
    Convex,
    Concave,
    ConcaveConvex,
}

impl UnivariateKind {
    pub fn name(&self) -> String {
        match self {
            UnivariateKind::Pow(p) => format!("x^{p}"),
            UnivariateKind::Exp => "exp".into(),
            UnivariateKind::Log => "log".into(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            UnivariateKind::Pow(p) => pow_value(x, p),
            UnivariateKind::Exp => x.exp(),
            UnivariateKind::Log => x.ln(),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match *self {
            UnivariateKind::Pow(p) if p == 0.0 => 0.0,
            UnivariateKind::Pow(p) => p * pow_value(x, p - 1.0),
            UnivariateKind::Exp => x.exp(),
            UnivariateKind::Log => 1.0 / x,
        }
    }

    pub fn check_domain(&self, dom: Interval) -> Result<(), EnvelopeError> {
        if !dom.is_finite() {
            return Err(EnvelopeError::Unbounded {
                lo: dom.lo,
                hi: dom.hi,
            });
        }
        let bad = match *self {
            UnivariateKind::Exp => false,
            UnivariateKind::Log => dom.lo <= 0.0,
            UnivariateKind::Pow(p) => match as_integer(p) {
                Some(k) => k < 0 && dom.contains_zero(),
                None => dom.lo < 0.0 || (p < 0.0 && dom.lo <= 0.0),
            },
        };
        if bad {
            return Err(EnvelopeError::Domain {
                kind: self.name(),
                lo: dom.lo,
                hi: dom.hi,
            });
        }
        Ok(())
    }

    /// Curvature over `dom`; assumes [`check_domain`](Self::check_domain) passed.
    pub fn shape(&self, dom: Interval) -> Shape {
        match *self {
            UnivariateKind::Exp => Shape::Convex,
            UnivariateKind::Log => Shape::Concave,
            UnivariateKind::Pow(p) if p == 0.0 || p == 1.0 => Shape::Linear,
            UnivariateKind::Pow(p) => {
                if dom.lo >= 0.0 {
                    if !(0.0..=1.0).contains(&p) {
                        Shape::Convex
                    } else {
                        Shape::Concave
                    }
                } else {
                    let even = as_integer(p).is_some_and(|k| k % 2 == 0);
                    if even {
                        Shape::Convex
                    } else if dom.hi <= 0.0 {
                        Shape::Concave
                    } else {
                        Shape::ConcaveConvex
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutSide {
    Under,
    Over,
}

/// `t >= slope*x + intercept` (under) or `t <= slope*x + intercept` (over).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineCut {
    pub slope: f64,
    pub intercept: f64,
    pub side: CutSide,
}

impl AffineCut {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    fn through(f: UnivariateKind, a: f64, b: f64, side: CutSide) -> AffineCut {
        let (fa, fb) = (f.eval(a), f.eval(b));
        let slope = if b > a { (fb - fa) / (b - a) } else { 0.0 };
        AffineCut {
            slope,
            intercept: fa - slope * a,
            side,
        }
    }

    fn tangent(f: UnivariateKind, x: f64, side: CutSide) -> Option<AffineCut> {
        let (v, d) = (f.eval(x), f.deriv(x));
        (v.is_finite() && d.is_finite()).then_some(AffineCut {
            slope: d,
            intercept: v - d * x,
            side,
        })
    }

    /// Halfspace over `(x, t)`.
    pub fn halfspace(&self) -> Halfspace {
        match self.side {
            CutSide::Under => Halfspace {
                normal: vec![self.slope, -1.0],
                offset: -self.intercept,
            },
            CutSide::Over => Halfspace {
                normal: vec![-self.slope, 1.0],
                offset: self.intercept,
            },
        }
    }
}

/// Point where the line from the far end of `[a, b]` touches `f` on the
/// convex part (`Under`) or the concave part (`Over`) of a concave-convex
/// function. `None` when the touching point lies outside `[a, b]`, in which
/// case the envelope on that side is the secant.
pub fn tangency_point(f: UnivariateKind, a: f64, b: f64, side: CutSide) -> Option<f64> {
    match side {
        CutSide::Under => {
            // phi(z) = f'(z)(z - a) - (f(z) - f(a)), increasing on [0, b]
            let fa = f.eval(a);
            let phi = |z: f64| f.deriv(z) * (z - a) - (f.eval(z) - fa);
            if phi(b) <= 0.0 {
                return None;
            }
            let (mut lo, mut hi) = (0.0f64.max(a), b);
            while hi - lo > BISECT_TOL {
                let m = 0.5 * (lo + hi);
                if phi(m) > 0.0 {
                    hi = m;
                } else {
                    lo = m;
                }
            }
            Some(0.5 * (lo + hi))
        }
        CutSide::Over => {
            // psi(z) = f'(z)(b - z) - (f(b) - f(z)), decreasing on [a, 0]
            let fb = f.eval(b);
            let psi = |z: f64| f.deriv(z) * (b - z) - (fb - f.eval(z));
            if psi(a) <= 0.0 {
                return None;
            }
            let (mut lo, mut hi) = (a, 0.0f64.min(b));
            while hi - lo > BISECT_TOL {
                let m = 0.5 * (lo + hi);
                if psi(m) > 0.0 {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            Some(0.5 * (lo + hi))
        }
    }
}

fn spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (a + b)],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn tangents(f: UnivariateKind, a: f64, b: f64, n: usize, side: CutSide) -> Vec<AffineCut> {
    spaced(a, b, n)
        .into_iter()
        .filter_map(|x| AffineCut::tangent(f, x, side))
        .collect()
}

/// Hull cuts of the graph of `f` over `dom`: tangents on the convex side
/// (`n_tangents` evenly spaced touch points including the ends), the secant
/// on the concave side, and the tangent-line split for odd powers across zero.
pub fn univariate_cuts(
    f: UnivariateKind,
    dom: Interval,
    n_tangents: usize,
) -> Result<Vec<AffineCut>, EnvelopeError> {
    f.check_domain(dom)?;
    let (l, u) = (dom.lo, dom.hi);
    if l == u {
        let v = f.eval(l);
        return Ok(vec![
            AffineCut {
                slope: 0.0,
                intercept: v,
                side: CutSide::Under,
            },
            AffineCut {
                slope: 0.0,
                intercept: v,
                side: CutSide::Over,
            },
        ]);
    }
    let mut cuts = Vec::new();
    match f.shape(dom) {
        Shape::Linear => {
            let c = AffineCut::through(f, l, u, CutSide::Under);
            cuts.push(c);
            cuts.push(AffineCut {
                side: CutSide::Over,
                ..c
            });
        }
        Shape::Convex => {
            cuts.extend(tangents(f, l, u, n_tangents, CutSide::Under));
            cuts.push(AffineCut::through(f, l, u, CutSide::Over));
        }
        Shape::Concave => {
            cuts.push(AffineCut::through(f, l, u, CutSide::Under));
            cuts.extend(tangents(f, l, u, n_tangents, CutSide::Over));
        }
        Shape::ConcaveConvex => {
            match tangency_point(f, l, u, CutSide::Under) {
                Some(z) => {
                    cuts.push(AffineCut::through(f, l, z, CutSide::Under));
                    cuts.extend(tangents(f, z, u, n_tangents, CutSide::Under));
                }
                None => cuts.push(AffineCut::through(f, l, u, CutSide::Under)),
            }
            match tangency_point(f, l, u, CutSide::Over) {
                Some(z) => {
                    cuts.push(AffineCut::through(f, z, u, CutSide::Over));
                    cuts.extend(tangents(f, l, z, n_tangents, CutSide::Over));
                }
                None => cuts.push(AffineCut::through(f, l, u, CutSide::Over)),
            }
        }
    }
    Ok(cuts)
}

/// [`univariate_cuts`] plus the domain bounds, as facets over `(x, t)`.
pub fn univariate_hull(
    f: UnivariateKind,
    dom: Interval,
    n_tangents: usize,
) -> Result<FacetSystem, EnvelopeError> {
    let mut inequalities: Vec<Halfspace> = univariate_cuts(f, dom, n_tangents)?
        .iter()
        .map(|c| c.halfspace().normalized())
        .collect();
    inequalities.push(Halfspace {
        normal: vec![1.0, 0.0],
        offset: dom.hi,
    });
    inequalities.push(Halfspace {
        normal: vec![-1.0, 0.0],
        offset: -dom.lo,
    });
    Ok(FacetSystem {
        dim: 2,
        inequalities,
        equalities: Vec::new(),
    })
}

/// Affine per segment, possibly discontinuous at breakpoints. At a shared
/// breakpoint an under-estimator takes the smaller and an over-estimator the
/// larger of the two adjacent pieces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLinear {
    pub breakpoints: Vec<f64>,
    /// `(slope, intercept)` per segment
    pub pieces: Vec<(f64, f64)>,
    pub side: CutSide,
}

impl PiecewiseLinear {
    pub fn segments(&self) -> usize {
        self.pieces.len()
    }

    /// Value of segment `k`'s affine piece at `x`.
    pub fn piece_value(&self, k: usize, x: f64) -> f64 {
        let (s, c) = self.pieces[k];
        s * x + c
    }

    /// Indices of the segments whose closed interval contains `x`. Points
    /// outside the range map to the nearest end segment.
    pub fn segments_at(&self, x: f64) -> Vec<usize> {
        let n = self.pieces.len();
        let bp = &self.breakpoints;
        if x <= bp[0] {
            return vec![0];
        }
        if x >= bp[n] {
            return vec![n - 1];
        }
        (0..n).filter(|&k| bp[k] <= x && x <= bp[k + 1]).collect()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let vals = self
            .segments_at(x)
            .into_iter()
            .map(|k| self.piece_value(k, x));
        match self.side {
            CutSide::Under => vals.fold(f64::INFINITY, f64::min),
            CutSide::Over => vals.fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

fn support(f: UnivariateKind, a: f64, b: f64, side: CutSide) -> AffineCut {
    let m = 0.5 * (a + b);
    let dom = Interval::new(a, b);
    let secant = || AffineCut::through(f, a, b, side);
    let tangent = || AffineCut::tangent(f, m, side).unwrap_or_else(secant);
    match (f.shape(dom), side) {
        (Shape::Linear, _) => secant(),
        (Shape::Convex, CutSide::Under) | (Shape::Concave, CutSide::Over) => tangent(),
        (Shape::Convex, CutSide::Over) | (Shape::Concave, CutSide::Under) => secant(),
        (Shape::ConcaveConvex, CutSide::Under) => match tangency_point(f, a, b, side) {
            Some(z) if m > z => tangent(),
            Some(z) => AffineCut::through(f, a, z, side),
            None => secant(),
        },
        (Shape::ConcaveConvex, CutSide::Over) => match tangency_point(f, a, b, side) {
            Some(z) if m < z => tangent(),
            Some(z) => AffineCut::through(f, z, b, side),
            None => secant(),
        },
    }
}

/// Under- and over-estimators of `f` on `n_b` uniformly spaced breakpoints.
/// Each segment carries the supporting line at its midpoint of the convex
/// (under) or concave (over) envelope of `f` on that segment.
pub fn pl_estimators(
    f: UnivariateKind,
    dom: Interval,
    n_b: usize,
) -> Result<(PiecewiseLinear, PiecewiseLinear), EnvelopeError> {
    if n_b < 2 {
        return Err(EnvelopeError::TooFewBreakpoints(n_b));
    }
    f.check_domain(dom)?;
    let breakpoints = if dom.lo == dom.hi {
        vec![dom.lo, dom.hi]
    } else {
        spaced(dom.lo, dom.hi, n_b)
    };
    for &x in &breakpoints {
        if !f.eval(x).is_finite() {
            return Err(EnvelopeError::NonFinite(x));
        }
    }
    let mut under = Vec::new();
    let mut over = Vec::new();
    for w in breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        for (side, out) in [(CutSide::Under, &mut under), (CutSide::Over, &mut over)] {
            let c = if a == b {
                AffineCut {
                    slope: 0.0,
                    intercept: f.eval(a),
                    side,
                }
            } else {
                support(f, a, b, side)
            };
            out.push((c.slope, c.intercept));
        }
    }
    Ok((
        PiecewiseLinear {
            breakpoints: breakpoints.clone(),
            pieces: under,
            side: CutSide::Under,
        },
        PiecewiseLinear {
            breakpoints,
            pieces: over,
            side: CutSide::Over,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b)
    }

    #[test]
    fn square_on_zero_two() {
        let cuts = univariate_cuts(UnivariateKind::Pow(2.0), iv(0.0, 2.0), 3).unwrap();
        let under: Vec<(f64, f64)> = cuts
            .iter()
            .filter(|c| c.side == CutSide::Under)
            .map(|c| (c.slope, c.intercept))
            .collect();
        assert_eq!(under, vec![(0.0, 0.0), (2.0, -1.0), (4.0, -4.0)]);
    }

    #[test]
    fn cube_tangency_point() {
        // tangent from (-1, -1) touches x^3 at z = 1/2
        let z = tangency_point(UnivariateKind::Pow(3.0), -1.0, 2.0, CutSide::Under).unwrap();
        assert!((z - 0.5).abs() < 1e-9);
        let z = tangency_point(UnivariateKind::Pow(3.0), -2.0, 1.0, CutSide::Over).unwrap();
        assert!((z + 0.5).abs() < 1e-9);
        assert!(tangency_point(UnivariateKind::Pow(3.0), -1.0, 0.25, CutSide::Under).is_none());
    }

    #[test]
    fn log_requires_positive_domain() {
        assert!(univariate_cuts(UnivariateKind::Log, iv(0.0, 1.0), 3).is_err());
        assert!(univariate_cuts(UnivariateKind::Pow(0.5), iv(-1.0, 1.0), 3).is_err());
        assert!(univariate_cuts(UnivariateKind::Pow(-1.0), iv(-1.0, 1.0), 3).is_err());
    }

    #[test]
    fn affine_estimators_are_exact() {
        let (u, o) = pl_estimators(UnivariateKind::Pow(1.0), iv(-1.0, 3.0), 4).unwrap();
        for x in [-1.0, 0.3, 2.9] {
            assert_eq!(u.eval(x), x);
            assert_eq!(o.eval(x), x);
        }
    }

    #[test]
    fn square_chords_interpolate() {
        let (_, o) = pl_estimators(UnivariateKind::Pow(2.0), iv(0.0, 2.0), 3).unwrap();
        assert_eq!(o.pieces, vec![(1.0, 0.0), (3.0, -2.0)]);
    }
}
