//! Bilinear envelope over a box.

use crate::geometry::{quickhull_points, FacetSystem, Halfspace};
use crate::interval::Interval;

/// `mu >= a*x + b*y + c` (under) or `mu <= a*x + b*y + c` (over).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearCut {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub under: bool,
}

impl BilinearCut {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.a * x + self.b * y + self.c
    }
}

/// The four McCormick inequalities for `mu = x*y`.
pub fn mccormick_cuts(x: Interval, y: Interval) -> [BilinearCut; 4] {
    let (xl, xu, yl, yu) = (x.lo, x.hi, y.lo, y.hi);
    [
        BilinearCut {
            a: yl,
            b: xl,
            c: -xl * yl,
            under: true,
        },
        BilinearCut {
            a: yu,
            b: xu,
            c: -xu * yu,
            under: true,
        },
        BilinearCut {
            a: yl,
            b: xu,
            c: -xu * yl,
            under: false,
        },
        BilinearCut {
            a: yu,
            b: xl,
            c: -xl * yu,
            under: false,
        },
    ]
}

/// Facets over `(x, y, mu)`. For a flat box the lifted vertices span a lower
/// dimensional set and the hull is returned instead, with its equalities.
pub fn mccormick(x: Interval, y: Interval) -> FacetSystem {
    if x.lo < x.hi && y.lo < y.hi {
        let inequalities = mccormick_cuts(x, y)
            .iter()
            .map(|c| {
                let s = if c.under { 1.0 } else { -1.0 };
                // under: a x + b y - mu <= -c
                Halfspace {
                    normal: vec![s * c.a, s * c.b, -s],
                    offset: -s * c.c,
                }
                .normalized()
            })
            .collect();
        return FacetSystem {
            dim: 3,
            inequalities,
            equalities: Vec::new(),
        };
    }
    let pts: Vec<Vec<f64>> = [(x.lo, y.lo), (x.lo, y.hi), (x.hi, y.lo), (x.hi, y.hi)]
        .iter()
        .map(|&(a, b)| vec![a, b, a * b])
        .collect();
    quickhull_points(3, &pts).expect("four points in three dimensions")
}
