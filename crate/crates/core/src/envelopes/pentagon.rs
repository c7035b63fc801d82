//! Convex and concave envelope of `t1*t2` over a product of two pentagons.
//!
//! Pentagon `i` lives in `(x_i, t_i)` with vertices `(0, fL)`, `(p1, fL)`,
//! `(p2, b)`, `(1, fU)`, `(0, fU)` after `x_i` is mapped affinely onto
//! `[0, 1]`. The envelope has six affine pieces on each side.

use super::EnvelopeError;
use crate::geometry::{FacetSystem, Halfspace};
use crate::interval::Interval;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pentagon {
    /// Domain of `x`; `p1` and `p2` are relative positions in it.
    pub x: Interval,
    pub f_lo: f64,
    pub f_hi: f64,
    pub b: f64,
    pub p1: f64,
    pub p2: f64,
}

impl Pentagon {
    pub fn validate(&self) -> Result<(), EnvelopeError> {
        let all = [
            self.x.lo, self.x.hi, self.f_lo, self.f_hi, self.b, self.p1, self.p2,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(EnvelopeError::InvalidPentagon(
                "non-finite parameter".into(),
            ));
        }
        if !(self.x.lo < self.x.hi) {
            return Err(EnvelopeError::InvalidPentagon(format!(
                "empty x-range {}",
                self.x
            )));
        }
        if !(0.0 <= self.p1 && self.p1 < self.p2 && self.p2 <= 1.0) {
            return Err(EnvelopeError::InvalidPentagon(format!(
                "need 0 <= p1 < p2 <= 1, got p1 = {}, p2 = {}",
                self.p1, self.p2
            )));
        }
        if !(self.f_lo < self.b && self.b < self.f_hi) {
            return Err(EnvelopeError::InvalidPentagon(format!(
                "need fL < b < fU, got {} {} {}",
                self.f_lo, self.b, self.f_hi
            )));
        }
        let (r1, r2) = (self.r1(), self.r2());
        if !(r1 > r2) {
            return Err(EnvelopeError::DegeneratePentagon { r1, r2 });
        }
        Ok(())
    }

    pub fn r1(&self) -> f64 {
        (self.p2 - self.p1) / (self.b - self.f_lo)
    }

    pub fn r2(&self) -> f64 {
        (1.0 - self.p2) / (self.f_hi - self.b)
    }

    pub fn w(&self) -> f64 {
        1.0 / (self.r1() - self.r2())
    }

    fn to_x(&self, s: f64) -> f64 {
        self.x.lo + s * (self.x.hi - self.x.lo)
    }

    /// Vertices in original coordinates, counter-clockwise.
    pub fn vertices(&self) -> [(f64, f64); 5] {
        [
            (self.to_x(0.0), self.f_lo),
            (self.to_x(self.p1), self.f_lo),
            (self.to_x(self.p2), self.b),
            (self.to_x(1.0), self.f_hi),
            (self.to_x(0.0), self.f_hi),
        ]
    }

    /// Edge inequalities over `(x, t)`; zero-length edges are skipped.
    pub fn edges(&self) -> Vec<Halfspace> {
        let v = self.vertices();
        let mut out = Vec::new();
        for i in 0..5 {
            let (a, b) = (v[i], v[(i + 1) % 5]);
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            if dx == 0.0 && dy == 0.0 {
                continue;
            }
            let n = vec![dy, -dx];
            let off = n[0] * a.0 + n[1] * a.1;
            out.push(
                Halfspace {
                    normal: n,
                    offset: off,
                }
                .normalized(),
            );
        }
        out
    }
}

/// Pieces over `(x1, x2, t1, t2)` in original coordinates:
/// `mu >= a·z + c` for `under`, `mu <= a·z + c` for `over`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PentagonEnvelope {
    pub first: Pentagon,
    pub second: Pentagon,
    pub under: Vec<([f64; 4], f64)>,
    pub over: Vec<([f64; 4], f64)>,
}

fn piece_value(p: &([f64; 4], f64), z: &[f64; 4]) -> f64 {
    p.0.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() + p.1
}

impl PentagonEnvelope {
    pub fn convex_value(&self, z: &[f64; 4]) -> f64 {
        self.under
            .iter()
            .map(|p| piece_value(p, z))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn concave_value(&self, z: &[f64; 4]) -> f64 {
        self.over
            .iter()
            .map(|p| piece_value(p, z))
            .fold(f64::INFINITY, f64::min)
    }

    /// Envelope pieces plus both pentagons' edges, over `(x1, x2, t1, t2, mu)`.
    pub fn facets(&self) -> FacetSystem {
        let mut ineq = Vec::new();
        for (a, c) in &self.under {
            ineq.push(Halfspace {
                normal: vec![a[0], a[1], a[2], a[3], -1.0],
                offset: -c,
            });
        }
        for (a, c) in &self.over {
            ineq.push(Halfspace {
                normal: vec![-a[0], -a[1], -a[2], -a[3], 1.0],
                offset: *c,
            });
        }
        for (k, p) in [self.first, self.second].iter().enumerate() {
            for e in p.edges() {
                let mut n = vec![0.0; 5];
                n[k] = e.normal[0];
                n[2 + k] = e.normal[1];
                ineq.push(Halfspace {
                    normal: n,
                    offset: e.offset,
                });
            }
        }
        FacetSystem {
            dim: 5,
            inequalities: ineq.iter().map(Halfspace::normalized).collect(),
            equalities: Vec::new(),
        }
    }
}

/// The twelve envelope pieces of `t1*t2` over `p × q`.
pub fn pentagon_envelope(p: &Pentagon, q: &Pentagon) -> Result<PentagonEnvelope, EnvelopeError> {
    p.validate()?;
    q.validate()?;
    let (f1l, f1u, b1) = (p.f_lo, p.f_hi, p.b);
    let (f2l, f2u, b2) = (q.f_lo, q.f_hi, q.b);
    let (r11, r12, w1) = (p.r1(), p.r2(), p.w());
    let (r21, r22, w2) = (q.r1(), q.r2(), q.w());
    let p21 = q.p1;

    let alpha: [[f64; 4]; 6] = [
        [0.0, 0.0, f2u, f1u],
        [0.0, 0.0, f2l, f1l],
        [(f2u - f2l) * w1, 0.0, f2l - r12 * (f2u - f2l) * w1, b1],
        [0.0, (f1u - f1l) * w2, b2, f1l - r22 * (f1u - f1l) * w2],
        [
            (f2u - b2) * w1,
            (f1u - b1) * w2,
            b2 - r12 * (f2u - b2) * w1,
            b1 - r22 * (f1u - b1) * w2,
        ],
        [
            (b2 - f2l) * w1,
            (b1 - f1l) * w2,
            b2 - r11 * (b2 - f2l) * w1,
            b1 - r21 * (b1 - f1l) * w2,
        ],
    ];
    let beta: [[f64; 4]; 6] = [
        [0.0, 0.0, f2u, f1l],
        [0.0, 0.0, f2l, f1u],
        [(f2l - f2u) * w1, 0.0, f2l - r11 * (f2l - f2u) * w1, b1],
        [0.0, (f1l - f1u) * w2, b2, f1l - r21 * (f1l - f1u) * w2],
        [
            (f2l - b2) * w1,
            (b1 - f1u) * w2,
            b2 - r12 * (f2l - b2) * w1,
            b1 - r21 * (b1 - f1u) * w2,
        ],
        [
            (b2 - f2u) * w1,
            (f1l - b1) * w2,
            b2 - r11 * (b2 - f2u) * w1,
            b1 - r22 * (f1l - b1) * w2,
        ],
    ];
    let (h1, h2) = (p.x.hi - p.x.lo, q.x.hi - q.x.lo);
    // back from unit x-coordinates: a * (x - lo) / h
    let unmap = |a: &[f64; 4], c: f64| -> ([f64; 4], f64) {
        (
            [a[0] / h1, a[1] / h2, a[2], a[3]],
            c - a[0] * p.x.lo / h1 - a[1] * q.x.lo / h2,
        )
    };
    let under = alpha
        .iter()
        .map(|a| {
            let c = f1u * f2l - (a[0] + a[1] * p21 + a[2] * f1u + a[3] * f2l);
            unmap(a, c)
        })
        .collect();
    let over = beta
        .iter()
        .map(|a| {
            let d = f1u * f2u - (a[0] + a[1] + a[2] * f1u + a[3] * f2u);
            unmap(a, d)
        })
        .collect();
    Ok(PentagonEnvelope {
        first: *p,
        second: *q,
        under,
        over,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_pentagon() -> Pentagon {
        // max{0, 2x-1, 4x-4} <= t <= 4 on x in [0, 2]
        Pentagon {
            x: Interval::new(0.0, 2.0),
            f_lo: 0.0,
            f_hi: 4.0,
            b: 2.0,
            p1: 0.25,
            p2: 0.75,
        }
    }

    #[test]
    fn tight_at_vertex_products() {
        let p = square_pentagon();
        let e = pentagon_envelope(&p, &p).unwrap();
        for a in p.vertices() {
            for b in p.vertices() {
                let z = [a.0, b.0, a.1, b.1];
                let prod = a.1 * b.1;
                assert!((e.convex_value(&z) - prod).abs() < 1e-9, "{z:?}");
                assert!((e.concave_value(&z) - prod).abs() < 1e-9, "{z:?}");
            }
        }
    }

    #[test]
    fn rejects_nonconvex_pentagon() {
        let p = Pentagon {
            b: 0.5,
            ..square_pentagon()
        };
        assert!(p.validate().is_ok());
        let q = Pentagon {
            b: 3.9,
            p2: 0.3,
            ..square_pentagon()
        };
        assert!(matches!(
            q.validate(),
            Err(EnvelopeError::DegeneratePentagon { .. })
        ));
    }
}
