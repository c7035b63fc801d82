//! Outer polygon of the projection of an LP feasible set onto two
//! variables, and its boundary voxelization.

use super::VoxelError;
use crate::geometry::{AxisBox, AxisRegion};
use crate::lp::{solve, with_objective, LinearSystem, LpStatus, RowSense, Tag};
use serde::Serialize;

/// Points closer than this (relative) are merged.
const MERGE_TOL: f64 = 1e-12;

/// Convex polygon, vertices counter-clockwise. May be degenerate (a segment
/// or a point) when the projection is.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polygon {
    pub vertices: Vec<[f64; 2]>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn close(a: [f64; 2], b: [f64; 2]) -> bool {
    let s = 1.0 + a[0].abs().max(a[1].abs()).max(b[0].abs()).max(b[1].abs());
    (a[0] - b[0]).abs() <= MERGE_TOL * s && (a[1] - b[1]).abs() <= MERGE_TOL * s
}

fn dedup(pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::new();
    for &p in pts {
        if !out.iter().any(|&q| close(p, q)) {
            out.push(p);
        }
    }
    out
}

/// Monotone-chain hull, counter-clockwise, collinear points dropped.
pub fn convex_hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = dedup(points);
    if p.len() < 3 {
        return p;
    }
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Clockwise by angle around the centroid, ties by distance to it.
pub fn sort_clockwise(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = dedup(points);
    let n = p.len().max(1) as f64;
    let c = [
        p.iter().map(|v| v[0]).sum::<f64>() / n,
        p.iter().map(|v| v[1]).sum::<f64>() / n,
    ];
    let key = |v: &[f64; 2]| {
        let a = (v[1] - c[1]).atan2(v[0] - c[0]);
        let d = (v[0] - c[0]).hypot(v[1] - c[1]);
        (a, d)
    };
    p.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        kb.0.total_cmp(&ka.0).then(ka.1.total_cmp(&kb.1))
    });
    p
}

impl Polygon {
    pub fn from_box(x: (f64, f64), y: (f64, f64)) -> Polygon {
        Polygon {
            vertices: dedup(&[[x.0, y.0], [x.1, y.0], [x.1, y.1], [x.0, y.1]]),
        }
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return 0.0;
        }
        0.5 * (0..n)
            .map(|i| v[i][0] * v[(i + 1) % n][1] - v[(i + 1) % n][0] * v[i][1])
            .sum::<f64>()
    }

    /// Membership with absolute slack `tol`; handles degenerate polygons.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        let v = &self.vertices;
        match v.len() {
            0 => false,
            1 => (p[0] - v[0][0]).abs() <= tol && (p[1] - v[0][1]).abs() <= tol,
            2 => {
                let (a, b) = (v[0], v[1]);
                let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                let t =
                    ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (len * len);
                let t = t.clamp(0.0, 1.0);
                let q = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                (p[0] - q[0]).hypot(p[1] - q[1]) <= tol
            }
            n => (0..n).all(|i| {
                let (a, b) = (v[i], v[(i + 1) % n]);
                let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                cross(a, b, p) >= -tol * len
            }),
        }
    }

    /// Keeps the part with `n·p <= h`.
    pub fn clip(&self, n: [f64; 2], h: f64) -> Polygon {
        let v = &self.vertices;
        if v.len() < 3 {
            return Polygon {
                vertices: v
                    .iter()
                    .copied()
                    .filter(|p| n[0] * p[0] + n[1] * p[1] <= h)
                    .collect(),
            };
        }
        let side = |p: [f64; 2]| n[0] * p[0] + n[1] * p[1] - h;
        let mut out = Vec::new();
        for i in 0..v.len() {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            let (sa, sb) = (side(a), side(b));
            if sa <= 0.0 {
                out.push(a);
            }
            if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
                let t = sa / (sa - sb);
                out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        Polygon {
            vertices: convex_hull_2d(&out),
        }
    }
}

/// Result of [`approx_projection`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Projection {
    /// Outer approximation: bounding box cut by every supporting line found.
    pub outer: Polygon,
    /// Hull of the support points found (an inner approximation).
    pub inner: Vec<[f64; 2]>,
    /// Support directions queried, including the four bounding-box ones.
    pub lps: usize,
    /// Largest remaining facet-to-support gap when the loop stopped.
    pub gap: f64,
}

fn support(
    sys: &LinearSystem,
    ix: usize,
    iy: usize,
    dir: [f64; 2],
) -> Result<(f64, [f64; 2]), VoxelError> {
    let sol = solve(&with_objective(sys, vec![(ix, -dir[0]), (iy, -dir[1])]));
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(VoxelError::Infeasible),
        LpStatus::Unbounded => return Err(VoxelError::Unbounded(dir)),
        s => return Err(VoxelError::Lp(s)),
    }
    let mut p = [sol.x[ix], sol.x[iy]];
    let h = dir[0] * p[0] + dir[1] * p[1];
    // among optimal points take the one farthest counter-clockwise, so that
    // ties at box corners do not collapse the inner hull
    let mut tie = sys.clone();
    let slack = 1e-9 * (1.0 + h.abs());
    tie.add_row(
        "support_face",
        vec![(ix, dir[0]), (iy, dir[1])],
        RowSense::Ge,
        h - slack,
        Tag::ObjectiveCut,
    );
    let t = solve(&with_objective(&tie, vec![(ix, dir[1]), (iy, -dir[0])]));
    if t.status == LpStatus::Optimal {
        p = [t.x[ix], t.x[iy]];
    }
    Ok((h + 1e-9 * (1.0 + h.abs()), p))
}

/// Outer polygon of the projection of `sys` onto variables `(ix, iy)`:
/// four bounding-box supports, then up to `n_max` supports in the normal
/// direction of the inner-hull facet farthest from the outer polygon,
/// stopping early once that distance is below `eps`.
pub fn approx_projection(
    sys: &LinearSystem,
    ix: usize,
    iy: usize,
    n_max: usize,
    eps: f64,
) -> Result<Projection, VoxelError> {
    let mut pts = Vec::new();
    let mut h = [0.0; 4];
    let dirs = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
    for (k, d) in dirs.iter().enumerate() {
        let (v, p) = support(sys, ix, iy, *d)?;
        h[k] = v;
        pts.push(p);
    }
    let mut outer = Polygon::from_box((-h[1], h[0]), (-h[3], h[2]));
    let mut used: Vec<[f64; 2]> = dirs.to_vec();
    let mut lps = 4;
    let mut gap;
    loop {
        let inner = convex_hull_2d(&pts);
        let mut normals: Vec<([f64; 2], f64)> = Vec::new();
        let n = inner.len();
        if n >= 2 {
            let edges = if n == 2 {
                vec![(0, 1), (1, 0)]
            } else {
                (0..n).map(|i| (i, (i + 1) % n)).collect()
            };
            for (i, j) in edges {
                let (a, b) = (inner[i], inner[j]);
                let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                let len = dx.hypot(dy);
                if len == 0.0 {
                    continue;
                }
                let nv = [dy / len, -dx / len];
                normals.push((nv, nv[0] * a[0] + nv[1] * a[1]));
            }
        }
        let mut best: Option<([f64; 2], f64)> = None;
        for (nv, off) in normals {
            if used
                .iter()
                .any(|u| (u[0] - nv[0]).abs() < 1e-9 && (u[1] - nv[1]).abs() < 1e-9)
            {
                continue;
            }
            let reach = outer
                .vertices
                .iter()
                .map(|w| nv[0] * w[0] + nv[1] * w[1])
                .fold(f64::NEG_INFINITY, f64::max);
            let g = reach - off;
            if best.is_none_or(|b| g > b.1) {
                best = Some((nv, g));
            }
        }
        gap = best.map_or(0.0, |b| b.1.max(0.0));
        let Some((nv, g)) = best else { break };
        if lps - 4 >= n_max || g < eps {
            break;
        }
        let (v, p) = support(sys, ix, iy, nv)?;
        outer = outer.clip(nv, v);
        used.push(nv);
        pts.push(p);
        lps += 1;
    }
    Ok(Projection {
        outer,
        inner: convex_hull_2d(&pts),
        lps,
        gap,
    })
}

/// Rectangles along the polygon boundary (`n_v` per edge, each spanned by
/// consecutive points along the edge) plus the grid cells they induce that
/// lie inside the polygon. Flat rectangles are thickened towards the
/// centroid by `1e-9` times the polygon's diameter.
pub fn boundary_voxelize(poly: &Polygon, n_v: usize) -> Result<AxisRegion, VoxelError> {
    let v = sort_clockwise(&poly.vertices);
    if v.len() < 3 {
        return Err(VoxelError::TooFewVertices(v.len()));
    }
    let n_v = n_v.max(1);
    let lo = [0, 1].map(|k| v.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min));
    let hi = [0, 1].map(|k| v.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max));
    let delta = 1e-9 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let c = [
        v.iter().map(|p| p[0]).sum::<f64>() / v.len() as f64,
        v.iter().map(|p| p[1]).sum::<f64>() / v.len() as f64,
    ];
    let mut boxes: Vec<AxisBox> = Vec::new();
    for i in 0..v.len() {
        let (a, b) = (v[i], v[(i + 1) % v.len()]);
        for j in 0..n_v {
            let s = j as f64 / n_v as f64;
            let t = (j + 1) as f64 / n_v as f64;
            let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let q = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let mut blo = [p[0].min(q[0]), p[1].min(q[1])];
            let mut bhi = [p[0].max(q[0]), p[1].max(q[1])];
            for k in 0..2 {
                if bhi[k] - blo[k] < delta {
                    if c[k] > blo[k] {
                        bhi[k] = blo[k] + delta;
                    } else {
                        blo[k] = bhi[k] - delta;
                    }
                }
            }
            boxes.push(AxisBox::rect(blo[0], bhi[0], blo[1], bhi[1]));
        }
    }
    let band = AxisRegion { dim: 2, boxes };
    let grid = band.coordinate_grid();
    let inner_poly = Polygon {
        vertices: convex_hull_2d(&v),
    };
    let mut fill = Vec::new();
    for w in grid[1].windows(2) {
        let mut run: Option<(f64, f64)> = None;
        for u in grid[0].windows(2) {
            let mid = [0.5 * (u[0] + u[1]), 0.5 * (w[0] + w[1])];
            let take = inner_poly.contains(mid, 0.0) && !band.contains(&mid);
            match (take, run) {
                (true, None) => run = Some((u[0], u[1])),
                (true, Some((l, _))) => run = Some((l, u[1])),
                (false, Some((l, r))) => {
                    fill.push(AxisBox::rect(l, r, w[0], w[1]));
                    run = None;
                }
                (false, None) => {}
            }
        }
        if let Some((l, r)) = run {
            fill.push(AxisBox::rect(l, r, w[0], w[1]));
        }
    }
    let mut boxes = band.boxes;
    boxes.extend(fill);
    Ok(AxisRegion { dim: 2, boxes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_center() {
        let h = convex_hull_2d(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]]);
        assert_eq!(h.len(), 4);
        assert_eq!(Polygon { vertices: h }.area(), 1.0);
    }

    #[test]
    fn clockwise_order() {
        let s = sort_clockwise(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert!(Polygon { vertices: s }.area() < 0.0);
    }

    #[test]
    fn square_band_has_four_thin_boxes() {
        let p = Polygon::from_box((0.0, 1.0), (0.0, 1.0));
        let r = boundary_voxelize(&p, 1).unwrap();
        // four edge boxes plus the interior cell
        assert_eq!(r.boxes.len(), 5);
        assert!(r.contains(&[0.5, 0.5]));
        let bb = r.bounding_box().unwrap();
        assert_eq!((bb.lo, bb.hi), (vec![0.0, 0.0], vec![1.0, 1.0]));
    }

    #[test]
    fn triangle_band() {
        let p = Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        };
        let r = boundary_voxelize(&p, 2).unwrap();
        let halves = r
            .boxes
            .iter()
            .filter(|b| {
                (b.hi[0] - b.lo[0] - 0.5).abs() < 1e-12 && (b.hi[1] - b.lo[1] - 0.5).abs() < 1e-12
            })
            .count();
        assert_eq!(halves, 2);
        for i in 0..=20 {
            for j in 0..=(20 - i) {
                assert!(r.contains(&[i as f64 / 20.0, j as f64 / 20.0]));
            }
        }
    }
}
