//! Quickhull for dimensions 1 to 5.
//!
//! Coordinates are scaled to `[-1, 1]` per axis first. Inputs that are not
//! full-dimensional are reduced to their affine hull, which is reported as
//! equalities, and the hull is computed inside it. Simplicial facets that
//! share a hyperplane are merged at the end.

use super::{GeometryError, PointSet};
use serde::Serialize;
use std::collections::{HashMap, VecDeque};

/// Relative violation accepted when testing points against facets.
pub const HULL_TOL: f64 = 1e-7;

/// Distance (in scaled coordinates) below which a point counts as on a facet.
const EPS: f64 = 1e-10;
/// Rank threshold for the affine hull.
const RANK_TOL: f64 = 1e-9;

/// `normal · x <= offset` (or `=` when used as an equality).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn eval(&self, p: &[f64]) -> f64 {
        self.normal.iter().zip(p).map(|(a, x)| a * x).sum::<f64>() - self.offset
    }

    /// Scaled to a unit normal.
    pub fn normalized(&self) -> Halfspace {
        let n = self.normal.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n == 0.0 {
            return self.clone();
        }
        Halfspace {
            normal: self.normal.iter().map(|a| a / n).collect(),
            offset: self.offset / n,
        }
    }

    fn close(&self, o: &Halfspace, tol: f64) -> bool {
        self.normal
            .iter()
            .zip(&o.normal)
            .all(|(a, b)| (a - b).abs() <= tol)
            && (self.offset - o.offset).abs() <= tol * (1.0 + self.offset.abs())
    }
}

/// Polyhedron `{x : A x <= b, E x = f}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FacetSystem {
    pub dim: usize,
    pub inequalities: Vec<Halfspace>,
    pub equalities: Vec<Halfspace>,
}

impl FacetSystem {
    /// Largest violation at `p`, relative to `1 + |offset|`.
    pub fn max_violation(&self, p: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for h in &self.inequalities {
            worst = worst.max(h.eval(p) / (1.0 + h.offset.abs()));
        }
        for h in &self.equalities {
            worst = worst.max(h.eval(p).abs() / (1.0 + h.offset.abs()));
        }
        worst
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        self.max_violation(p) <= tol
    }

    /// Unit-normal copy; equalities get a sign fixed by their first nonzero
    /// coefficient.
    pub fn normalized(&self) -> FacetSystem {
        let eq = self
            .equalities
            .iter()
            .map(|h| {
                let h = h.normalized();
                let s = h
                    .normal
                    .iter()
                    .find(|a| a.abs() > 1e-12)
                    .map_or(1.0, |a| a.signum());
                Halfspace {
                    normal: h.normal.iter().map(|a| a * s).collect(),
                    offset: h.offset * s,
                }
            })
            .collect();
        FacetSystem {
            dim: self.dim,
            inequalities: self
                .inequalities
                .iter()
                .map(Halfspace::normalized)
                .collect(),
            equalities: eq,
        }
    }

    /// Same normalized inequality set (as a multiset up to `tol`) and same
    /// equality set.
    pub fn same_facets(&self, other: &FacetSystem, tol: f64) -> bool {
        let a = self.normalized();
        let b = other.normalized();
        let matches = |x: &[Halfspace], y: &[Halfspace]| {
            x.len() == y.len()
                && x.iter().all(|h| y.iter().any(|g| h.close(g, tol)))
                && y.iter().all(|h| x.iter().any(|g| h.close(g, tol)))
        };
        matches(&a.inequalities, &b.inequalities) && a.equalities.len() == b.equalities.len()
    }

    /// All constraints as `≤` halfspaces (equalities split in two).
    pub fn as_inequalities(&self) -> Vec<Halfspace> {
        let mut v = self.inequalities.clone();
        for e in &self.equalities {
            v.push(e.clone());
            v.push(Halfspace {
                normal: e.normal.iter().map(|a| -a).collect(),
                offset: -e.offset,
            });
        }
        v
    }
}

#[derive(Debug, Clone)]
struct Facet {
    verts: Vec<usize>,
    normal: Vec<f64>,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn det(m: &mut [Vec<f64>]) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            if f != 0.0 {
                for k in c..n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    d
}

/// Unit normal of the hyperplane through `k` points in `R^k`.
fn hyperplane(pts: &[&[f64]]) -> Option<(Vec<f64>, f64)> {
    let k = pts[0].len();
    let rows: Vec<Vec<f64>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(pts[0]).map(|(a, b)| a - b).collect())
        .collect();
    let mut n = vec![0.0; k];
    for (j, nj) in n.iter_mut().enumerate() {
        let mut minor: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|&(c, _)| c != j)
                    .map(|(_, &v)| v)
                    .collect()
            })
            .collect();
        let s = if j % 2 == 0 { 1.0 } else { -1.0 };
        *nj = s * det(&mut minor);
    }
    let len = dot(&n, &n).sqrt();
    if !(len > 1e-300) {
        return None;
    }
    n.iter_mut().for_each(|v| *v /= len);
    let off = dot(&n, pts[0]);
    Some((n, off))
}

/// Hull of full-dimensional points in `R^k`, `k >= 2`. Returns facets as
/// `(normal, offset)` in the same coordinates.
fn hull_full(pts: &[Vec<f64>]) -> Vec<(Vec<f64>, f64)> {
    let k = pts[0].len();
    // initial simplex: greedy by distance to the current affine span
    let mut simplex: Vec<usize> = Vec::with_capacity(k + 1);
    let first = (0..pts.len())
        .min_by(|&a, &b| pts[a][0].total_cmp(&pts[b][0]))
        .unwrap();
    simplex.push(first);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while simplex.len() < k + 1 {
        let o = &pts[simplex[0]];
        let mut best = (0usize, -1.0f64);
        for (i, p) in pts.iter().enumerate() {
            let mut r: Vec<f64> = p.iter().zip(o).map(|(a, b)| a - b).collect();
            for b in &basis {
                let c = dot(&r, b);
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let d = dot(&r, &r).sqrt();
            if d > best.1 {
                best = (i, d);
            }
        }
        let p = &pts[best.0];
        let mut r: Vec<f64> = p.iter().zip(o).map(|(a, b)| a - b).collect();
        for b in &basis {
            let c = dot(&r, b);
            r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let d = dot(&r, &r).sqrt();
        r.iter_mut().for_each(|x| *x /= d);
        basis.push(r);
        simplex.push(best.0);
    }
    let interior: Vec<f64> = (0..k)
        .map(|j| simplex.iter().map(|&i| pts[i][j]).sum::<f64>() / (k + 1) as f64)
        .collect();

    let mut facets: Vec<Facet> = Vec::new();
    let mut ridges: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();

    let make = |verts: Vec<usize>,
                facets: &mut Vec<Facet>,
                ridges: &mut HashMap<Vec<usize>, Vec<usize>>|
     -> Option<usize> {
        let refs: Vec<&[f64]> = verts.iter().map(|&i| pts[i].as_slice()).collect();
        let (mut n, mut off) = hyperplane(&refs)?;
        if dot(&n, &interior) - off > 0.0 {
            n.iter_mut().for_each(|v| *v = -*v);
            off = -off;
        }
        let id = facets.len();
        let mut sorted = verts.clone();
        sorted.sort_unstable();
        for skip in 0..sorted.len() {
            let ridge: Vec<usize> = sorted
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &v)| v)
                .collect();
            ridges.entry(ridge).or_default().push(id);
        }
        facets.push(Facet {
            verts: sorted,
            normal: n,
            offset: off,
            outside: Vec::new(),
            alive: true,
        });
        Some(id)
    };

    for skip in 0..=k {
        let verts: Vec<usize> = simplex
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != skip)
            .map(|(_, &v)| v)
            .collect();
        make(verts, &mut facets, &mut ridges);
    }
    let in_simplex: Vec<bool> = (0..pts.len()).map(|i| simplex.contains(&i)).collect();
    for (i, p) in pts.iter().enumerate() {
        if in_simplex[i] {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (f, fc) in facets.iter().enumerate() {
            let d = dot(&fc.normal, p) - fc.offset;
            if d > EPS && best.is_none_or(|b| d > b.1) {
                best = Some((f, d));
            }
        }
        if let Some((f, _)) = best {
            facets[f].outside.push(i);
        }
    }

    let mut queue: VecDeque<usize> = (0..facets.len()).collect();
    while let Some(f0) = queue.pop_front() {
        if !facets[f0].alive || facets[f0].outside.is_empty() {
            continue;
        }
        let eye = *facets[f0]
            .outside
            .iter()
            .max_by(|&&a, &&b| {
                let da = dot(&facets[f0].normal, &pts[a]);
                let db = dot(&facets[f0].normal, &pts[b]);
                da.total_cmp(&db)
            })
            .unwrap();
        let ep = &pts[eye];
        // visible set by BFS over ridge adjacency
        let mut visible: Vec<usize> = vec![f0];
        let mut seen: HashMap<usize, bool> = HashMap::new();
        seen.insert(f0, true);
        let mut horizon: Vec<Vec<usize>> = Vec::new();
        let mut qi = 0;
        while qi < visible.len() {
            let f = visible[qi];
            qi += 1;
            let verts = facets[f].verts.clone();
            for skip in 0..verts.len() {
                let ridge: Vec<usize> = verts
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                let nb = ridges[&ridge]
                    .iter()
                    .copied()
                    .find(|&g| g != f && facets[g].alive);
                let Some(g) = nb else {
                    continue;
                };
                match seen.get(&g) {
                    Some(true) => {}
                    Some(false) => horizon.push(ridge),
                    None => {
                        let vis = dot(&facets[g].normal, ep) - facets[g].offset > EPS;
                        seen.insert(g, vis);
                        if vis {
                            visible.push(g);
                        } else {
                            horizon.push(ridge);
                        }
                    }
                }
            }
        }
        let mut orphans: Vec<usize> = Vec::new();
        for &f in &visible {
            facets[f].alive = false;
            orphans.append(&mut facets[f].outside);
            let verts = facets[f].verts.clone();
            for skip in 0..verts.len() {
                let ridge: Vec<usize> = verts
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                if let Some(list) = ridges.get_mut(&ridge) {
                    list.retain(|&g| g != f);
                }
            }
        }
        let mut created: Vec<usize> = Vec::new();
        for ridge in horizon {
            let mut verts = ridge.clone();
            verts.push(eye);
            if let Some(id) = make(verts, &mut facets, &mut ridges) {
                created.push(id);
            }
        }
        for p in orphans {
            if p == eye {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for &f in &created {
                let d = dot(&facets[f].normal, &pts[p]) - facets[f].offset;
                if d > EPS && best.is_none_or(|b| d > b.1) {
                    best = Some((f, d));
                }
            }
            if let Some((f, _)) = best {
                facets[f].outside.push(p);
            }
        }
        queue.extend(created);
    }

    // merge coplanar simplicial facets
    let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
    for f in facets.iter().filter(|f| f.alive) {
        let dup = out.iter().any(|(n, o)| {
            n.iter().zip(&f.normal).all(|(a, b)| (a - b).abs() <= 1e-9)
                && (o - f.offset).abs() <= 1e-9
        });
        if !dup {
            out.push((f.normal.clone(), f.offset));
        }
    }
    out
}

/// Orthonormal basis of the span of `vecs` (Gram-Schmidt with pivoting).
fn span_basis(vecs: &[Vec<f64>], d: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut rest: Vec<Vec<f64>> = vecs.to_vec();
    while basis.len() < d {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in rest.iter().enumerate() {
            let n = dot(r, r).sqrt();
            if n > RANK_TOL && best.is_none_or(|b| n > b.1) {
                best = Some((i, n));
            }
        }
        let Some((i, n)) = best else {
            break;
        };
        let b: Vec<f64> = rest[i].iter().map(|x| x / n).collect();
        for r in rest.iter_mut() {
            let c = dot(r, &b);
            r.iter_mut().zip(&b).for_each(|(x, y)| *x -= c * y);
        }
        basis.push(b);
    }
    basis
}

/// Orthonormal complement of `basis` in `R^d`.
fn complement(basis: &[Vec<f64>], d: usize) -> Vec<Vec<f64>> {
    let mut all = basis.to_vec();
    let mut out = Vec::new();
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        for _ in 0..2 {
            for b in &all {
                let c = dot(&e, b);
                e.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = dot(&e, &e).sqrt();
        if n > 1e-6 {
            e.iter_mut().for_each(|x| *x /= n);
            all.push(e.clone());
            out.push(e);
        }
        if all.len() == d {
            break;
        }
    }
    out
}

/// Irredundant facet description of the convex hull of `p`.
pub fn quickhull(p: &PointSet) -> Result<FacetSystem, GeometryError> {
    quickhull_points(p.dim, &p.points)
}

pub fn quickhull_points(d: usize, pts: &[Vec<f64>]) -> Result<FacetSystem, GeometryError> {
    if !(1..=5).contains(&d) {
        return Err(GeometryError::UnsupportedDimension(d));
    }
    if pts.is_empty() {
        return Err(GeometryError::NoPoints);
    }
    if let Some(p) = pts.iter().find(|p| p.len() != d) {
        return Err(GeometryError::DimensionMismatch {
            expected: d,
            found: p.len(),
        });
    }
    // per-axis scaling to [-1, 1]
    let mut c = vec![0.0; d];
    let mut s = vec![1.0; d];
    for j in 0..d {
        let lo = pts.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max);
        c[j] = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        s[j] = if h > 1e-12 * (1.0 + c[j].abs()) {
            h
        } else {
            1.0
        };
    }
    let y: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| (0..d).map(|j| (p[j] - c[j]) / s[j]).collect())
        .collect();
    let y0 = y[0].clone();
    let diffs: Vec<Vec<f64>> = y
        .iter()
        .map(|p| p.iter().zip(&y0).map(|(a, b)| a - b).collect())
        .collect();
    let basis = span_basis(&diffs, d);
    let k = basis.len();

    // hull in scaled coordinates, as (normal, offset) over y
    let mut ineq: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut eqs: Vec<(Vec<f64>, f64)> = Vec::new();
    for n in complement(&basis, d) {
        let off = dot(&n, &y0);
        eqs.push((n, off));
    }
    if k == 1 {
        let u = &basis[0];
        let z: Vec<f64> = diffs.iter().map(|r| dot(r, u)).collect();
        let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ineq.push((u.clone(), hi + dot(u, &y0)));
        ineq.push((u.iter().map(|a| -a).collect(), -lo - dot(u, &y0)));
    } else if k >= 2 {
        let z: Vec<Vec<f64>> = diffs
            .iter()
            .map(|r| basis.iter().map(|b| dot(r, b)).collect())
            .collect();
        for (a, b) in hull_full(&z) {
            // a·z <= b with z = B^T (y - y0)
            let mut n = vec![0.0; d];
            for (ai, bv) in a.iter().zip(&basis) {
                n.iter_mut().zip(bv).for_each(|(x, v)| *x += ai * v);
            }
            let off = b + dot(&n, &y0);
            ineq.push((n, off));
        }
    }
    let back = |(n, off): (Vec<f64>, f64)| {
        // n·(x - c)/s <= off
        let normal: Vec<f64> = (0..d).map(|j| n[j] / s[j]).collect();
        let offset = off + (0..d).map(|j| normal[j] * c[j]).sum::<f64>();
        Halfspace { normal, offset }.normalized()
    };
    Ok(FacetSystem {
        dim: d,
        inequalities: ineq.into_iter().map(back).collect(),
        equalities: eqs.into_iter().map(back).collect(),
    })
}
