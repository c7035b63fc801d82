use super::{GeometryError, PointSet};
use serde::Serialize;

/// Relative tolerance for coordinate comparisons on region boundaries.
const COORD_TOL: f64 = 1e-12;

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= COORD_TOL * (1.0 + a.abs().max(b.abs()))
}

/// Closed box `lo <= x <= hi`; flat axes (`lo == hi`) are allowed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, GeometryError> {
        if lo.len() != hi.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] <= hi[i])) {
            return Err(GeometryError::InvalidBox(i));
        }
        Ok(AxisBox { lo, hi })
    }

    /// 2-D box `[x0,x1] × [y0,y1]`.
    ///
    /// # Panics
    /// Panics if an interval is reversed.
    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        AxisBox::new(vec![x0, y0], vec![x1, y1]).expect("reversed rectangle")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        (0..self.dim()).all(|i| {
            (self.lo[i] <= p[i] || same(self.lo[i], p[i]))
                && (p[i] <= self.hi[i] || same(self.hi[i], p[i]))
        })
    }

    /// Largest edge length (max-norm diameter).
    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.hi[i] - self.lo[i])
            .fold(0.0, f64::max)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.hi[i] - self.lo[i]).product()
    }

    /// All `2^d` vertices (with repeats for flat axes removed).
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut out: Vec<Vec<f64>> = vec![vec![]];
        for i in 0..d {
            let vals: Vec<f64> = if self.lo[i] == self.hi[i] {
                vec![self.lo[i]]
            } else {
                vec![self.lo[i], self.hi[i]]
            };
            out = out
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    /// Intersection that keeps positive width on every axis where `self`
    /// has positive width; `None` for lower-dimensional contact.
    pub fn clip(&self, cell: &AxisBox) -> Option<AxisBox> {
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let a = self.lo[i].max(cell.lo[i]);
            let b = self.hi[i].min(cell.hi[i]);
            if a > b || (a == b && self.lo[i] < self.hi[i]) {
                return None;
            }
            lo.push(a);
            hi.push(b);
        }
        Some(AxisBox { lo, hi })
    }
}

/// Finite union of boxes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisRegion {
    pub dim: usize,
    pub boxes: Vec<AxisBox>,
}

impl AxisRegion {
    pub fn new(dim: usize, boxes: Vec<AxisBox>) -> Result<Self, GeometryError> {
        if let Some(b) = boxes.iter().find(|b| b.dim() != dim) {
            return Err(GeometryError::DimensionMismatch {
                expected: dim,
                found: b.dim(),
            });
        }
        Ok(AxisRegion { dim, boxes })
    }

    pub fn from_box(b: AxisBox) -> Self {
        AxisRegion {
            dim: b.dim(),
            boxes: vec![b],
        }
    }

    pub fn empty(dim: usize) -> Self {
        AxisRegion { dim, boxes: vec![] }
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(p))
    }

    pub fn bounding_box(&self) -> Option<AxisBox> {
        let first = self.boxes.first()?;
        let mut lo = first.lo.clone();
        let mut hi = first.hi.clone();
        for b in &self.boxes[1..] {
            for i in 0..self.dim {
                lo[i] = lo[i].min(b.lo[i]);
                hi[i] = hi[i].max(b.hi[i]);
            }
        }
        Some(AxisBox { lo, hi })
    }

    /// Maximal segment through `v` parallel to `axis` inside the region, as
    /// its two ends; `None` if `v` is not in the region.
    pub fn slice(&self, v: &[f64], axis: usize) -> Option<(f64, f64)> {
        let parts: Vec<(f64, f64)> = self
            .boxes
            .iter()
            .filter(|b| {
                (0..self.dim).all(|j| {
                    j == axis
                        || ((b.lo[j] <= v[j] || same(b.lo[j], v[j]))
                            && (v[j] <= b.hi[j] || same(b.hi[j], v[j])))
                })
            })
            .map(|b| (b.lo[axis], b.hi[axis]))
            .collect();
        let x = v[axis];
        let mut seg: Option<(f64, f64)> = None;
        loop {
            let mut grown = false;
            for &(l, h) in &parts {
                let touches = match seg {
                    None => (l <= x || same(l, x)) && (x <= h || same(h, x)),
                    Some((a, b)) => (l <= b || same(l, b)) && (a <= h || same(a, h)),
                };
                if !touches {
                    continue;
                }
                let next = match seg {
                    None => (l, h),
                    Some((a, b)) => (a.min(l), b.max(h)),
                };
                if seg != Some(next) {
                    seg = Some(next);
                    grown = true;
                }
            }
            if !grown {
                return seg;
            }
        }
    }

    /// First axis along which `v` is not an end of its slice, with the
    /// slice ends.
    pub fn non_extremal_axis(&self, v: &[f64]) -> Option<(usize, f64, f64)> {
        for i in 0..self.dim {
            if let Some((l, h)) = self.slice(v, i) {
                if !same(v[i], l) && !same(v[i], h) {
                    return Some((i, l, h));
                }
            }
        }
        None
    }

    /// Coordinate-wise extremality test for a point of the region.
    pub fn is_corner(&self, v: &[f64]) -> bool {
        self.contains(v) && self.non_extremal_axis(v).is_none()
    }

    /// Sorted distinct box coordinates per axis.
    pub fn coordinate_grid(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| {
                let mut v: Vec<f64> = self.boxes.iter().flat_map(|b| [b.lo[i], b.hi[i]]).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect()
    }

    pub fn total_volume_upper(&self) -> f64 {
        self.boxes.iter().map(AxisBox::volume).sum()
    }
}

/// Vertices of all boxes, deduplicated.
pub fn disc_points(h: &AxisRegion) -> PointSet {
    let mut s = PointSet::new(h.dim);
    for b in &h.boxes {
        for v in b.vertices() {
            s.insert(v).expect("box dimension matches region");
        }
    }
    s
}

/// Points of [`disc_points`] that are extremal in every axis slice.
pub fn corner_points(h: &AxisRegion) -> PointSet {
    let d = disc_points(h);
    PointSet {
        dim: h.dim,
        points: d.points.into_iter().filter(|v| h.is_corner(v)).collect(),
    }
}

/// Grid cells (products of consecutive breakpoints) meeting `h`, each
/// returned as the part of `h` inside the cell.
pub fn grid_cover(h: &AxisRegion, grid: &[Vec<f64>]) -> Vec<AxisRegion> {
    grid_cover_indexed(h, grid)
        .into_iter()
        .map(|(_, r)| r)
        .collect()
}

/// [`grid_cover`] with the per-axis segment index of each cell.
pub fn grid_cover_indexed(h: &AxisRegion, grid: &[Vec<f64>]) -> Vec<(Vec<usize>, AxisRegion)> {
    assert_eq!(grid.len(), h.dim, "one breakpoint list per axis");
    let axes: Vec<Vec<(f64, f64)>> = grid
        .iter()
        .map(|g| {
            if g.len() < 2 {
                vec![(f64::NEG_INFINITY, f64::INFINITY)]
            } else {
                g.windows(2).map(|w| (w[0], w[1])).collect()
            }
        })
        .collect();
    let mut cells: Vec<Vec<usize>> = vec![vec![]];
    for a in &axes {
        cells = cells
            .into_iter()
            .flat_map(|c| {
                (0..a.len()).map(move |k| {
                    let mut c = c.clone();
                    c.push(k);
                    c
                })
            })
            .collect();
    }
    let mut out = Vec::new();
    for c in cells {
        let cell = AxisBox {
            lo: c.iter().enumerate().map(|(i, &k)| axes[i][k].0).collect(),
            hi: c.iter().enumerate().map(|(i, &k)| axes[i][k].1).collect(),
        };
        let parts: Vec<AxisBox> = h.boxes.iter().filter_map(|b| b.clip(&cell)).collect();
        if !parts.is_empty() {
            out.push((
                c,
                AxisRegion {
                    dim: h.dim,
                    boxes: parts,
                },
            ));
        }
    }
    out
}
