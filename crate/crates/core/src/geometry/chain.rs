//! Coordinate-wise convex decomposition as an absorbing Markov chain.
//!
//! A non-corner state is split along its first non-extremal axis into the
//! two ends of its slice, with the convex multipliers as transition
//! probabilities. Corners are absorbing. Since the split is affine along one
//! axis, every multilinear function is preserved in expectation, and so is
//! its value under the limiting distribution.

use super::region::{corner_points, disc_points, AxisRegion};
use super::{GeometryError, PointSet};
use nalgebra::DMatrix;
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq)]
pub struct CornerChain {
    pub states: PointSet,
    /// Sparse rows of the transition matrix.
    pub transitions: Vec<Vec<(usize, f64)>>,
    pub absorbing: Vec<usize>,
}

fn key(p: &[f64]) -> Vec<u64> {
    p.iter()
        .map(|&x| if x == 0.0 { 0 } else { x.to_bits() })
        .collect()
}

/// Chain over the disc points of `h` and everything they decompose into.
pub fn build_corner_chain(h: &AxisRegion) -> CornerChain {
    build_chain_from(h, disc_points(h).points)
}

/// Chain explored from the given seed points (which must lie in `h`).
pub fn build_chain_from(h: &AxisRegion, seeds: Vec<Vec<f64>>) -> CornerChain {
    let mut states: Vec<Vec<f64>> = Vec::new();
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut add = |p: Vec<f64>, states: &mut Vec<Vec<f64>>, stack: &mut Vec<usize>| -> usize {
        let k = key(&p);
        if let Some(&i) = index.get(&k) {
            return i;
        }
        states.push(p);
        let i = states.len() - 1;
        index.insert(k, i);
        stack.push(i);
        i
    };
    for s in seeds {
        add(s, &mut states, &mut stack);
    }
    let mut rows: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
    while let Some(i) = stack.pop() {
        let v = states[i].clone();
        match h.non_extremal_axis(&v) {
            None => {
                rows.insert(i, vec![(i, 1.0)]);
            }
            Some((axis, l, r)) => {
                let mut vl = v.clone();
                vl[axis] = l;
                let mut vr = v.clone();
                vr[axis] = r;
                let lam = (r - v[axis]) / (r - l);
                let a = add(vl, &mut states, &mut stack);
                let b = add(vr, &mut states, &mut stack);
                rows.insert(i, vec![(a, lam), (b, 1.0 - lam)]);
            }
        }
    }
    let n = states.len();
    let transitions: Vec<Vec<(usize, f64)>> = (0..n).map(|i| rows.remove(&i).unwrap()).collect();
    let absorbing = (0..n)
        .filter(|&i| transitions[i].len() == 1 && transitions[i][0].0 == i)
        .collect();
    CornerChain {
        states: PointSet {
            dim: h.dim,
            points: states,
        },
        transitions,
        absorbing,
    }
}

impl CornerChain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut t = DMatrix::zeros(n, n);
        for (i, row) in self.transitions.iter().enumerate() {
            for &(j, p) in row {
                t[(i, j)] += p;
            }
        }
        t
    }

    pub fn index_of(&self, p: &[f64]) -> Option<usize> {
        self.states.find(p)
    }
}

/// `lim T^t`, computed from the fundamental matrix `(I - Q)^{-1}`.
pub fn limiting_matrix(c: &CornerChain) -> Result<DMatrix<f64>, GeometryError> {
    let n = c.len();
    let is_abs: Vec<bool> = (0..n).map(|i| c.absorbing.contains(&i)).collect();
    let transient: Vec<usize> = (0..n).filter(|&i| !is_abs[i]).collect();
    let mut pos = vec![usize::MAX; n];
    for (k, &i) in transient.iter().enumerate() {
        pos[i] = k;
    }
    let m = transient.len();
    let mut iq = DMatrix::<f64>::identity(m, m);
    let mut r = DMatrix::<f64>::zeros(m, n);
    for (k, &i) in transient.iter().enumerate() {
        for &(j, p) in &c.transitions[i] {
            if is_abs[j] {
                r[(k, j)] += p;
            } else {
                iq[(k, pos[j])] -= p;
            }
        }
    }
    let mut out = DMatrix::<f64>::zeros(n, n);
    for &a in &c.absorbing {
        out[(a, a)] = 1.0;
    }
    if m > 0 {
        let b = iq.lu().solve(&r).ok_or(GeometryError::NotAbsorbing)?;
        if b.iter().any(|x| !x.is_finite()) {
            return Err(GeometryError::NotAbsorbing);
        }
        for (k, &i) in transient.iter().enumerate() {
            for j in 0..n {
                out[(i, j)] = b[(k, j)];
            }
        }
    }
    Ok(out)
}

/// Convex multipliers on the corners of `h` that reproduce `x` and every
/// multilinear function at `x`.
pub fn corner_decompose(x: &[f64], h: &AxisRegion) -> Result<Vec<(Vec<f64>, f64)>, GeometryError> {
    if x.len() != h.dim {
        return Err(GeometryError::DimensionMismatch {
            expected: h.dim,
            found: x.len(),
        });
    }
    if !h.contains(x) {
        return Err(GeometryError::NotInRegion(x.to_vec()));
    }
    let chain = build_chain_from(h, vec![x.to_vec()]);
    let t = limiting_matrix(&chain)?;
    let corners = corner_points(h);
    let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
    for &a in &chain.absorbing {
        let w = t[(0, a)];
        if w > 0.0 {
            let p = chain.states.points[a].clone();
            debug_assert!(corners.contains(&p));
            out.push((p, w));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AxisBox;

    #[test]
    fn unit_box_is_all_absorbing() {
        let h = AxisRegion::from_box(AxisBox::rect(0.0, 1.0, 0.0, 1.0));
        let c = build_corner_chain(&h);
        assert_eq!(c.len(), 4);
        assert_eq!(c.absorbing.len(), 4);
        assert_eq!(limiting_matrix(&c).unwrap(), DMatrix::identity(4, 4));
    }

    #[test]
    fn centre_of_unit_box_has_equal_weights() {
        let h = AxisRegion::from_box(AxisBox::rect(0.0, 1.0, 0.0, 1.0));
        let w = corner_decompose(&[0.5, 0.5], &h).unwrap();
        assert_eq!(w.len(), 4);
        for (_, p) in w {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn two_state_chain_limit() {
        let c = CornerChain {
            states: PointSet {
                dim: 1,
                points: vec![vec![0.0], vec![1.0]],
            },
            transitions: vec![vec![(1, 1.0)], vec![(1, 1.0)]],
            absorbing: vec![1],
        };
        let t = limiting_matrix(&c).unwrap();
        assert_eq!(t, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]));
    }
}
