use super::Verdict;
use crate::geometry::{AxisBox, AxisRegion};

/// `n` evenly spaced points from `lo` to `hi`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Quadtree over the grid `xs × ys`: subgrids certified inside are kept
/// whole, certified outside are pruned, and subgrids that cannot be split
/// further are kept as unresolved leaves.
pub fn quadtree_voxelize(xs: &[f64], ys: &[f64], test: impl Fn(&AxisBox) -> Verdict) -> AxisRegion {
    assert!(
        xs.len() >= 2 && ys.len() >= 2,
        "grid needs two points per axis"
    );
    let mut kept = Vec::new();
    let mut queue =
        std::collections::VecDeque::from([(0usize, xs.len() - 1, 0usize, ys.len() - 1)]);
    while let Some((il, iu, jl, ju)) = queue.pop_front() {
        let s = AxisBox::rect(xs[il], xs[iu], ys[jl], ys[ju]);
        match test(&s) {
            Verdict::Inside => kept.push(s),
            Verdict::Outside => {}
            Verdict::Unknown if iu - il <= 1 || ju - jl <= 1 => kept.push(s),
            Verdict::Unknown => {
                let im = (il + iu) / 2;
                let jm = (jl + ju) / 2;
                queue.extend([
                    (il, im, jl, jm),
                    (im, iu, jl, jm),
                    (il, im, jm, ju),
                    (im, iu, jm, ju),
                ]);
            }
        }
    }
    AxisRegion {
        dim: 2,
        boxes: kept,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_constraints_keeps_everything() {
        let g = uniform_grid(0.0, 1.0, 3);
        let r = quadtree_voxelize(&g, &g, |_| Verdict::Inside);
        assert_eq!(r.boxes, vec![AxisBox::rect(0.0, 1.0, 0.0, 1.0)]);
    }

    #[test]
    fn grid_midpoint() {
        assert_eq!(uniform_grid(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
    }
}
