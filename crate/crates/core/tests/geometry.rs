use proptest::prelude::*;
use voxrelax::envelopes::mccormick;
use voxrelax::geometry::*;
use voxrelax::golden::staircase_region;
use voxrelax::interval::Interval;
use voxrelax::lp::{solve, LinearSystem, LpStatus, RowSense, Tag};

fn region(rects: &[(f64, f64, f64, f64)]) -> AxisRegion {
    AxisRegion::new(
        2,
        rects
            .iter()
            .map(|&(a, b, c, d)| AxisBox::rect(a, b, c, d))
            .collect(),
    )
    .unwrap()
}

/// Corner test by probing: a point is a corner when, along every axis, a
/// small step in one of the two directions leaves the region.
fn probe_corner(h: &AxisRegion, v: &[f64]) -> bool {
    let d = 1e-6;
    (0..h.dim).all(|i| {
        let mut a = v.to_vec();
        let mut b = v.to_vec();
        a[i] -= d;
        b[i] += d;
        !h.contains(&a) || !h.contains(&b)
    })
}

#[test]
fn staircase_chain_has_21_states() {
    let h = staircase_region();
    let d = disc_points(&h);
    assert_eq!(d.len(), 19);
    assert!(d.contains(&[2.0, 1.0]));
    // slices ending inside a box face add two more states
    let chain = build_corner_chain(&h);
    assert_eq!(chain.len(), 21);
    assert!(d.is_subset_of(&chain.states));
    let c = corner_points(&h);
    assert!(!c.contains(&[2.0, 1.0]));
    for p in &d.points {
        assert_eq!(c.contains(p), probe_corner(&h, p), "{p:?}");
    }
}

#[test]
fn staircase_chain_has_a_transient_cycle() {
    let h = staircase_region();
    let chain = build_corner_chain(&h);
    let n = chain.len();
    let transient: Vec<bool> = (0..n).map(|i| !chain.absorbing.contains(&i)).collect();
    // depth-first search for a cycle through transient states
    fn dfs(i: usize, c: &CornerChain, tr: &[bool], state: &mut [u8]) -> bool {
        state[i] = 1;
        for &(j, p) in &c.transitions[i] {
            if p <= 0.0 || !tr[j] || j == i {
                continue;
            }
            if state[j] == 1 || (state[j] == 0 && dfs(j, c, tr, state)) {
                return true;
            }
        }
        state[i] = 2;
        false
    }
    let mut state = vec![0u8; n];
    let cyclic =
        (0..n).any(|i| transient[i] && state[i] == 0 && dfs(i, &chain, &transient, &mut state));
    assert!(cyclic);
    let t = limiting_matrix(&chain).unwrap();
    for i in 0..n {
        let s: f64 = (0..n).map(|j| t[(i, j)]).sum();
        assert!((s - 1.0).abs() < 1e-12);
        for j in 0..n {
            if t[(i, j)].abs() > 1e-15 {
                assert!(chain.absorbing.contains(&j));
            }
        }
    }
}

#[test]
fn l_shape_corners_skip_the_reflex_point() {
    let two = region(&[(0.0, 2.0, 0.0, 1.0), (0.0, 1.0, 0.0, 2.0)]);
    let three = region(&[
        (0.0, 1.0, 0.0, 1.0),
        (1.0, 2.0, 0.0, 1.0),
        (0.0, 1.0, 1.0, 2.0),
    ]);
    for h in [&two, &three] {
        let c = corner_points(h);
        let d = disc_points(h);
        let probed: Vec<&Vec<f64>> = d.points.iter().filter(|p| probe_corner(h, p)).collect();
        assert_eq!(c.len(), 5);
        assert_eq!(probed.len(), 5);
        assert!(!c.contains(&[1.0, 1.0]));
        assert!(!c.contains(&[1.0, 0.0]));
        assert!(!c.contains(&[0.0, 1.0]));
    }
    assert_eq!(corner_points(&two), corner_points(&three));
}

/// Feasibility of `Σ w_k (p_k, p_k1 p_k2) = (x, x1 x2)`, `Σ w = 1`, `w >= 0`.
fn lifted_in_hull(pts: &[Vec<f64>], x: &[f64]) -> bool {
    let mut sys = LinearSystem::new();
    for k in 0..pts.len() {
        sys.add_var(format!("w{k}"), 0.0, f64::INFINITY);
    }
    let row = |f: &dyn Fn(&[f64]) -> f64| -> Vec<(usize, f64)> {
        pts.iter().enumerate().map(|(k, p)| (k, f(p))).collect()
    };
    sys.add_row("sum", row(&|_| 1.0), RowSense::Eq, 1.0, Tag::ModelLinear);
    sys.add_row("x1", row(&|p| p[0]), RowSense::Eq, x[0], Tag::ModelLinear);
    sys.add_row("x2", row(&|p| p[1]), RowSense::Eq, x[1], Tag::ModelLinear);
    sys.add_row(
        "x1x2",
        row(&|p| p[0] * p[1]),
        RowSense::Eq,
        x[0] * x[1],
        Tag::ModelLinear,
    );
    solve(&sys).status == LpStatus::Optimal
}

#[test]
fn l_shape_decomposition_agrees_with_lp() {
    let h = region(&[(0.0, 2.0, 0.0, 1.0), (0.0, 1.0, 0.0, 2.0)]);
    let corners = corner_points(&h).points;
    for x in [[1.0, 1.0], [0.3, 1.7], [1.6, 0.4], [0.5, 0.5]] {
        let w = corner_decompose(&x, &h).unwrap();
        let s: f64 = w.iter().map(|(_, a)| a).sum();
        let m1: f64 = w.iter().map(|(p, a)| a * p[0]).sum();
        let m2: f64 = w.iter().map(|(p, a)| a * p[1]).sum();
        let m12: f64 = w.iter().map(|(p, a)| a * p[0] * p[1]).sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!((m1 - x[0]).abs() < 1e-12 && (m2 - x[1]).abs() < 1e-12);
        assert!((m12 - x[0] * x[1]).abs() < 1e-12);
        assert!(lifted_in_hull(&corners, &x));
    }
}

#[test]
fn square_hull_has_four_facets() {
    let pts = vec![
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        vec![1.0, 1.0],
        vec![0.0, 1.0],
    ];
    let h = quickhull_points(2, &pts).unwrap();
    assert_eq!(h.inequalities.len(), 4);
    assert!(h.equalities.is_empty());
}

#[test]
fn cube_with_centroid_has_six_facets() {
    let mut pts = AxisBox::new(vec![0.0; 3], vec![1.0; 3]).unwrap().vertices();
    pts.push(vec![0.5; 3]);
    let h = quickhull_points(3, &pts).unwrap();
    assert_eq!(h.inequalities.len(), 6);
    assert!(h
        .inequalities
        .iter()
        .all(|f| f.eval(&[0.5, 0.5, 0.5]) < 0.0));
}

#[test]
fn lifted_bilinear_hull_is_mccormick() {
    let pts: Vec<Vec<f64>> = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
        .iter()
        .map(|&(x, y)| vec![x, y, x * y])
        .collect();
    let h = quickhull_points(3, &pts).unwrap();
    let m = mccormick(Interval::new(0.0, 1.0), Interval::new(0.0, 1.0));
    assert!(h.same_facets(&m, 1e-9));
}

#[test]
fn grid_cover_splits_along_breakpoints() {
    let h = region(&[(0.0, 2.0, 0.0, 2.0)]);
    let cells = grid_cover(&h, &[vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]]);
    assert_eq!(cells.len(), 4);
    let area: f64 = cells.iter().map(|c| c.total_volume_upper()).sum();
    assert!((area - 4.0).abs() < 1e-12);
}

fn rects() -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec((0u8..6, 1u8..4, 0u8..6, 1u8..4), 1..4).prop_map(|v| {
        v.into_iter()
            .map(|(x, w, y, h)| (x as f64, (x + w) as f64, y as f64, (y + h) as f64))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_preserves_multilinear_moments(r in rects(), s in 0.0..1.0f64, t in 0.0..1.0f64, k in 0usize..3) {
        let h = region(&r);
        let b = h.boxes[k % h.boxes.len()].clone();
        let x = [b.lo[0] + s * (b.hi[0] - b.lo[0]), b.lo[1] + t * (b.hi[1] - b.lo[1])];
        let w = corner_decompose(&x, &h).unwrap();
        let corners = corner_points(&h);
        let mut m = [0.0; 4];
        for (p, a) in &w {
            prop_assert!(corners.contains(p));
            prop_assert!(*a >= 0.0);
            m[0] += a;
            m[1] += a * p[0];
            m[2] += a * p[1];
            m[3] += a * p[0] * p[1];
        }
        prop_assert!((m[0] - 1.0).abs() < 1e-9);
        prop_assert!((m[1] - x[0]).abs() < 1e-9 && (m[2] - x[1]).abs() < 1e-9);
        prop_assert!((m[3] - x[0] * x[1]).abs() < 1e-9);
    }

    #[test]
    fn corners_are_a_subset_of_disc_points(r in rects()) {
        let h = region(&r);
        prop_assert!(corner_points(&h).is_subset_of(&disc_points(&h)));
    }
}
