use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxrelax::expr::{factored_form, load_model, ExprDag, Node};
use voxrelax::geometry::{AxisBox, AxisRegion};
use voxrelax::interval::{constraint_roots, BoundStore};
use voxrelax::lp::{LinearSystem, RowSense, Tag};
use voxrelax::voxel::*;

fn tester_for(src: &str) -> (ExprDag, BoundStore) {
    let (_, dag) = load_model(src).unwrap();
    let store = BoundStore::from_dag(&dag);
    (dag, store)
}

/// Quarter disc cut by `k` tangent lines.
fn disc_lp(k: usize) -> LinearSystem {
    let mut s = LinearSystem::new();
    s.add_var("x", 0.0, 1.0);
    s.add_var("y", 0.0, 1.0);
    for i in 0..k {
        let t = std::f64::consts::FRAC_PI_2 * i as f64 / (k - 1) as f64;
        s.add_row(
            format!("t{i}"),
            [(0, t.cos()), (1, t.sin())],
            RowSense::Le,
            1.0,
            Tag::ModelLinear,
        );
    }
    s
}

#[test]
fn unit_square_needs_no_refinement() {
    let mut s = LinearSystem::new();
    s.add_var("x", 0.0, 1.0);
    s.add_var("y", 0.0, 1.0);
    let p = approx_projection(&s, 0, 1, 5, 1e-6).unwrap();
    assert_eq!(p.lps, 4);
    assert!((p.outer.area() - 1.0).abs() < 1e-6);
}

#[test]
fn triangle_cut_after_one_refinement() {
    let mut s = LinearSystem::new();
    s.add_var("x", 0.0, f64::INFINITY);
    s.add_var("y", 0.0, f64::INFINITY);
    s.add_row(
        "c",
        [(0, 1.0), (1, 1.0)],
        RowSense::Le,
        1.0,
        Tag::ModelLinear,
    );
    let p0 = approx_projection(&s, 0, 1, 0, 1e-6).unwrap();
    assert!((p0.outer.area() - 1.0).abs() < 1e-6);
    let p1 = approx_projection(&s, 0, 1, 1, 1e-6).unwrap();
    assert_eq!(p1.lps, 5);
    assert!((p1.outer.area() - 0.5).abs() < 1e-6);
}

#[test]
fn projection_area_shrinks_with_more_lps() {
    let s = disc_lp(24);
    let mut last = f64::INFINITY;
    for n_max in 0..8 {
        let a = approx_projection(&s, 0, 1, n_max, 1e-12)
            .unwrap()
            .outer
            .area();
        assert!(a <= last + 1e-9, "n_max {n_max}: {a} > {last}");
        last = a;
    }
    assert!(last < 0.85);
}

#[test]
fn voxelized_projection_contains_feasible_points() {
    let s = disc_lp(24);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (n_max, n_v) in [(0, 1), (2, 2), (5, 5), (8, 3)] {
        let p = approx_projection(&s, 0, 1, n_max, 1e-4).unwrap();
        let r = boundary_voxelize(&p.outer, n_v).unwrap();
        let mut n = 0;
        while n < 2000 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            if s.max_violation(&x) > 0.0 {
                continue;
            }
            n += 1;
            assert!(p.outer.contains(x, 1e-9), "{x:?}");
            assert!(
                r.contains(&x),
                "{x:?} not covered with n_max {n_max}, n_v {n_v}"
            );
        }
    }
}

/// Largest distance from a point of `r` to the quarter disc.
fn excess_over_disc(r: &AxisRegion) -> f64 {
    r.boxes
        .iter()
        .flat_map(|b| b.vertices())
        .map(|v| (v[0].hypot(v[1]) - 1.0).max(0.0))
        .fold(0.0, f64::max)
}

#[test]
fn outer_approx_converges_to_the_disc() {
    let (dag, store) = tester_for("var x, y in [0,1]; min 0; s.t. x^2 + y^2 <= 1;");
    let t = DagTester::new(
        &dag,
        &store,
        constraint_roots(&dag),
        vec![dag.var_node(0), dag.var_node(1)],
    );
    let start = AxisBox::rect(0.0, 1.0, 0.0, 1.0);
    let mut last = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 1..7 {
        let eps = 0.5f64.powi(k);
        let r = outer_approx(&start, eps, |b| t.test(b));
        for _ in 0..500 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            if x[0].hypot(x[1]) <= 1.0 {
                assert!(r.contains(&x));
            }
        }
        let h = excess_over_disc(&r);
        assert!(h <= eps + 1e-12, "eps {eps}: distance {h}");
        assert!(h <= last + 1e-12);
        last = h;
    }
    assert!(last < 0.02);
}

#[test]
fn quadtree_on_a_half_plane() {
    let g = uniform_grid(0.0, 1.0, 3);
    let (dag, store) = tester_for("var x, y in [0,1]; min 0; s.t. x + y <= 1;");
    let t = DagTester::new(
        &dag,
        &store,
        constraint_roots(&dag),
        vec![dag.var_node(0), dag.var_node(1)],
    );
    assert_eq!(t.test(&AxisBox::rect(0.0, 0.5, 0.0, 0.5)), Verdict::Inside);
    // the upper-right quadrant touches the line at (1/2, 1/2)
    assert_eq!(t.test(&AxisBox::rect(0.5, 1.0, 0.5, 1.0)), Verdict::Unknown);
    let r = quadtree_voxelize(&g, &g, |b| t.test(b));
    assert_eq!(r.boxes.len(), 4);

    let (dag, store) = tester_for("var x, y in [0,1]; min 0; s.t. x + y <= 0.9;");
    let t = DagTester::new(
        &dag,
        &store,
        constraint_roots(&dag),
        vec![dag.var_node(0), dag.var_node(1)],
    );
    let r = quadtree_voxelize(&g, &g, |b| t.test(b));
    assert_eq!(r.boxes.len(), 3);
    assert!(!r.contains(&[0.75, 0.75]));
}

#[test]
fn quadtree_keeps_whole_grid_when_certified() {
    let g = uniform_grid(0.0, 1.0, 5);
    let (dag, store) = tester_for("var x, y in [0,1]; min 0; s.t. x - 10 <= 0;");
    let t = DagTester::new(
        &dag,
        &store,
        constraint_roots(&dag),
        vec![dag.var_node(0), dag.var_node(1)],
    );
    let r = quadtree_voxelize(&g, &g, |b| t.test(b));
    assert_eq!(r.boxes, vec![AxisBox::rect(0.0, 1.0, 0.0, 1.0)]);
}

#[test]
fn config_validation() {
    assert!(VoxelConfig::default().validate().is_ok());
    let bad = VoxelConfig {
        epsilon: 0.0,
        ..Default::default()
    };
    assert!(bad.validate().is_err());
}

#[test]
fn merged_rows_keep_the_union() {
    let (dag, store) = tester_for("var x, y in [0,1]; min 0; s.t. x^2 + y^2 <= 1;");
    let t = DagTester::new(
        &dag,
        &store,
        constraint_roots(&dag),
        vec![dag.var_node(0), dag.var_node(1)],
    );
    let r = outer_approx(&AxisBox::rect(0.0, 1.0, 0.0, 1.0), 0.05, |b| t.test(b));
    let m = merge_rows(&r);
    assert!(m.boxes.len() < r.boxes.len());
    let area = |r: &AxisRegion| r.boxes.iter().map(AxisBox::volume).sum::<f64>();
    assert!((area(&r) - area(&m)).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..2000 {
        let x = [rng.gen::<f64>(), rng.gen::<f64>()];
        assert_eq!(r.contains(&x), m.contains(&x), "{x:?}");
    }
}

#[test]
fn capped_splitting_stays_an_outer_approximation() {
    let (dag, store) = tester_for("var x, y in [0,1]; min 0; s.t. x^2 + y^2 <= 1;");
    let t = DagTester::new(
        &dag,
        &store,
        constraint_roots(&dag),
        vec![dag.var_node(0), dag.var_node(1)],
    );
    let r = outer_approx_capped(&AxisBox::rect(0.0, 1.0, 0.0, 1.0), 1e-6, 50, |b| t.test(b));
    assert!(r.boxes.len() <= 60);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..2000 {
        let x = [rng.gen::<f64>(), rng.gen::<f64>()];
        if x[0].hypot(x[1]) <= 1.0 {
            assert!(r.contains(&x));
        }
    }
}

#[test]
fn intermediate_targets_are_checked_by_propagation() {
    // boxes over (x - y, x y): a large difference rules out a large product
    let (m, _) = load_model("var x, y in [0,1]; min exp(x - y)*x*y;").unwrap();
    let dag = factored_form(&m).unwrap();
    let store = BoundStore::from_dag(&dag);
    let is_var = |id: usize| matches!(dag.node(id), Node::Var(_));
    let diff = (0..dag.len())
        .find(|&id| matches!(dag.node(id), Node::Affine { .. }))
        .unwrap();
    let prod = (0..dag.len())
        .find(|&id| matches!(dag.node(id), Node::Mul(ch) if ch.iter().all(|&c| is_var(c))))
        .unwrap();
    let t = DagTester::new(&dag, &store, constraint_roots(&dag), vec![diff, prod]);
    assert_eq!(t.test(&AxisBox::rect(0.9, 1.0, 0.5, 1.0)), Verdict::Outside);
    assert_eq!(t.test(&AxisBox::rect(0.0, 0.1, 0.5, 1.0)), Verdict::Unknown);
}
