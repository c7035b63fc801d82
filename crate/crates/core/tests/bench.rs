use voxrelax::bench::*;
use voxrelax::expr::parse_model;
use voxrelax::relax::{relax_model, Mode, RelaxConfig, Voxelizer};

#[test]
fn generator_is_deterministic() {
    let a = gen_poly_instance(6, 5, 4, 11);
    let b = gen_poly_instance(6, 5, 4, 11);
    assert_eq!(a, b);
    let c = gen_poly_instance(6, 5, 4, 12);
    assert_ne!(a.c, c.c);
}

#[test]
fn planted_point_is_feasible_with_tight_rows() {
    for seed in 1..=10 {
        let p = gen_poly_instance(15, 30, 20, seed);
        for (i, &x) in p.x_tilde.iter().enumerate() {
            assert!(p.xl[i] <= x && x <= p.xu[i]);
        }
        for r in p.residuals(&p.x_tilde) {
            assert!(r.abs() <= 1e-9 * (1.0 + p.b.iter().fold(0.0f64, |a, b| a.max(b.abs()))));
        }
        let m = p.to_model();
        assert!(m.is_feasible(&p.x_tilde, 1e-9));
        assert!((m.objective_value(&p.x_tilde) - p.objective(&p.x_tilde)).abs() < 1e-6);
    }
}

#[test]
fn monomials_have_two_or_three_factors() {
    let p = gen_poly_instance(15, 30, 20, 3);
    for al in &p.alpha {
        assert!(al.len() == 2 || al.len() == 3);
        assert!(al.iter().all(|&(_, e)| e == 2 || e == 3));
    }
}

#[test]
fn negated_cost_flips_sign() {
    let g = gen_poly_instance_with(8, 6, 5, 4, CostSign::Gradient);
    let n = gen_poly_instance_with(8, 6, 5, 4, CostSign::Negated);
    for (a, b) in g.c.iter().zip(&n.c) {
        assert_eq!(*a, -*b);
    }
    assert_eq!(g.b, n.b);
}

#[test]
fn gap_metrics() {
    assert!((relative_remaining_gap(10.0, 8.0, 5.0) - 0.4).abs() < 1e-15);
    assert_eq!(relative_remaining_gap(10.0, 5.0, 5.0), 1.0);
    assert_eq!(rcg(4.0, 4.0, 9.0), Some(0.0));
    assert_eq!(rcg(7.0, 4.0, 10.0), Some(0.5));
    let gaps = instance_gaps(10.0, &[5.0, 8.0, 10.0]);
    assert_eq!(gaps, vec![1.0, 0.4, 0.0]);
}

#[test]
fn local_search_finds_the_corner_optimum() {
    let m = parse_model("var x1, x2 in [0,1]; max exp(x1 - x2)*x1*x2;").unwrap();
    let p = local_search(&m, &[1.0, 1.0], 0).unwrap();
    assert_eq!(p.value, 1.0);
    let p = local_search(&m, &[0.5, 0.5], 0).unwrap();
    assert!((p.value - 1.0).abs() < 1e-6);
}

#[test]
fn local_search_matches_lp_optimum_on_linear_model() {
    let m =
        parse_model("var x, y in [0,4]; min -x - 2*y; s.t. x + y <= 3; s.t. x - y >= -1;").unwrap();
    let p = local_search(&m, &[0.0, 0.0], 1).unwrap();
    let (_, o) = relax_model(&m, &RelaxConfig::with_mode(Mode::Base), None).unwrap();
    assert!((o.bound - -5.0).abs() < 1e-9);
    assert!(
        (p.value - o.bound).abs() < 1e-6,
        "{} vs {}",
        p.value,
        o.bound
    );
}

#[test]
fn random_walk_stays_feasible() {
    let p = gen_poly_instance(6, 5, 4, 2);
    let m = p.to_model();
    let pts = feasible_samples(&m, &p.x_tilde, 200, 5);
    assert!(!pts.is_empty());
    for x in &pts {
        assert!(m.is_feasible(x, 1e-9));
    }
}

#[test]
fn relaxation_bounds_are_below_the_planted_value() {
    let p = gen_poly_instance(6, 5, 4, 7);
    let m = p.to_model();
    let u = p.objective(&p.x_tilde);
    for cfg in [
        Method::fp().config,
        Method::vr_box().config,
        RelaxConfig {
            mode: Mode::Vr,
            voxelizer: Voxelizer::Quadtree,
            ..Default::default()
        },
    ] {
        let (_, o) = relax_model(&m, &cfg, Some(u)).unwrap();
        assert!(
            o.bound <= u + 1e-6 * (1.0 + u.abs()),
            "{:?}: {} > {u}",
            cfg.mode,
            o.bound
        );
    }
}

#[test]
fn small_experiment_report() {
    let cfg = ExperimentConfig {
        sizes: vec![(5, 4, 3)],
        seeds: vec![1, 2],
        ..Default::default()
    };
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(r.records.len(), 4);
    assert!(r.records.iter().all(|x| x.error.is_none()));
    for meth in ["FP", "VR"] {
        assert_eq!(*r.mu[meth].last().unwrap(), 1.0);
    }
    assert_eq!(r.timing.len(), 2);
    let csv = r.csv_string().unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(r.to_json()["records"].is_array());
}

#[test]
fn empty_seed_list_gives_empty_report() {
    let cfg = ExperimentConfig {
        seeds: vec![],
        ..Default::default()
    };
    let r = run_experiment(&cfg).unwrap();
    assert!(r.records.is_empty());
    assert!(r.rcg.is_empty());
    assert!(r.timing.is_empty());
}
