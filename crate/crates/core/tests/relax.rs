use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxrelax::envelopes::mccormick;
use voxrelax::expr::{factored_form, parse_model, ExprDag, Model};
use voxrelax::interval::{propagate_constraints, BoundStore, Interval};
use voxrelax::lp::{solve, LinearSystem, LpStatus, RowSense, Tag};
use voxrelax::relax::*;
use voxrelax::voxel::VoxelConfig;

const EXP_BILINEAR: &str = "var x1, x2 in [0,1]; max exp(x1 - x2)*x1*x2;";
const LOG_TENT: &str =
    "var x1 in [0.36787944117144233, 2.718281828459045]; var x2 in [0,1]; max x1*x2;
    s.t. x2 - log(x1) <= 1; s.t. x2 + log(x1) <= 1;";

fn load(src: &str) -> (Model, ExprDag) {
    let m = parse_model(src).unwrap();
    let d = factored_form(&m).unwrap();
    (m, d)
}

fn cfg(mode: Mode, voxelizer: Voxelizer, obbt: bool) -> RelaxConfig {
    RelaxConfig {
        mode,
        voxelizer,
        obbt,
        ..Default::default()
    }
}

fn bound(src: &str, c: &RelaxConfig, primal: Option<f64>) -> f64 {
    let (_, d) = load(src);
    let o = relax_dag(&d, c, primal).unwrap();
    assert_eq!(o.status, LpStatus::Optimal);
    o.bound
}

#[test]
fn base_bound_is_valid_and_matches_fp_without_tightening() {
    let base = bound(
        EXP_BILINEAR,
        &cfg(Mode::Base, Voxelizer::BoundingBox, false),
        None,
    );
    let fp = bound(
        EXP_BILINEAR,
        &cfg(Mode::Fp, Voxelizer::BoundingBox, false),
        None,
    );
    assert!(base >= 1.0);
    assert!((base - fp).abs() < 1e-9);
}

#[test]
fn vr_is_at_least_as_tight_as_base() {
    for obbt in [false, true] {
        let base = bound(
            EXP_BILINEAR,
            &cfg(Mode::Base, Voxelizer::BoundingBox, obbt),
            Some(1.0),
        );
        for v in [
            Voxelizer::BoundingBox,
            Voxelizer::Quadtree,
            Voxelizer::Projection,
            Voxelizer::Split,
        ] {
            let vr = bound(EXP_BILINEAR, &cfg(Mode::Vr, v, obbt), Some(1.0));
            assert!(vr >= 1.0 - 1e-9);
            assert!(vr <= base + 1e-7, "{v:?}: {vr} > {base}");
        }
    }
}

#[test]
fn model_without_products_gives_identical_systems() {
    let (_, d) =
        load("var x in [0.5,2]; var y in [0,3]; min exp(x) + y^2 - log(x); s.t. x + y <= 3;");
    let store = propagate_constraints(&d, &BoundStore::from_dag(&d)).unwrap();
    let c = RelaxConfig::default();
    let base = build_base(&d, &store, &c).unwrap();
    let vr = build_vr(&d, &store, &c).unwrap();
    assert!(product_sites(&d).is_empty());
    assert_eq!(base, vr);
}

#[test]
fn bilinear_hull_over_a_box_is_mccormick() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let c = RelaxConfig {
        mode: Mode::Vr,
        voxelizer: Voxelizer::BoundingBox,
        n_b: 2,
        ..Default::default()
    };
    for _ in 0..100 {
        let a = rng.gen_range(-5.0..5.0);
        let b = a + rng.gen_range(0.1..4.0);
        let e = rng.gen_range(-5.0..5.0);
        let f = e + rng.gen_range(0.1..4.0);
        let src = format!("var x in [{a}, {b}]; var y in [{e}, {f}]; min x*y;");
        let (_, d) = load(&src);
        let store = BoundStore::from_dag(&d);
        let rel = build_base(&d, &store, &c).unwrap();
        let sites = product_sites(&d);
        assert_eq!(sites.len(), 1);
        let h = product_hull(&rel, &d, &store, &sites[0], &c).unwrap();
        let m = mccormick(Interval::new(a, b), Interval::new(e, f));
        assert!(
            h.facets.same_facets(&m, 1e-9),
            "box [{a}, {b}] x [{e}, {f}]"
        );
    }
}

#[test]
fn voxelized_log_tent_beats_one_voxel() {
    let one = bound(
        LOG_TENT,
        &cfg(Mode::Vr, Voxelizer::BoundingBox, false),
        None,
    );
    let vox = bound(LOG_TENT, &cfg(Mode::Vr, Voxelizer::Projection, false), None);
    assert!(vox >= 1.0 - 1e-9);
    assert!(one - vox >= 1e-4, "{vox} vs {one}");
}

#[test]
fn exp_operand_is_a_function_factor() {
    let (_, d) = load(EXP_BILINEAR);
    let store = propagate_constraints(&d, &BoundStore::from_dag(&d)).unwrap();
    let sites = product_sites(&d);
    let kinds: Vec<bool> = sites
        .iter()
        .flat_map(|s| s.operands)
        .map(|id| {
            matches!(
                classify(&d, &store, id, 5).unwrap(),
                Factor::Function { .. }
            )
        })
        .collect();
    assert_eq!(kinds.iter().filter(|k| **k).count(), 1);
}

fn one_var(lo: f64, hi: f64, cost: f64) -> LinearSystem {
    let mut s = LinearSystem::new();
    s.add_var("x", lo, hi);
    s.set_objective([(0, cost)], 0.0);
    s
}

#[test]
fn duality_reduction_formula() {
    // min -2x on [0, 5]: x sits at 5 with reduced cost -2
    let s = one_var(0.0, 5.0, -2.0);
    let sol = solve(&s);
    assert_eq!(sol.objective, -10.0);
    let b = duality_range_reduction(&s, &sol, -9.0);
    assert_eq!(b[0], Interval::new(4.5, 5.0));
    let b = duality_range_reduction(&s, &sol, -10.0);
    assert_eq!(b[0], Interval::new(5.0, 5.0));
    // lower bound side
    let s = one_var(1.0, 4.0, 3.0);
    let sol = solve(&s);
    let b = duality_range_reduction(&s, &sol, sol.objective + 1.5);
    assert_eq!(b[0], Interval::new(1.0, 1.5));
}

#[test]
fn obbt_on_half_plane() {
    let mut s = LinearSystem::new();
    s.add_var("x", 0.0, 2.0);
    s.add_var("y", 0.0, 2.0);
    s.add_row(
        "c",
        [(0, 1.0), (1, 1.0)],
        RowSense::Le,
        1.0,
        Tag::ModelLinear,
    );
    let b = obbt(&s, &[0, 1], None);
    for iv in &b {
        assert_eq!(iv.lo, 0.0);
        assert!(iv.hi >= 1.0 && iv.hi < 1.0 + 1e-8);
    }
    // with an objective cut the ranges can only shrink
    s.set_objective([(0, -1.0), (1, -1.0)], 0.0);
    let cut = obbt(&s, &[0, 1], Some(-0.5));
    for (a, c) in b.iter().zip(&cut) {
        assert!(c.is_subset_of(a));
    }
}

fn box_samples(m: &Model, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < n {
        let x: Vec<f64> = m.vars.iter().map(|v| rng.gen_range(v.lo..=v.hi)).collect();
        if m.is_feasible(&x, 0.0) {
            out.push(x);
        }
    }
    out
}

#[test]
fn relaxations_contain_lifted_feasible_points() {
    for src in [EXP_BILINEAR, LOG_TENT] {
        let (m, d) = load(src);
        let pts = box_samples(&m, 1000, 9);
        for c in [
            cfg(Mode::Fp, Voxelizer::BoundingBox, false),
            cfg(Mode::Base, Voxelizer::BoundingBox, true),
            cfg(Mode::Vr, Voxelizer::Projection, true),
            cfg(Mode::Vr, Voxelizer::Quadtree, true),
            RelaxConfig {
                voxel: VoxelConfig {
                    epsilon: 0.05,
                    ..Default::default()
                },
                ..cfg(Mode::Vr, Voxelizer::Split, true)
            },
        ] {
            let o = relax_dag(&d, &c, None).unwrap();
            let rel = &o.relaxation;
            for x in &pts {
                let z = rel.lift(&d, x);
                assert!(rel.sys.max_violation(&z) <= 1e-7, "{:?} at {x:?}", c.mode);
            }
        }
    }
}

#[test]
fn extra_rounds_never_loosen() {
    let one = bound(
        LOG_TENT,
        &cfg(Mode::Vr, Voxelizer::Projection, true),
        Some(1.0),
    );
    let three = bound(
        LOG_TENT,
        &RelaxConfig {
            iterations: 3,
            ..cfg(Mode::Vr, Voxelizer::Projection, true)
        },
        Some(1.0),
    );
    assert!(three <= one + 1e-9);
    assert!(three >= 1.0 - 1e-9);
}

#[test]
fn invalid_config_is_rejected() {
    let (_, d) = load(EXP_BILINEAR);
    let c = RelaxConfig {
        n_b: 1,
        ..Default::default()
    };
    assert!(matches!(
        relax_dag(&d, &c, None),
        Err(RelaxError::InvalidConfig(_))
    ));
}

#[test]
fn unbounded_operand_is_reported() {
    let (_, d) = load("var x in [0,1]; var y in [0, inf]; min x*y;");
    let r = relax_dag(&d, &RelaxConfig::with_mode(Mode::Base), None);
    assert!(
        matches!(r, Err(RelaxError::UnboundedOperand { .. })),
        "{r:?}"
    );
}

#[test]
fn split_voxelizer_tightens_the_log_tent() {
    let coarse = RelaxConfig {
        voxel: VoxelConfig {
            epsilon: 0.1,
            ..Default::default()
        },
        ..cfg(Mode::Vr, Voxelizer::Split, false)
    };
    let fine = RelaxConfig {
        voxel: VoxelConfig {
            epsilon: 0.025,
            ..Default::default()
        },
        ..coarse
    };
    let proj = bound(LOG_TENT, &cfg(Mode::Vr, Voxelizer::Projection, false), None);
    let c = bound(LOG_TENT, &coarse, None);
    let f = bound(LOG_TENT, &fine, None);
    assert!(f >= 1.0 - 1e-9);
    assert!(f <= c + 1e-9 && c < proj, "{f} {c} {proj}");
}
