use voxrelax::golden::*;

#[test]
fn all_reference_values_hold() {
    for c in run_golden(&GoldenValues::default()) {
        assert!(c.passed, "{}: {}", c.name, c.detail);
    }
}

#[test]
fn every_perturbation_is_caught() {
    for field in GoldenValues::FIELDS {
        let mut g = GoldenValues::default();
        assert!(g.perturb(field, 1e-3));
        let failed: Vec<&str> = run_golden(&g)
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect();
        assert!(!failed.is_empty(), "perturbing {field} went unnoticed");
    }
    assert!(!GoldenValues::default().perturb("no-such-field", 1.0));
}

#[test]
fn reference_values_are_ordered() {
    let (x1, x2) = (1.5, 1.5);
    assert!(r_pentagon(x1, x2) < r_limit(x1, x2));
    assert!(r_limit(x1, x2) < r_box(x1, x2));
    assert!(r_box(x1, x2) < x1 * x1 * x2 * x2);
    assert!((projected_square_underestimator(x1, x2).unwrap() - r_box(x1, x2)).abs() < 1e-9);
}

#[test]
fn chain_mean_recovers_the_start() {
    let row = absorption_row(&staircase_region(), &[2.0, 1.0]).unwrap();
    let total: f64 = row.iter().map(|(_, w)| w).sum();
    assert!((total - 1.0).abs() < 1e-12);
}
