use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use voxrelax::lp::{export_lp, parse_lp, solve, LinearSystem, LpStatus, RowSense, Tag};

#[test]
fn maximize_sum_on_simplex() {
    let mut s = LinearSystem::new();
    let a = s.add_var("x1", 0.0, f64::INFINITY);
    let b = s.add_var("x2", 0.0, f64::INFINITY);
    s.add_row(
        "cap",
        [(a, 1.0), (b, 1.0)],
        RowSense::Le,
        1.0,
        Tag::ModelLinear,
    );
    s.set_objective([(a, -1.0), (b, -1.0)], 0.0);
    let r = solve(&s);
    assert_eq!(r.status, LpStatus::Optimal);
    assert!((r.objective + 1.0).abs() < 1e-12);
    assert!((r.duals[0] + 1.0).abs() < 1e-12);
}

#[test]
fn contradictory_bounds_are_infeasible() {
    let mut s = LinearSystem::new();
    let x = s.add_var("x", f64::NEG_INFINITY, f64::INFINITY);
    s.add_row("a", [(x, 1.0)], RowSense::Le, 0.0, Tag::ModelLinear);
    s.add_row("b", [(x, 1.0)], RowSense::Ge, 1.0, Tag::ModelLinear);
    assert_eq!(solve(&s).status, LpStatus::Infeasible);
}

#[test]
fn unbounded_direction_is_reported() {
    let mut s = LinearSystem::new();
    let x = s.add_var("x", 0.0, f64::INFINITY);
    let y = s.add_var("y", 0.0, 1.0);
    s.add_row(
        "a",
        [(x, 1.0), (y, -1.0)],
        RowSense::Ge,
        0.0,
        Tag::ModelLinear,
    );
    s.set_objective([(x, -1.0)], 0.0);
    assert_eq!(solve(&s).status, LpStatus::Unbounded);
}

#[test]
fn degenerate_vertex_terminates() {
    // many constraints through the origin
    let mut s = LinearSystem::new();
    let x = s.add_var("x", -1.0, 1.0);
    let y = s.add_var("y", -1.0, 1.0);
    for k in 0..40 {
        let t = k as f64 * 0.07;
        s.add_row(
            format!("d{k}"),
            [(x, t.cos()), (y, t.sin())],
            RowSense::Le,
            0.0,
            Tag::ModelLinear,
        );
    }
    s.set_objective([(x, 1.0), (y, 0.3)], 0.0);
    let r = solve(&s);
    assert_eq!(r.status, LpStatus::Optimal);
    assert!(s.max_violation(&r.x) < 1e-9);
}

/// Minimum over all vertices of the polytope, by enumeration.
fn brute_force(s: &LinearSystem) -> Option<f64> {
    let n = s.n_vars();
    let mut cons: Vec<(Vec<f64>, f64)> = Vec::new();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cons.push((e.clone(), s.lo[j]));
        cons.push((e, s.hi[j]));
    }
    for r in &s.rows {
        let mut g = vec![0.0; n];
        for &(j, a) in &r.coefs {
            g[j] = a;
        }
        cons.push((g, r.rhs));
    }
    let mut best: Option<f64> = None;
    let k = cons.len();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a = DMatrix::from_fn(n, n, |i, j| cons[idx[i]].0[j]);
        let b = DVector::from_fn(n, |i, _| cons[idx[i]].1);
        if let Some(sol) = a.clone().lu().solve(&b) {
            let x: Vec<f64> = sol.iter().copied().collect();
            if (a * &sol - &b).amax() < 1e-9 && s.max_violation(&x) < 1e-9 {
                let v = s.objective_value(&x);
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < k - n + i {
                idx[i] += 1;
                for j in i + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn system(n: usize, rows: &[(Vec<f64>, f64, u8)], cost: &[f64]) -> LinearSystem {
    let mut s = LinearSystem::new();
    for j in 0..n {
        s.add_var(format!("x{j}"), -3.0, 3.0);
    }
    for (i, (a, b, k)) in rows.iter().enumerate() {
        let sense = match k % 3 {
            0 => RowSense::Le,
            1 => RowSense::Ge,
            _ => RowSense::Eq,
        };
        s.add_row(
            format!("r{i}"),
            a.iter().copied().enumerate(),
            sense,
            *b,
            Tag::ModelLinear,
        );
    }
    s.set_objective(cost.iter().copied().enumerate(), 0.0);
    s
}

fn lp_case() -> impl Strategy<Value = LinearSystem> {
    (2usize..=4).prop_flat_map(|n| {
        (
            prop::collection::vec(
                (prop::collection::vec(-5i32..=5, n), -6i32..=6, 0u8..3),
                1..7,
            ),
            prop::collection::vec(-4i32..=4, n),
        )
            .prop_map(move |(rows, cost)| {
                let rows: Vec<(Vec<f64>, f64, u8)> = rows
                    .into_iter()
                    .map(|(a, b, k)| (a.into_iter().map(f64::from).collect(), f64::from(b), k))
                    .collect();
                let cost: Vec<f64> = cost.into_iter().map(f64::from).collect();
                system(n, &rows, &cost)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn matches_vertex_enumeration(s in lp_case()) {
        let r = solve(&s);
        match brute_force(&s) {
            None => prop_assert_eq!(r.status, LpStatus::Infeasible),
            Some(v) => {
                prop_assert_eq!(r.status, LpStatus::Optimal);
                prop_assert!((r.objective - v).abs() <= 1e-7 * (1.0 + v.abs()), "{} vs {}", r.objective, v);
                prop_assert!(s.max_violation(&r.x) <= 1e-7);
                // weak duality, and the gap closes at the optimum
                prop_assert!(r.dual_bound <= r.objective + 1e-7 * (1.0 + v.abs()));
                prop_assert!((r.dual_bound - r.objective).abs() <= 1e-7 * (1.0 + v.abs()));
                for (row, &y) in s.rows.iter().zip(&r.duals) {
                    match row.sense {
                        RowSense::Le => prop_assert!(y <= 1e-9),
                        RowSense::Ge => prop_assert!(y >= -1e-9),
                        RowSense::Eq => {}
                    }
                }
            }
        }
    }

    #[test]
    fn export_round_trip_keeps_optimum(s in lp_case()) {
        let a = solve(&s);
        let b = solve(&parse_lp(&export_lp(&s)).unwrap());
        prop_assert_eq!(a.status, b.status);
        if a.is_optimal() {
            prop_assert!((a.objective - b.objective).abs() <= 1e-9 * (1.0 + a.objective.abs()));
        }
    }
}
