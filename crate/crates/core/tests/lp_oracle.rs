use proptest::prelude::*;

use ctxlab::lp::{solve, LinearProgram, LpStatus};
use ctxlab::Rational;

fn r(n: i64) -> Rational {
    Rational::from_integer(n)
}

/// Constraint rows `a·x <= b` in the plane, including `-x <= 0` and `-y <= 0`.
type Row = ([i64; 2], i64);

/// Best objective over vertices of the polygon, by intersecting every pair of
/// boundary lines with Cramer's rule. `None` when the polygon is empty.
fn vertex_oracle(c: [i64; 2], rows: &[Row]) -> Option<Rational> {
    let mut all = rows.to_vec();
    all.push(([-1, 0], 0));
    all.push(([0, -1], 0));
    let mut best: Option<Rational> = None;
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            let ([a, b], e) = all[i];
            let ([cc, d], f) = all[j];
            let det = a * d - b * cc;
            if det == 0 {
                continue;
            }
            let x = Rational::new(e * d - b * f, det);
            let y = Rational::new(a * f - e * cc, det);
            let inside = all.iter().all(|([p, q], h)| &(&r(*p) * &x) + &(&r(*q) * &y) <= r(*h));
            if inside {
                let v = &(&r(c[0]) * &x) + &(&r(c[1]) * &y);
                if best.as_ref().is_none_or(|b| &v > b) {
                    best = Some(v);
                }
            }
        }
    }
    best
}

fn program(c: [i64; 2], rows: &[Row]) -> LinearProgram {
    let mut lp = LinearProgram::nonnegative(2);
    lp.objective = vec![r(c[0]), r(c[1])];
    for ([a, b], h) in rows {
        lp.add_inequality(vec![(0, r(*a)), (1, r(*b))], r(*h));
    }
    lp
}

fn row() -> impl Strategy<Value = Row> {
    ([-5i64..=5, -5i64..=5], -6i64..=12).prop_map(|(a, b)| (a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn bounded_programs_match_vertex_enumeration(
        c in [-4i64..=4, -4i64..=4],
        mut rows in proptest::collection::vec(row(), 0..5),
    ) {
        // a box keeps every program bounded
        rows.push(([1, 0], 7));
        rows.push(([0, 1], 7));
        let lp = program(c, &rows);
        let res = solve(&lp).unwrap();
        match vertex_oracle(c, &rows) {
            Some(best) => {
                prop_assert_eq!(res.status, LpStatus::Optimal);
                let x = res.primal.clone().unwrap();
                prop_assert!(lp.is_feasible(&x));
                prop_assert_eq!(lp.objective_value(&x), best.clone());
                let dual = res.dual.clone().unwrap();
                prop_assert!(dual.is_feasible(&lp));
                prop_assert_eq!(dual.value(&lp), best);
            }
            None => {
                prop_assert_eq!(res.status, LpStatus::Infeasible);
                prop_assert!(res.certificate.unwrap().verify(&lp));
            }
        }
    }

    #[test]
    fn solving_twice_gives_identical_results(
        c in [-4i64..=4, -4i64..=4],
        rows in proptest::collection::vec(row(), 1..5),
    ) {
        let lp = program(c, &rows);
        prop_assert_eq!(solve(&lp).unwrap(), solve(&lp).unwrap());
    }
}

#[test]
fn degenerate_tie_terminates() {
    let lp = program([1, 1], &[([1, 1], 1)]);
    let res = solve(&lp).unwrap();
    assert_eq!(res.status, LpStatus::Optimal);
    assert_eq!(res.objective_value, Some(r(1)));
}

#[test]
fn unbounded_direction_is_reported() {
    let lp = program([1, 1], &[([1, -1], 1)]);
    let res = solve(&lp).unwrap();
    assert_eq!(res.status, LpStatus::Unbounded);
    let ray = res.ray.unwrap();
    assert!(&ray[0] + &ray[1] > r(0));
    assert!(&ray[0] - &ray[1] <= r(0));
}

#[test]
fn float_mode_agrees_on_a_small_program() {
    let lp = program([3, 2], &[([1, 1], 4), ([1, 3], 6)]);
    let exact = solve(&lp).unwrap().objective_value.unwrap();
    let float = solve(&lp.map(|v| v.to_f64())).unwrap().objective_value.unwrap();
    assert_eq!(exact, r(12));
    assert!((float - 12.0).abs() < 1e-9);
}
