use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ctxlab::ce::{ce_check, nc_check};
use ctxlab::instances::{disjoint_triples, partition_instance, random_pair_measure, random_sum_rule_table, restriction, sum_rule_space};
use ctxlab::probability::{preset_box, BoxPreset, JointDistribution, ProbabilityFunction};
use ctxlab::qm::{qm_feasible, sample_qm_vertex, sorkin_residual, verify_measure, PairMeasure, QmMethod, QmStatus, Regime};
use ctxlab::scenario::{build_marginal_scenario, preset_scenario, ExclusivityMode, Outcome, Preset, Scenario, Support};
use ctxlab::{Limits, Rational};

fn preset(name: &str) -> Arc<Scenario> {
    Arc::new(preset_scenario(&name.parse::<Preset>().unwrap()).unwrap())
}

/// Closed form of the pair extension:
/// `μ(A) = Σ_{i<j∈A} μ{i,j} − (|A| − 2) Σ_{i∈A} μ{i}`.
fn extension(sing: &[Rational], pair: impl Fn(usize, usize) -> Rational, members: &[usize]) -> Rational {
    let k = members.len() as i64;
    match k {
        0 => Rational::zero(),
        1 => sing[members[0]].clone(),
        _ => {
            let mut pairs = Rational::zero();
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    pairs = &pairs + &pair(i, j);
                }
            }
            let singles: Rational = members.iter().map(|&i| sing[i].clone()).sum();
            &pairs - &(&Rational::from_integer(k - 2) * &singles)
        }
    }
}

fn members_of(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pair_measures_obey_the_sum_rule(seed in any::<u64>(), n in 1usize..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pm = random_pair_measure(&mut rng, n);
        for (a, b, c) in disjoint_triples(n).step_by(7) {
            let res = sorkin_residual(|o| pm.mu(o), &a, &b, &c).unwrap();
            prop_assert!(res.is_zero());
        }
    }

    #[test]
    fn mu_matches_the_closed_form(seed in any::<u64>(), n in 1usize..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pm = random_pair_measure(&mut rng, n);
        for mask in 0..1usize << n {
            let m = members_of(mask, n);
            let want = extension(pm.sing(), |i, j| pm.pair(i, j).clone(), &m);
            prop_assert_eq!(pm.mu(&Outcome::new(m.iter().copied())).unwrap(), want);
        }
    }

    #[test]
    fn pairwise_additive_partitions_are_jointly_additive(seed in any::<u64>()) {
        let inst = partition_instance(seed, 10);
        prop_assert!(inst.pairwise_additive().unwrap());
        prop_assert!(inst.jointly_additive().unwrap());
    }

    #[test]
    fn classical_tables_admit_additive_measures(weights in proptest::collection::vec(0u32..5, 11)) {
        let s = preset("pentagon");
        let total: u32 = weights.iter().sum();
        prop_assume!(total > 0);
        let w: Vec<Rational> = weights.iter().map(|&x| Rational::new(i64::from(x), i64::from(total))).collect();
        let p = JointDistribution::new(w.clone()).unwrap().marginal(s.clone()).unwrap();
        let pm = PairMeasure::additive(w);
        prop_assert!(verify_measure(&pm, &p, Regime::Exhaustive, &Limits::default()).is_ok());
        let r = qm_feasible(&p, QmMethod::Enumerate, &Limits::default()).unwrap();
        prop_assert_eq!(r.status, QmStatus::Feasible);
    }
}

#[test]
fn sum_rule_tables_are_pair_extensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=5 {
        let basis = sum_rule_space(n);
        for _ in 0..10 {
            let table = random_sum_rule_table(&basis, &mut rng);
            let pm = restriction(&table, n);
            for (mask, v) in table.iter().enumerate() {
                let m = members_of(mask, n);
                assert_eq!(&extension(pm.sing(), |i, j| pm.pair(i, j).clone(), &m), v, "n = {n}, mask {mask:b}");
            }
        }
    }
}

#[test]
fn sum_rule_fails_for_a_genuine_triple_term() {
    // μ(A) = [A ⊇ {0,1,2}] has no pair part and breaks the rule on the singletons
    let mu = |o: &Outcome| -> ctxlab::Result<Rational> {
        Ok(if [0, 1, 2].iter().all(|&i| o.contains(i)) { Rational::one() } else { Rational::zero() })
    };
    let (a, b, c) = (Outcome::new([0]), Outcome::new([1]), Outcome::new([2]));
    assert_eq!(sorkin_residual(mu, &a, &b, &c).unwrap(), Rational::one());
    assert!(sorkin_residual(mu, &a, &a, &c).is_err());
}

fn anticorrelated_triangle() -> ProbabilityFunction {
    let s = Arc::new(build_marginal_scenario("triangle", 3, &[vec![0, 1], vec![1, 2], vec![0, 2]], Support::All).unwrap());
    ProbabilityFunction::from_fn(s.clone(), |id| {
        let m = s.measurements_containing(id)[0];
        let c = s.cell_ids(m).iter().position(|&o| o == id).unwrap();
        let bits = s.cell_assignment(m, c).unwrap();
        if bits == "01" || bits == "10" {
            Rational::new(1, 2)
        } else {
            Rational::zero()
        }
    })
}

#[test]
fn coarse_exclusivity_can_fail_where_a_joint_measure_exists() {
    // the implication from joint measures to CE rests on exclusivity within
    // a single measurement; the hull-based notion also links 01 on {1,2}
    // with 10 on {2,3}, and the anticorrelated triangle then sums to 3/2
    let p = anticorrelated_triangle();
    p.ensure_valid().unwrap();
    let coarse = ce_check(&p, 1, ExclusivityMode::Coarse).unwrap();
    assert!(!coarse.holds);
    assert_eq!(coarse.worst_sum, Rational::new(3, 2));
    assert!(ce_check(&p, 1, ExclusivityMode::Strict).unwrap().holds);
    let r = qm_feasible(&p, QmMethod::Enumerate, &Limits::default()).unwrap();
    assert_eq!(r.status, QmStatus::Feasible);
    verify_measure(r.witness.as_ref().unwrap(), &p, Regime::Exhaustive, &Limits::default()).unwrap();
}

/// Three elements, measurements `{i} | rest`, with every singleton at zero.
fn complementary_pairs() -> ProbabilityFunction {
    let cells = (0..3).map(|i| vec![Outcome::new([i]), Outcome::new((0..3).filter(|&j| j != i))]).collect();
    let s = Arc::new(Scenario::new("complements", 3, cells, None).unwrap());
    let sc = s.clone();
    ProbabilityFunction::from_fn(s, |id| if sc.outcome(id).len() == 2 { Rational::one() } else { Rational::zero() })
}

#[test]
fn pairs_forcing_excess_mass_have_no_joint_measure() {
    let p = complementary_pairs();
    p.ensure_valid().unwrap();
    // μ{i} = 0 and μ{j,k} = 1 put the sum rule on the singletons at 0 − 3 + μ(Ξ),
    // so μ(Ξ) = 3 against normalisation 1
    let table = |o: &Outcome| -> ctxlab::Result<Rational> {
        Ok(match o.len() {
            2 => Rational::one(),
            3 => Rational::one(),
            _ => Rational::zero(),
        })
    };
    let res = sorkin_residual(table, &Outcome::new([0]), &Outcome::new([1]), &Outcome::new([2])).unwrap();
    assert_eq!(res, Rational::from_integer(-2));
    assert!(ce_check(&p, 1, ExclusivityMode::Coarse).unwrap().holds);
    for method in [QmMethod::Enumerate, QmMethod::Rowgen] {
        let r = qm_feasible(&p, method, &Limits::default()).unwrap();
        assert_eq!(r.status, QmStatus::Infeasible);
        assert!(r.witness.is_none());
        let cert = r.certificate.expect("certificate");
        assert!(cert.verify(&r.program));
        assert_eq!(r.rows.len(), r.program.equalities.len() + r.program.inequalities.len());
    }
}

#[test]
fn pr_box_has_a_joint_measure_but_no_joint_distribution() {
    let s = preset("chsh");
    let pr = preset_box(&BoxPreset::<Rational>::Pr, s).unwrap();
    assert!(!nc_check(&pr, &Limits::default()).unwrap().feasible);
    let r = qm_feasible(&pr, QmMethod::Enumerate, &Limits::default()).unwrap();
    assert_eq!(r.status, QmStatus::Feasible);
    verify_measure(r.witness.as_ref().unwrap(), &pr, Regime::Exhaustive, &Limits::default()).unwrap();
}

#[test]
fn measure_vertices_obey_ce_on_small_scenarios() {
    let limits = Limits::default();
    for name in ["specker", "pentagon", "cycle(4)"] {
        let s = preset(name);
        for seed in 0..15 {
            let (p, pm) = sample_qm_vertex(s.clone(), seed, &limits).unwrap();
            verify_measure(&pm, &p, Regime::Exhaustive, &limits).unwrap();
            let r = ce_check(&p, 1, ExclusivityMode::Strict).unwrap();
            assert!(r.holds, "{name} seed {seed}: clique sum {}", r.worst_sum);
        }
    }
}

#[test]
fn vertex_sampling_is_deterministic() {
    let s = preset("pentagon");
    let a = sample_qm_vertex(s.clone(), 5, &Limits::default()).unwrap();
    let b = sample_qm_vertex(s, 5, &Limits::default()).unwrap();
    assert_eq!(a.0.values(), b.0.values());
    assert_eq!(a.1, b.1);
}
