mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tas_core::ttl::{check, AggregateFn, Formula, Relation, TrustVariable, Verdict};

const AGENTS: [&str; 3] = ["A0", "A1", "A2"];

fn satisfying(v: &[bool]) -> Vec<usize> {
    v.iter().enumerate().filter(|(_, &b)| b).map(|(s, _)| s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn checker_agrees_with_path_search(seed in any::<u64>(), n in 1usize..=60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ts = support::random_ts(&mut rng, n, false);
        let phi = support::random_formula(&mut rng, 4, &AGENTS, &support::ACTIONS);
        let r = check(&ts, &phi).unwrap();
        let want = support::oracle(&ts, &phi);
        prop_assert_eq!(&r.satisfying, &satisfying(&want), "{}", phi);
        prop_assert!(!r.bounded);
        prop_assert_eq!(r.verdict, if want[0] { Verdict::True } else { Verdict::False });
    }

    #[test]
    fn printed_formulas_check_the_same(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ts = support::random_ts(&mut rng, 30, false);
        let phi = support::random_formula(&mut rng, 4, &AGENTS, &support::ACTIONS);
        let reparsed = tas_core::ttl::parse_formula(&phi.to_string()).unwrap();
        prop_assert_eq!(check(&ts, &phi).unwrap().satisfying, check(&ts, &reparsed).unwrap().satisfying);
    }

    #[test]
    fn ef_and_ag_are_dual(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ts = support::random_ts(&mut rng, 40, false);
        let phi = support::random_formula(&mut rng, 3, &AGENTS, &support::ACTIONS);
        let lhs = check(&ts, &Formula::not(Formula::ef(phi.clone()))).unwrap();
        let rhs = check(&ts, &Formula::ag(Formula::not(phi))).unwrap();
        prop_assert_eq!(lhs.satisfying, rhs.satisfying);
    }

    #[test]
    fn raising_a_lower_bound_shrinks_the_satisfying_set(seed in any::<u64>(), a in 0usize..5, b in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ts = support::random_ts(&mut rng, 40, false);
        let (lo, hi) = (support::TRUST_GRID[a.min(b)], support::TRUST_GRID[a.max(b)]);
        let var = TrustVariable::Model { rater: "A0".into(), target: "A1".into() };
        for rel in [Relation::Ge, Relation::Gt] {
            let at = |k| check(&ts, &Formula::Trust { var: var.clone(), rel, k }).unwrap().satisfying;
            let (weak, strong) = (at(lo), at(hi));
            prop_assert!(strong.iter().all(|s| weak.contains(s)));
        }
        for rel in [Relation::Le, Relation::Lt] {
            let at = |k| check(&ts, &Formula::Trust { var: var.clone(), rel, k }).unwrap().satisfying;
            let (strong, weak) = (at(lo), at(hi));
            prop_assert!(strong.iter().all(|s| weak.contains(s)));
        }
    }

    #[test]
    fn witnesses_are_shortest_paths(seed in any::<u64>(), n in 2usize..=80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ts = support::random_ts(&mut rng, n, false);
        let inner = support::random_formula(&mut rng, 2, &AGENTS, &support::ACTIONS);
        let sat = support::oracle(&ts, &inner);

        let r = check(&ts, &Formula::ef(inner.clone())).unwrap();
        match support::distance_to(&ts, &sat) {
            Some(d) => {
                let w = r.witness.expect("EF holds, so a witness exists");
                prop_assert!(support::witness_is_path(&ts, &w));
                prop_assert!(sat[w.end()]);
                prop_assert_eq!(w.steps.len(), d);
            }
            None => prop_assert!(r.witness.is_none()),
        }

        let r = check(&ts, &Formula::ag(inner)).unwrap();
        let bad: Vec<bool> = sat.iter().map(|b| !b).collect();
        if r.verdict == Verdict::False {
            let w = r.witness.expect("a failed AG has a counterexample");
            prop_assert!(support::witness_is_path(&ts, &w));
            prop_assert!(bad[w.end()]);
            prop_assert_eq!(Some(w.steps.len()), support::distance_to(&ts, &bad));
        }
    }

    #[test]
    fn definite_verdicts_on_truncated_systems_match_the_explored_part(seed in any::<u64>(), n in 2usize..=60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ts = support::random_ts(&mut rng, n, true);
        let phi = support::random_formula(&mut rng, 3, &AGENTS, &support::ACTIONS);
        let r = check(&ts, &phi).unwrap();
        let plain = support::oracle(&ts, &phi);
        prop_assert_eq!(&r.satisfying, &satisfying(&plain));
        match r.verdict {
            Verdict::True | Verdict::TrueWithinBounds => prop_assert!(plain[0]),
            Verdict::False | Verdict::FalseWithinBounds => prop_assert!(!plain[0]),
        }
        if !ts.truncated.iter().any(|&t| t) {
            prop_assert!(matches!(r.verdict, Verdict::True | Verdict::False));
        }
    }
}

#[test]
fn undefined_aggregates_fail_every_comparison() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ts = support::random_ts(&mut rng, 50, false);
    let var = TrustVariable::Aggregate { f: AggregateFn::Min, rater: "A1".into(), target: "A2".into() };
    let ge = check(&ts, &Formula::Trust { var: var.clone(), rel: Relation::Ge, k: 0.0 }).unwrap();
    let lt = check(&ts, &Formula::Trust { var, rel: Relation::Lt, k: 0.0 }).unwrap();
    let covered = ge.satisfying.len() + lt.satisfying.len();
    assert!(covered < 50, "some states should leave the variable undefined");
}
