mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tas_core::semantics::{build_tlts, export_json, Bounds};
use tas_core::trust::SpecTrustModel;

fn small_bounds() -> Bounds {
    Bounds {
        max_states: 5000,
        max_depth: 40,
        opinion_cap: 2,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn explored_systems_respect_the_rules(seed in any::<u64>()) {
        let spec = support::random_spec(&mut ChaCha8Rng::seed_from_u64(seed));
        let model = SpecTrustModel::from_spec(&spec).unwrap();
        let tlts = build_tlts(&spec, &model, small_bounds(), 1).unwrap();
        prop_assert!(tlts.state_count() <= 5000);
        if let Err(e) = support::semantic_invariants(&spec, &tlts, &model) {
            return Err(TestCaseError::fail(e));
        }
    }

    #[test]
    fn thread_count_does_not_change_the_result(seed in any::<u64>()) {
        let spec = support::random_spec(&mut ChaCha8Rng::seed_from_u64(seed));
        let model = SpecTrustModel::from_spec(&spec).unwrap();
        let one = build_tlts(&spec, &model, small_bounds(), 1).unwrap();
        let again = build_tlts(&spec, &model, small_bounds(), 1).unwrap();
        let four = build_tlts(&spec, &model, small_bounds(), 4).unwrap();
        prop_assert_eq!(export_json(&one), export_json(&again));
        prop_assert_eq!(export_json(&one), export_json(&four));
    }

    #[test]
    fn looser_bounds_do_not_change_a_complete_exploration(seed in any::<u64>()) {
        let spec = support::random_spec(&mut ChaCha8Rng::seed_from_u64(seed));
        let model = SpecTrustModel::from_spec(&spec).unwrap();
        let tight = build_tlts(&spec, &model, small_bounds(), 1).unwrap();
        prop_assume!(!tight.any_truncated());
        let loose = Bounds { max_states: 50_000, max_depth: 10_000, opinion_cap: 2 };
        let wide = build_tlts(&spec, &model, loose, 1).unwrap();
        prop_assert!(!wide.any_truncated());
        prop_assert_eq!(tight.states(), wide.states());
        for s in 0..tight.state_count() {
            prop_assert_eq!(tight.successors(s), wide.successors(s));
        }
    }
}

#[test]
fn the_generator_produces_varied_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut syncs = 0;
    let mut truncated = 0;
    for _ in 0..40 {
        let spec = support::random_spec(&mut rng);
        let model = SpecTrustModel::from_spec(&spec).unwrap();
        let t = build_tlts(&spec, &model, small_bounds(), 1).unwrap();
        syncs += t.transitions().filter(|(_, e)| e.rule.is_sync()).count().min(1);
        truncated += usize::from(t.any_truncated());
    }
    assert!(syncs >= 12, "only {syncs} systems had a synchronization");
    assert!(truncated < 40);
}
