use std::sync::Arc;

use proptest::prelude::*;
use statrs::distribution::{Binomial, Discrete};

use stabcheck_core::adversarial::{AdversarialWrap, Trigger};
use stabcheck_core::binom_test::{
    binomial_thresholds, power_closed_form, rejection_probability, single_run, BinomialTestConfig,
    PowerSetup,
};
use stabcheck_core::bounds::{theorem1_bound, PowerBoundInputs, SpaceSize};
use stabcheck_core::harness::{ModelAccess, TestTrace};
use stabcheck_core::stability::{estimate_delta_star_exact, perturbation};
use stabcheck_core::zoo::{KnnLearner, SeedThresholdLearner};
use stabcheck_core::{sample_dataset, Dataset, FiniteDistribution, Learner, RandomSeed, Space};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn thresholds_have_exact_size(k in 1u64..40, delta in 0.01f64..0.6, alpha in 0.01f64..0.3) {
        let th = binomial_thresholds(k, delta, alpha).unwrap();
        let b = Binomial::new(delta, k).unwrap();
        // P(B < k*) + a* P(B = k*) computed independently
        let below: f64 = (0..th.k_star).map(|i| b.pmf(i)).sum();
        let size = below + th.a_star * b.pmf(th.k_star);
        prop_assert!((size - alpha).abs() < 1e-9);
        prop_assert!((rejection_probability(&th, k, delta) - alpha).abs() < 1e-9);
    }

    #[test]
    fn closed_form_power_below_ceiling(
        k in 1u64..30,
        delta in 0.01f64..0.5,
        frac in 0.0f64..=1.0,
        alpha in 0.01f64..0.2,
    ) {
        let n = 4u64;
        let ds = delta * frac;
        let p = power_closed_form(alpha, ds, delta, k).unwrap().value;
        let inp = PowerBoundInputs {
            alpha,
            epsilon: 0.1,
            delta,
            delta_star: ds,
            n,
            n_labeled: k * n,
            n_unlabeled: k,
            b_train: SpaceSize::Finite(k * n),
            b_eval: SpaceSize::Infinite,
            x_size: SpaceSize::Infinite,
            y_size: SpaceSize::Infinite,
        };
        prop_assert!(p <= theorem1_bound(&inp).unwrap().minimum * (1.0 + 1e-12));
    }

    #[test]
    fn seed_threshold_instability_is_rho0(rho0 in 0.0f64..=1.0) {
        let dist = FiniteDistribution::uniform(Space::new(2, 2).unwrap());
        let l = SeedThresholdLearner::new(rho0).unwrap();
        let e = estimate_delta_star_exact(&l, &dist, 2, 0.5).unwrap();
        prop_assert!((e.point_estimate - rho0).abs() < 1e-12);
    }

    #[test]
    fn untriggered_wrap_matches_base(pairs in proptest::collection::vec((0u32..2, 0u32..2), 1..5)) {
        // feature 2 and response 2 never occur, so the wrap never fires
        let space = Space::new(3, 3).unwrap();
        let data = Dataset::from_pairs(space, &pairs).unwrap();
        let base = Arc::new(KnnLearner::new(1).unwrap());
        let seed = RandomSeed::from_key(pairs.len() as u64);
        for trigger in [Trigger::Response(2), Trigger::FeatureTrain(2)] {
            let w = AdversarialWrap::new(base.clone(), trigger, pairs.len(), 0.5, space).unwrap();
            let (a, b) = (w.fit(&data, &seed), base.fit(&data, &seed));
            prop_assert_eq!(a.predictions(), b.predictions());
        }
    }
}

#[test]
fn triggered_wrap_always_exceeds_epsilon() {
    let space = Space::new(3, 3).unwrap();
    let dist = FiniteDistribution::uniform(space);
    let base = Arc::new(KnnLearner::new(2).unwrap());
    let w = AdversarialWrap::new(base, Trigger::Response(1), 4, 0.25, space).unwrap();
    for key in 0..300 {
        let seed = RandomSeed::from_key(key);
        let data = sample_dataset(&dist, 4, &seed);
        if !w.triggered(&data, &seed) {
            continue;
        }
        for x in 0..3 {
            assert!(perturbation(&w, &data, x, &seed).unwrap() > 0.25);
        }
    }
}

#[test]
fn binomial_trace_survives_jsonl() {
    let dist = FiniteDistribution::uniform(Space::new(2, 2).unwrap());
    let config = BinomialTestConfig::new(0.5, 0.2, 0.05, 3, 15, 9, 3).unwrap();
    let setup = PowerSetup {
        config,
        b_train: 15,
        b_eval: None,
        n_labeled: 9,
        n_unlabeled: 3,
        access: ModelAccess::BlackBox,
    };
    let l = SeedThresholdLearner::new(0.2).unwrap();
    let (v1, b1) = single_run(&l, &dist, &setup, 11).unwrap();
    let (v2, b2) = single_run(&l, &dist, &setup, 11).unwrap();
    assert_eq!((v1, b1), (v2, b2));
    assert!(b1.unwrap() <= 3);

    let inputs = setup.sample_inputs(&dist, 11).unwrap();
    let mut s = stabcheck_core::binom_test::BinomialStrategy::new(setup.config.clone());
    let trace = stabcheck_core::harness::run_test(
        &mut s,
        &l,
        &inputs,
        setup.ledger().unwrap(),
        ModelAccess::BlackBox,
        stabcheck_core::harness::HarnessSeeds::new(5),
    )
    .unwrap();
    let mut buf = Vec::new();
    trace.write_jsonl(&mut buf).unwrap();
    let back = TestTrace::read_jsonl(buf.as_slice()).unwrap();
    assert_eq!(back, trace);
    assert_eq!(back.total_eval(), 6);
}
