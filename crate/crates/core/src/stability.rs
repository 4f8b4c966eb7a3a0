//! The instability probability
//! `delta*_eps = P{ |f_n(X_{n+1}) - f_{n-1}(X_{n+1})| > eps }`.
//!
//! Two independent routes: Monte Carlo over fresh draws, and exact
//! enumeration over ordered training tuples weighted by their product
//! probabilities. The enumeration is the oracle the Monte-Carlo path is
//! checked against.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FiniteDistribution};
use crate::error::{Error, Result};
use crate::learner::Learner;
use crate::seed::{derive_key, RandomSeed};

/// Default cap on `(|X| |Y|)^(n+1)` for exact enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimationMethod {
    MonteCarlo,
    Exact,
    /// Exact over data, Monte Carlo over seeds (learners without finitely
    /// many seed buckets).
    ExactDataSampledSeeds,
}

impl EstimationMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimationMethod::MonteCarlo => "monte-carlo",
            EstimationMethod::Exact => "exact",
            EstimationMethod::ExactDataSampledSeeds => "exact-data-sampled-seeds",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityEstimate {
    pub epsilon: f64,
    pub n: usize,
    pub point_estimate: f64,
    /// Monte-Carlo trials, or the number of weighted outcomes enumerated.
    pub trials: u64,
    pub std_error: f64,
    pub method: EstimationMethod,
}

/// `|f_n(test_x) - f_{n-1}(test_x)|` where `f_{n-1}` is fit on `data_n`
/// without its final point and both fits share `seed`.
pub fn perturbation(
    learner: &dyn Learner,
    data_n: &Dataset,
    test_x: u32,
    seed: &RandomSeed,
) -> Result<f64> {
    if data_n.is_empty() {
        return Err(Error::Precondition(
            "perturbation needs a training set with at least one point".into(),
        ));
    }
    if test_x >= data_n.space().x_size {
        return Err(Error::Precondition(format!(
            "test feature {test_x} outside the feature space"
        )));
    }
    let full = learner.fit(data_n, seed);
    let reduced = learner.fit(&data_n.without_last(), seed);
    Ok((full.predict(test_x) - reduced.predict(test_x)).abs())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Precondition(
            "training size n must be at least 1".into(),
        ))
    } else {
        Ok(())
    }
}

/// One Monte-Carlo instability indicator for trial stream `key`.
fn mc_trial(
    learner: &dyn Learner,
    dist: &FiniteDistribution,
    n: usize,
    epsilon: f64,
    key: u64,
    fixed_seed: Option<&RandomSeed>,
) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let data = dist.sample_with(n, &mut rng);
    let test_x = dist.sample_feature(&mut rng);
    let seed = match fixed_seed {
        Some(s) => *s,
        None => RandomSeed::from_key(rng.random()),
    };
    let full = learner.fit(&data, &seed);
    let reduced = learner.fit(&data.without_last(), &seed);
    (full.predict(test_x) - reduced.predict(test_x)).abs() > epsilon
}

fn mc_estimate(hits: u64, trials: u64, epsilon: f64, n: usize) -> StabilityEstimate {
    let p = hits as f64 / trials as f64;
    StabilityEstimate {
        epsilon,
        n,
        point_estimate: p,
        trials,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        method: EstimationMethod::MonteCarlo,
    }
}

/// Monte-Carlo estimate of `delta*_eps` from `trials` independent draws of
/// `(D_n, X_{n+1}, xi)`. Trial `t` uses its own stream derived from
/// `master_seed`, so the result does not depend on the worker count.
pub fn estimate_delta_star_mc(
    learner: &dyn Learner,
    dist: &FiniteDistribution,
    n: usize,
    epsilon: f64,
    trials: u64,
    master_seed: u64,
) -> Result<StabilityEstimate> {
    check_n(n)?;
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| mc_trial(learner, dist, n, epsilon, derive_key(master_seed, t), None))
        .count() as u64;
    Ok(mc_estimate(hits, trials, epsilon, n))
}

/// Monte-Carlo estimate of the conditional instability `f(xi)` at a fixed seed.
pub fn conditional_instability_mc(
    learner: &dyn Learner,
    dist: &FiniteDistribution,
    n: usize,
    epsilon: f64,
    seed: &RandomSeed,
    trials: u64,
    master_seed: u64,
) -> Result<StabilityEstimate> {
    check_n(n)?;
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            mc_trial(
                learner,
                dist,
                n,
                epsilon,
                derive_key(master_seed, t),
                Some(seed),
            )
        })
        .count() as u64;
    Ok(mc_estimate(hits, trials, epsilon, n))
}

/// Options for exact enumeration.
#[derive(Clone, Debug)]
pub struct ExactOptions {
    /// Maximum allowed `(|X| |Y|)^(n+1)`.
    pub cap: u64,
    /// Seeds drawn per dataset when the learner's seed dependence is general.
    pub seed_draws: u32,
    /// Key for those seed draws.
    pub seed_key: u64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            cap: DEFAULT_ENUMERATION_CAP,
            seed_draws: 256,
            seed_key: 0x5eed,
        }
    }
}

/// Checks `(|X| |Y|)^(n+1) <= cap`.
pub fn check_enumeration_cap(dist: &FiniteDistribution, n: usize, cap: u64) -> Result<()> {
    let required = (dist.space().atoms() as f64).powi(n as i32 + 1);
    if required > cap as f64 {
        return Err(Error::EnumerationCap { required, cap });
    }
    Ok(())
}

/// Calls `visit(dataset, weight)` for every ordered tuple of `n` atoms with
/// positive product probability.
pub fn for_each_dataset<F>(dist: &FiniteDistribution, n: usize, mut visit: F)
where
    F: FnMut(&Dataset, f64),
{
    fn recurse<F: FnMut(&Dataset, f64)>(
        dist: &FiniteDistribution,
        remaining: usize,
        current: &mut Dataset,
        weight: f64,
        visit: &mut F,
    ) {
        if remaining == 0 {
            visit(current, weight);
            return;
        }
        let space = dist.space();
        for (atom, &p) in dist.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            current
                .push(space.atom(atom))
                .expect("atoms lie in the space");
            recurse(dist, remaining - 1, current, weight * p, visit);
            *current = current.without_last();
        }
    }
    let mut current = Dataset::empty(dist.space());
    recurse(dist, n, &mut current, 1.0, &mut visit);
}

/// One weighted outcome of the enumeration.
#[derive(Debug)]
pub struct Outcome<'a> {
    pub data: &'a Dataset,
    pub test_x: u32,
    /// Product of data, seed-bucket and test-point probabilities.
    pub weight: f64,
    pub unstable: bool,
}

/// Seeds over which to integrate: `(representative, weight)`.
fn seed_grid(learner: &dyn Learner, opts: &ExactOptions) -> (Vec<(RandomSeed, f64)>, bool) {
    match learner.seed_dependence().buckets() {
        Some(buckets) => (
            buckets
                .into_iter()
                .map(|(lo, hi)| (RandomSeed::from_value(0.5 * (lo + hi)), hi - lo))
                .collect(),
            true,
        ),
        None => {
            let w = 1.0 / f64::from(opts.seed_draws.max(1));
            (
                (0..u64::from(opts.seed_draws.max(1)))
                    .map(|i| (RandomSeed::derived(opts.seed_key, i), w))
                    .collect(),
                false,
            )
        }
    }
}

/// Enumerates every `(D_n, xi bucket, X_{n+1})` outcome with its weight.
///
/// Returns whether the seed integration was exact (`false` when the learner
/// needed sampled seeds).
pub fn enumerate_outcomes<F>(
    learner: &dyn Learner,
    dist: &FiniteDistribution,
    n: usize,
    epsilon: f64,
    opts: &ExactOptions,
    mut visit: F,
) -> Result<bool>
where
    F: FnMut(usize, Outcome<'_>),
{
    check_n(n)?;
    check_enumeration_cap(dist, n, opts.cap)?;
    let (seeds, exact) = seed_grid(learner, opts);
    let px = dist.marginal_x();
    for_each_dataset(dist, n, |data, w_data| {
        let reduced = data.without_last();
        for (s_idx, (seed, w_seed)) in seeds.iter().enumerate() {
            let full_fit = learner.fit(data, seed);
            let reduced_fit = learner.fit(&reduced, seed);
            for (x, &p_x) in px.iter().enumerate() {
                if p_x == 0.0 {
                    continue;
                }
                let diff = (full_fit.predict(x as u32) - reduced_fit.predict(x as u32)).abs();
                visit(
                    s_idx,
                    Outcome {
                        data,
                        test_x: x as u32,
                        weight: w_data * w_seed * p_x,
                        unstable: diff > epsilon,
                    },
                );
            }
        }
    });
    Ok(exact)
}

/// Exact `delta*_eps` by enumeration, with default options.
pub fn estimate_delta_star_exact(
    learner: &dyn Learner,
    dist: &FiniteDistribution,
    n: usize,
    epsilon: f64,
) -> Result<StabilityEstimate> {
    estimate_delta_star_exact_with(learner, dist, n, epsilon, &ExactOptions::default())
}

pub fn estimate_delta_star_exact_with(
    learner: &dyn Learner,
    dist: &FiniteDistribution,
    n: usize,
    epsilon: f64,
    opts: &ExactOptions,
) -> Result<StabilityEstimate> {
    let mut per_seed: Vec<f64> = Vec::new();
    let mut count = 0u64;
    let exact = enumerate_outcomes(learner, dist, n, epsilon, opts, |s, o| {
        if per_seed.len() <= s {
            per_seed.resize(s + 1, 0.0);
        }
        count += 1;
        if o.unstable {
            per_seed[s] += o.weight;
        }
    })?;
    let total: f64 = per_seed.iter().sum::<f64>().clamp(0.0, 1.0);
    if exact {
        return Ok(StabilityEstimate {
            epsilon,
            n,
            point_estimate: total,
            trials: count,
            std_error: 0.0,
            method: EstimationMethod::Exact,
        });
    }
    // per_seed[s] carries weight 1/S; rescale to the conditional f(xi_s)
    let s = per_seed.len().max(1) as f64;
    let values: Vec<f64> = per_seed.iter().map(|v| v * s).collect();
    let mean = values.iter().sum::<f64>() / s;
    let var = if s > 1.0 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s - 1.0)
    } else {
        0.0
    };
    Ok(StabilityEstimate {
        epsilon,
        n,
        point_estimate: total,
        trials: count,
        std_error: (var / s).sqrt(),
        method: EstimationMethod::ExactDataSampledSeeds,
    })
}

/// Exact conditional instability `f(xi)` at a fixed seed.
pub fn conditional_instability_exact(
    learner: &dyn Learner,
    dist: &FiniteDistribution,
    n: usize,
    epsilon: f64,
    seed: &RandomSeed,
    cap: u64,
) -> Result<f64> {
    check_n(n)?;
    check_enumeration_cap(dist, n, cap)?;
    let px = dist.marginal_x();
    let mut total = 0.0;
    for_each_dataset(dist, n, |data, w| {
        let full = learner.fit(data, seed);
        let reduced = learner.fit(&data.without_last(), seed);
        for (x, &p_x) in px.iter().enumerate() {
            if p_x > 0.0 && (full.predict(x as u32) - reduced.predict(x as u32)).abs() > epsilon {
                total += w * p_x;
            }
        }
    });
    Ok(total.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Space;
    use crate::learner::{FittedModel, SeedDependence};
    use crate::zoo::*;

    fn tiny() -> FiniteDistribution {
        FiniteDistribution::uniform(Space::new(2, 2).unwrap())
    }

    #[test]
    fn perturbation_examples() {
        let s = Space::new(2, 10).unwrap();
        let seed = RandomSeed::from_key(3);
        let d = Dataset::from_pairs(s, &[(0, 1), (1, 9)]).unwrap();
        let knn = KnnLearner::new(1).unwrap();
        assert_eq!(perturbation(&knn, &d, 1, &seed).unwrap(), 8.0);
        assert_eq!(
            perturbation(&ConstantLearner { value: 0.0 }, &d, 0, &seed).unwrap(),
            0.0
        );
        let d5 = Dataset::from_pairs(s, &[(0, 0); 5]).unwrap();
        assert_eq!(perturbation(&SizeLearner, &d5, 1, &seed).unwrap(), 1.0);
    }

    #[test]
    fn perturbation_rejects_empty() {
        let d = Dataset::empty(Space::new(2, 2).unwrap());
        assert!(matches!(
            perturbation(&SizeLearner, &d, 0, &RandomSeed::from_key(1)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn mc_trivial_learners() {
        let dist = tiny();
        let c = estimate_delta_star_mc(&ConstantLearner { value: 0.0 }, &dist, 3, 0.5, 1000, 1)
            .unwrap();
        assert_eq!(c.point_estimate, 0.0);
        let s = estimate_delta_star_mc(&SizeLearner, &dist, 3, 0.5, 1000, 1).unwrap();
        assert_eq!(s.point_estimate, 1.0);
        assert!(estimate_delta_star_mc(&SizeLearner, &dist, 3, 0.5, 0, 1).is_err());
        assert!(estimate_delta_star_mc(&SizeLearner, &dist, 0, 0.5, 10, 1).is_err());
    }

    #[test]
    fn mc_seed_threshold_recovers_rho() {
        let dist = tiny();
        let l = SeedThresholdLearner::new(0.3).unwrap();
        let est = estimate_delta_star_mc(&l, &dist, 3, 0.5, 100_000, 77).unwrap();
        assert!(
            (est.point_estimate - 0.3).abs() <= 3.0 * est.std_error,
            "{est:?}"
        );
    }

    #[test]
    fn exact_trivial_learners() {
        let dist = tiny();
        let c = estimate_delta_star_exact(&ConstantLearner { value: 1.0 }, &dist, 3, 0.0).unwrap();
        assert_eq!(c.point_estimate, 0.0);
        assert_eq!(c.std_error, 0.0);
        assert_eq!(c.method, EstimationMethod::Exact);
        let s = estimate_delta_star_exact(&SizeLearner, &dist, 3, 0.99).unwrap();
        assert!((s.point_estimate - 1.0).abs() < 1e-12);
        let t = estimate_delta_star_exact(&SeedThresholdLearner::new(0.3).unwrap(), &dist, 2, 0.5)
            .unwrap();
        assert!((t.point_estimate - 0.3).abs() < 1e-12);
    }

    #[test]
    fn exact_cap_enforced() {
        let dist = FiniteDistribution::uniform(Space::new(10, 10).unwrap());
        assert!(matches!(
            estimate_delta_star_exact(&SizeLearner, &dist, 4, 0.5),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn ties_at_epsilon_are_stable() {
        let dist = tiny();
        // size learner moves by exactly 1
        let s = estimate_delta_star_exact(&SizeLearner, &dist, 2, 1.0).unwrap();
        assert_eq!(s.point_estimate, 0.0);
    }

    #[test]
    fn one_nn_hand_value_n1() {
        // n = 1: D_0 is empty and predicts 0, D_1 = {(x1, y1)} predicts y1.
        // Unstable iff y1 > eps, so with eps = 0.5 and uniform Y in {0,1}: 1/2.
        let est = estimate_delta_star_exact(&KnnLearner::new(1).unwrap(), &tiny(), 1, 0.5).unwrap();
        assert!((est.point_estimate - 0.5).abs() < 1e-15);
    }

    #[derive(Debug)]
    struct NoisyConstant;

    impl Learner for NoisyConstant {
        fn name(&self) -> String {
            "noisy".into()
        }
        fn fit(&self, data: &Dataset, seed: &RandomSeed) -> FittedModel {
            // unstable iff xi > 0.75 and |D| is odd
            let v = if seed.value() > 0.75 && data.len() % 2 == 1 {
                5.0
            } else {
                0.0
            };
            FittedModel::constant(v, data.space().x_size)
        }
        fn seed_dependence(&self) -> SeedDependence {
            SeedDependence::General
        }
    }

    #[test]
    fn general_seed_dependence_falls_back_to_sampled_seeds() {
        let est = estimate_delta_star_exact(&NoisyConstant, &tiny(), 3, 0.5).unwrap();
        assert_eq!(est.method, EstimationMethod::ExactDataSampledSeeds);
        assert!(est.std_error > 0.0);
        assert!(
            (est.point_estimate - 0.25).abs() <= 4.0 * est.std_error,
            "{est:?}"
        );
    }

    #[test]
    fn conditional_instability_of_seed_threshold() {
        let l = SeedThresholdLearner::new(0.3).unwrap();
        let dist = tiny();
        let f_in =
            conditional_instability_exact(&l, &dist, 2, 0.5, &RandomSeed::from_value(0.1), 1 << 20)
                .unwrap();
        let f_out =
            conditional_instability_exact(&l, &dist, 2, 0.5, &RandomSeed::from_value(0.6), 1 << 20)
                .unwrap();
        assert!((f_in - 1.0).abs() < 1e-12);
        assert_eq!(f_out, 0.0);
        let mc =
            conditional_instability_mc(&l, &dist, 2, 0.5, &RandomSeed::from_value(0.1), 100, 1)
                .unwrap();
        assert_eq!(mc.point_estimate, 1.0);
    }

    #[test]
    fn dataset_weights_sum_to_one() {
        let dist =
            FiniteDistribution::new(Space::new(2, 2).unwrap(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mut total = 0.0;
        let mut count = 0;
        for_each_dataset(&dist, 3, |d, w| {
            assert_eq!(d.len(), 3);
            total += w;
            count += 1;
        });
        assert_eq!(count, 64);
        assert!((total - 1.0).abs() < 1e-12);
    }
}
