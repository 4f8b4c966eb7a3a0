use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::data::FiniteDistribution;
use crate::error::{Error, Result};
use crate::learner::{Learner, SeedDependence, SharedLearner};
use crate::seed::RandomSeed;
use crate::stability::{
    conditional_instability_exact, conditional_instability_mc, enumerate_outcomes, ExactOptions,
};

use super::counts::{CellPartition, CountMask};
use super::mixture::{mixture, MixtureKind};
use super::region::SeedRegion;
use super::wrap::{AdversarialWrap, Trigger};

/// The three point-mass corruptions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorruptionKind {
    Response,
    FeatureTrain,
    FeatureEval,
}

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 3] = [
        CorruptionKind::Response,
        CorruptionKind::FeatureTrain,
        CorruptionKind::FeatureEval,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CorruptionKind::Response => "response",
            CorruptionKind::FeatureTrain => "feature-train",
            CorruptionKind::FeatureEval => "feature-eval",
        }
    }
}

/// Lower bound on the instability of the wrapped learner under `P'`.
pub fn instability_lower_bound(kind: CorruptionKind, c: f64, n: usize, delta_star: f64) -> f64 {
    let keep = 1.0 - c;
    let n = n as i32;
    match kind {
        CorruptionKind::Response => (1.0 - keep.powi(n)) + keep.powi(n) * delta_star,
        CorruptionKind::FeatureTrain => (1.0 - keep.powi(n)) + keep.powi(n + 1) * delta_star,
        CorruptionKind::FeatureEval => (1.0 - keep.powi(n + 1)) + keep.powi(n + 1) * delta_star,
    }
}

/// Corruption weight above which the construction is provably not
/// `(eps, delta)`-stable.
pub fn critical_c(kind: CorruptionKind, n: usize, delta: f64, delta_star: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    if delta.is_nan() || delta >= 1.0 {
        return Err(Error::Precondition(format!("delta = {delta} must be < 1")));
    }
    if !(0.0..=delta).contains(&delta_star) {
        return Err(Error::Precondition(format!(
            "need 0 <= delta* <= delta, got delta* = {delta_star}, delta = {delta}"
        )));
    }
    let nf = n as f64;
    let (num, exponent) = match kind {
        CorruptionKind::Response => (1.0 - delta, 1.0 / nf),
        CorruptionKind::FeatureTrain => {
            let inflated = delta * (1.0 + 1.0 / (E * nf));
            if inflated >= 1.0 {
                return Err(Error::Precondition(format!(
                    "delta (1 + 1/(e n)) = {inflated} must be < 1"
                )));
            }
            (1.0 - inflated, 1.0 / nf)
        }
        CorruptionKind::FeatureEval => (1.0 - delta, 1.0 / (nf + 1.0)),
    };
    Ok((1.0 - (num / (1.0 - delta_star)).powf(exponent)).max(0.0))
}

/// The wrapped learner and corrupted distribution for one kind, with the
/// point mass placed at `target` (a response for `Response`, a feature
/// otherwise).
pub fn adversarial_pair(
    kind: CorruptionKind,
    base: SharedLearner,
    dist: &FiniteDistribution,
    n: usize,
    epsilon: f64,
    c: f64,
    target: u32,
) -> Result<(AdversarialWrap, FiniteDistribution)> {
    let (trigger, mix) = match kind {
        CorruptionKind::Response => (Trigger::Response(target), MixtureKind::ResponseAt(target)),
        CorruptionKind::FeatureTrain => (
            Trigger::FeatureTrain(target),
            MixtureKind::FeatureAt(target),
        ),
        CorruptionKind::FeatureEval => {
            (Trigger::FeatureEval(target), MixtureKind::FeatureAt(target))
        }
    };
    let wrap = AdversarialWrap::new(base, trigger, n, epsilon, dist.space())?;
    Ok((wrap, mixture(dist, mix, c)?))
}

/// `rho = (delta - delta* + 1/n) / (1 - delta*)`.
pub fn rho_for(delta: f64, delta_star: f64, n: usize) -> Result<f64> {
    if n == 0 || delta_star.is_nan() || delta_star >= 1.0 {
        return Err(Error::Precondition("need n >= 1 and delta* < 1".into()));
    }
    let rho = (delta - delta_star + 1.0 / n as f64) / (1.0 - delta_star);
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Precondition(format!("rho = {rho} outside [0, 1]")));
    }
    Ok(rho)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionReport {
    /// `(i, p_i, q_i)` in lexicographic order of `i`.
    pub cells: Vec<(Vec<u32>, f64, bool)>,
    pub base_delta_star: f64,
    /// `sum_i (1 - q_i) p_i`.
    pub predicted_stable: f64,
    /// Stable probability of `A'_q`, by direct enumeration.
    pub exact_stable: f64,
    pub exact_instability: f64,
    pub abs_difference: f64,
}

/// Computes `p_i = P{stable, c(D_n) = i}` for the base learner and compares
/// `sum_i (1 - q_i) p_i` with the enumerated stable probability of `A'_q`.
pub fn deterministic_construction_check(
    base: SharedLearner,
    dist: &FiniteDistribution,
    n: usize,
    epsilon: f64,
    partition: &CellPartition,
    mask: &CountMask,
    opts: &ExactOptions,
) -> Result<ConstructionReport> {
    let entries = mask.entries();
    let mut p = vec![0.0; entries.len()];
    let index: std::collections::HashMap<&[u32], usize> = entries
        .iter()
        .enumerate()
        .map(|(i, (v, _))| (v.as_slice(), i))
        .collect();
    let mut unstable_base = 0.0;
    let mut failure = None;
    enumerate_outcomes(base.as_ref(), dist, n, epsilon, opts, |_, o| {
        if o.unstable {
            unstable_base += o.weight;
            return;
        }
        match partition.count_vector(o.data) {
            Ok(c) => p[index[c.as_slice()]] += o.weight,
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let predicted: f64 = entries
        .iter()
        .zip(&p)
        .filter(|((_, q), _)| !q)
        .map(|(_, p)| p)
        .sum();
    let wrap = AdversarialWrap::new(
        base,
        Trigger::CountMask {
            partition: partition.clone(),
            mask: mask.clone(),
        },
        n,
        epsilon,
        dist.space(),
    )?;
    let mut stable = 0.0;
    enumerate_outcomes(&wrap, dist, n, epsilon, opts, |_, o| {
        if !o.unstable {
            stable += o.weight;
        }
    })?;
    Ok(ConstructionReport {
        cells: entries
            .into_iter()
            .zip(p)
            .map(|((i, q), p)| (i, p, q))
            .collect(),
        base_delta_star: unstable_base,
        predicted_stable: predicted,
        exact_stable: stable,
        exact_instability: 1.0 - stable,
        abs_difference: (predicted - stable).abs(),
    })
}

/// Draws `q_i` iid Bernoulli(`rho`) from `seed`'s stream and runs the check.
#[allow(clippy::too_many_arguments)]
pub fn deterministic_construction_check_sampled(
    base: SharedLearner,
    dist: &FiniteDistribution,
    n: usize,
    epsilon: f64,
    partition: &CellPartition,
    rho: f64,
    seed: &RandomSeed,
    opts: &ExactOptions,
) -> Result<ConstructionReport> {
    let mut rng = seed.stream();
    let mask = CountMask::sample(n, partition.m(), rho, &mut rng)?;
    deterministic_construction_check(base, dist, n, epsilon, partition, &mask, opts)
}

/// How to evaluate the seed function `f(xi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SeedFunctionMethod {
    Exact { cap: u64 },
    MonteCarlo { trials: u64, master: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRegionReport {
    /// `(lo, hi, f)` for each seed bucket.
    pub buckets: Vec<(f64, f64, f64)>,
    pub leb: f64,
    /// `E[f(xi) | xi not in R]` (0 when `R` is all of `[0, 1)`).
    pub mean_f_outside: f64,
    /// `Leb(R) + (1 - Leb(R)) E[f | xi not in R]`, which is also the exact
    /// instability of the seed-region wrap under `P`.
    pub condition_value: f64,
    pub delta: f64,
    pub unstable: bool,
    /// True when `f` had to be read off a fixed grid because the base
    /// learner's seed dependence is not piecewise constant.
    pub approximate: bool,
}

const GRID_CELLS: usize = 64;

/// Evaluates the seed-region condition for `base` under `dist`.
pub fn btrain_condition(
    base: &dyn Learner,
    dist: &FiniteDistribution,
    n: usize,
    epsilon: f64,
    region: &SeedRegion,
    delta: f64,
    method: SeedFunctionMethod,
) -> Result<SeedRegionReport> {
    let region_dep = SeedDependence::piecewise(region.breakpoints());
    let (buckets, approximate) = match base.seed_dependence().merge(&region_dep).buckets() {
        Some(b) => (b, false),
        None => {
            let mut pts: Vec<f64> = (1..GRID_CELLS)
                .map(|i| i as f64 / GRID_CELLS as f64)
                .collect();
            pts.extend(region.breakpoints());
            (
                SeedDependence::piecewise(pts).buckets().expect("piecewise"),
                true,
            )
        }
    };
    let mut out = Vec::with_capacity(buckets.len());
    let mut outside_mass = 0.0;
    let mut outside_f = 0.0;
    for (lo, hi) in buckets {
        let mid = RandomSeed::from_value(0.5 * (lo + hi));
        let f = match method {
            SeedFunctionMethod::Exact { cap } => {
                conditional_instability_exact(base, dist, n, epsilon, &mid, cap)?
            }
            SeedFunctionMethod::MonteCarlo { trials, master } => {
                conditional_instability_mc(base, dist, n, epsilon, &mid, trials, master)?
                    .point_estimate
            }
        };
        if !region.contains(mid.value()) {
            outside_mass += hi - lo;
            outside_f += (hi - lo) * f;
        }
        out.push((lo, hi, f));
    }
    let leb = region.leb();
    let mean_f_outside = if outside_mass > 0.0 {
        outside_f / outside_mass
    } else {
        0.0
    };
    let condition_value = leb + (1.0 - leb) * mean_f_outside;
    Ok(SeedRegionReport {
        buckets: out,
        leb,
        mean_f_outside,
        condition_value,
        delta,
        unstable: condition_value > delta,
        approximate,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::Space;
    use crate::stability::estimate_delta_star_exact;
    use crate::zoo::*;

    #[test]
    fn lower_bound_examples() {
        assert!(
            (instability_lower_bound(CorruptionKind::Response, 0.2, 3, 0.0) - 0.488).abs() < 1e-12
        );
        for k in CorruptionKind::ALL {
            assert!((instability_lower_bound(k, 0.0, 4, 0.3) - 0.3).abs() < 1e-15);
            assert_eq!(instability_lower_bound(k, 1.0, 4, 0.3), 1.0);
        }
    }

    #[test]
    fn critical_c_examples() {
        let c = critical_c(CorruptionKind::Response, 5, 0.1, 0.0).unwrap();
        assert!((c - (1.0 - 0.9f64.powf(0.2))).abs() < 1e-15);
        assert!((c - 0.020852).abs() < 1e-6);
        assert_eq!(
            critical_c(CorruptionKind::Response, 5, 0.2, 0.2).unwrap(),
            0.0
        );
        assert_eq!(
            critical_c(CorruptionKind::FeatureEval, 5, 0.2, 0.2).unwrap(),
            0.0
        );
        assert!(critical_c(CorruptionKind::Response, 5, 1.0, 0.0).is_err());
        assert!(critical_c(CorruptionKind::FeatureTrain, 1, 0.9, 0.0).is_err());
        let ft = critical_c(CorruptionKind::FeatureTrain, 3, 0.2, 0.05).unwrap();
        let want = 1.0 - ((1.0 - 0.2 * (1.0 + 1.0 / (E * 3.0))) / 0.95f64).powf(1.0 / 3.0);
        assert!((ft - want).abs() < 1e-15);
    }

    #[test]
    fn critical_c_makes_bound_exceed_delta() {
        for k in CorruptionKind::ALL {
            for &(n, d, ds) in &[(3usize, 0.1, 0.0), (5, 0.2, 0.05), (2, 0.3, 0.29)] {
                let c = critical_c(k, n, d, ds).unwrap() + 1e-6;
                assert!(
                    instability_lower_bound(k, c, n, ds) > d,
                    "{k:?} {n} {d} {ds}"
                );
            }
        }
    }

    #[test]
    fn rho_examples() {
        assert!((rho_for(0.1, 0.0, 10).unwrap() - 0.2).abs() < 1e-15);
        assert!(rho_for(0.9, 0.0, 2).is_err());
    }

    #[test]
    fn extreme_masks() {
        let space = Space::new(2, 2).unwrap();
        let dist = FiniteDistribution::uniform(space);
        let part = CellPartition::round_robin(space, 2).unwrap();
        let base: SharedLearner = Arc::new(KnnLearner::new(1).unwrap());
        let ds = estimate_delta_star_exact(base.as_ref(), &dist, 3, 0.5)
            .unwrap()
            .point_estimate;
        let opts = ExactOptions::default();
        let zero = deterministic_construction_check(
            base.clone(),
            &dist,
            3,
            0.5,
            &part,
            &CountMask::constant(3, 2, false),
            &opts,
        )
        .unwrap();
        assert!((zero.exact_instability - ds).abs() < 1e-12);
        assert!((zero.base_delta_star - ds).abs() < 1e-12);
        let one = deterministic_construction_check(
            base,
            &dist,
            3,
            0.5,
            &part,
            &CountMask::constant(3, 2, true),
            &opts,
        )
        .unwrap();
        assert!((one.exact_instability - 1.0).abs() < 1e-12);
        assert!(one.predicted_stable.abs() < 1e-15);
    }

    #[test]
    fn seed_region_condition_for_threshold_learner() {
        let space = Space::new(2, 2).unwrap();
        let dist = FiniteDistribution::uniform(space);
        let l = SeedThresholdLearner::new(0.3).unwrap();
        let r = SeedRegion::interval(0.6, 0.8).unwrap();
        let rep = btrain_condition(
            &l,
            &dist,
            3,
            0.5,
            &r,
            0.4,
            SeedFunctionMethod::Exact { cap: 1 << 20 },
        )
        .unwrap();
        // f = 1 on [0, 0.3), 0 elsewhere; outside R has mass 0.8, of which 0.3 unstable
        assert!(!rep.approximate);
        assert!((rep.leb - 0.2).abs() < 1e-15);
        assert!((rep.mean_f_outside - 0.375).abs() < 1e-12);
        assert!((rep.condition_value - 0.5).abs() < 1e-12);
        assert!(rep.unstable);
        let wrap =
            AdversarialWrap::new(Arc::new(l), Trigger::SeedRegion(r), 3, 0.5, space).unwrap();
        let exact = estimate_delta_star_exact(&wrap, &dist, 3, 0.5).unwrap();
        assert!((exact.point_estimate - rep.condition_value).abs() < 1e-12);
    }
}
