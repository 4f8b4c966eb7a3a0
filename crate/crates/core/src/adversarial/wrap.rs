use crate::data::{Dataset, Space};
use crate::error::{Error, Result};
use crate::learner::{FittedModel, Learner, Provenance, SeedDependence, SharedLearner};
use crate::seed::RandomSeed;

use super::counts::{CellPartition, CountMask};
use super::region::SeedRegion;

/// `A_1(D; xi)(x) = 1 + eps + max_i A(D without point i; xi)(x)`.
///
/// The maximum runs over the distinct leave-one-out multisets, which for a
/// symmetric base equals the maximum over all permutations followed by
/// dropping the last point.
pub fn a1_model(
    base: &dyn Learner,
    data: &Dataset,
    seed: &RandomSeed,
    epsilon: f64,
) -> Result<FittedModel> {
    if data.is_empty() {
        return Err(Error::Precondition(
            "A1 needs a nonempty training set".into(),
        ));
    }
    let x_size = data.space().x_size as usize;
    let mut best = vec![f64::NEG_INFINITY; x_size];
    let mut seen = Vec::with_capacity(data.len());
    for (i, p) in data.iter().enumerate() {
        if seen.contains(p) {
            continue;
        }
        seen.push(*p);
        let fit = base.fit(&data.without(i), seed);
        for (b, v) in best.iter_mut().zip(fit.predictions()) {
            *b = b.max(*v);
        }
    }
    let preds = best.into_iter().map(|m| 1.0 + epsilon + m).collect();
    Ok(FittedModel::new(preds, Provenance::AdversarialA1))
}

/// When the wrapped learner switches to `A_1`.
#[derive(Clone, Debug, PartialEq)]
pub enum Trigger {
    /// `|D| = n` and some point of `D` has response `y`.
    Response(u32),
    /// `|D| = n` and some point of `D` has feature `x`.
    FeatureTrain(u32),
    /// `|D| = n` and (`x` in `D`, or the prediction is requested at `x`).
    FeatureEval(u32),
    /// `|D| = n` and `xi` in `R`.
    SeedRegion(SeedRegion),
    /// `|D| = n` and `q_{c(D)} = 1`.
    CountMask {
        partition: CellPartition,
        mask: CountMask,
    },
}

impl Trigger {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Trigger::Response(_) => "response",
            Trigger::FeatureTrain(_) => "feature-train",
            Trigger::FeatureEval(_) => "feature-eval",
            Trigger::SeedRegion(_) => "seed-region",
            Trigger::CountMask { .. } => "count-mask",
        }
    }
}

/// The modified algorithm `A'`: `A_1` on triggered inputs, the base otherwise.
#[derive(Debug, Clone)]
pub struct AdversarialWrap {
    base: SharedLearner,
    trigger: Trigger,
    n: usize,
    epsilon: f64,
}

impl AdversarialWrap {
    pub fn new(
        base: SharedLearner,
        trigger: Trigger,
        n: usize,
        epsilon: f64,
        space: Space,
    ) -> Result<Self> {
        if !base.is_symmetric() {
            return Err(Error::Config(format!(
                "base learner {} is not symmetric",
                base.name()
            )));
        }
        if n == 0 {
            return Err(Error::Config("target size n must be at least 1".into()));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon {epsilon} must be finite and >= 0"
            )));
        }
        match &trigger {
            Trigger::Response(y) if *y >= space.y_size => {
                return Err(Error::Config(format!("response {y} outside the space")))
            }
            Trigger::FeatureTrain(x) | Trigger::FeatureEval(x) if *x >= space.x_size => {
                return Err(Error::Config(format!("feature {x} outside the space")))
            }
            Trigger::CountMask { partition, mask } => {
                if partition.space() != space {
                    return Err(Error::Config("partition built for another space".into()));
                }
                if mask.n() != n || mask.m() != partition.m() {
                    return Err(Error::Config(format!(
                        "mask indexed by I_{{{},{}}}, expected I_{{{},{}}}",
                        mask.n(),
                        mask.m(),
                        n,
                        partition.m()
                    )));
                }
            }
            _ => {}
        }
        Ok(AdversarialWrap {
            base,
            trigger,
            n,
            epsilon,
        })
    }

    pub fn trigger(&self) -> &Trigger {
        &self.trigger
    }

    pub fn base(&self) -> &SharedLearner {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Whether the whole fitted model is replaced by `A_1`.
    pub fn triggered(&self, data: &Dataset, seed: &RandomSeed) -> bool {
        if data.len() != self.n {
            return false;
        }
        match &self.trigger {
            Trigger::Response(y) => data.contains_response(*y),
            Trigger::FeatureTrain(x) | Trigger::FeatureEval(x) => data.contains_feature(*x),
            Trigger::SeedRegion(r) => r.contains(seed.value()),
            Trigger::CountMask { partition, mask } => partition
                .count_vector(data)
                .map(|c| mask.get(&c))
                .unwrap_or(false),
        }
    }
}

impl Learner for AdversarialWrap {
    fn name(&self) -> String {
        format!("wrap[{}]({})", self.trigger.kind_name(), self.base.name())
    }

    fn fit(&self, data: &Dataset, seed: &RandomSeed) -> FittedModel {
        if self.triggered(data, seed) {
            return a1_model(self.base.as_ref(), data, seed, self.epsilon)
                .expect("triggered sets have size n >= 1");
        }
        let model = self.base.fit(data, seed);
        match self.trigger {
            Trigger::FeatureEval(x) if data.len() == self.n => {
                let a1 = a1_model(self.base.as_ref(), data, seed, self.epsilon)
                    .expect("size-n sets are nonempty");
                let mut preds = model.predictions().to_vec();
                preds[x as usize] = a1.predict(x);
                FittedModel::new(preds, Provenance::AdversarialWrapped)
            }
            _ => model,
        }
    }

    fn is_symmetric(&self) -> bool {
        true
    }

    fn seed_dependence(&self) -> SeedDependence {
        let base = self.base.seed_dependence();
        match &self.trigger {
            Trigger::SeedRegion(r) => base.merge(&SeedDependence::piecewise(r.breakpoints())),
            _ => base,
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use itertools::Itertools;

    use super::*;
    use crate::zoo::*;

    fn s2() -> Space {
        Space::new(2, 10).unwrap()
    }

    #[test]
    fn a1_examples() {
        let seed = RandomSeed::from_key(1);
        let d = Dataset::from_pairs(s2(), &[(0, 1), (1, 9)]).unwrap();
        let m = a1_model(&ConstantLearner { value: 0.0 }, &d, &seed, 0.1).unwrap();
        assert!(m.predictions().iter().all(|&v| (v - 1.1).abs() < 1e-15));
        let knn = a1_model(&KnnLearner::new(1).unwrap(), &d, &seed, 0.1).unwrap();
        assert!((knn.predict(0) - 10.1).abs() < 1e-12);
        let one = Dataset::from_pairs(s2(), &[(1, 4)]).unwrap();
        let m1 = a1_model(&MeanLearner, &one, &seed, 0.5).unwrap();
        assert_eq!(m1.predict(0), 1.5);
        assert!(a1_model(&MeanLearner, &Dataset::empty(s2()), &seed, 0.5).is_err());
    }

    #[test]
    fn a1_matches_permutation_definition() {
        let space = Space::new(3, 3).unwrap();
        let seed = RandomSeed::from_key(9);
        let bases: Vec<SharedLearner> = vec![
            Arc::new(KnnLearner::new(1).unwrap()),
            Arc::new(KnnLearner::new(2).unwrap()),
            Arc::new(RidgeLearner::new(0.7).unwrap()),
            Arc::new(MeanLearner),
        ];
        let data = Dataset::from_pairs(space, &[(0, 2), (1, 0), (2, 1), (0, 0), (1, 2)]).unwrap();
        for n in 1..=5 {
            let d = data.slice(0..n);
            for base in &bases {
                let fast = a1_model(base.as_ref(), &d, &seed, 0.25).unwrap();
                let mut slow = [f64::NEG_INFINITY; 3];
                for perm in (0..n).permutations(n) {
                    let kept: Vec<_> = perm[..n - 1].iter().map(|&i| d.points()[i]).collect();
                    let fit = base.fit(&Dataset::new(space, kept).unwrap(), &seed);
                    for (s, v) in slow.iter_mut().zip(fit.predictions()) {
                        *s = s.max(*v);
                    }
                }
                for x in 0..3 {
                    assert_eq!(fast.predict(x), 1.25 + slow[x as usize]);
                }
            }
        }
    }

    fn wrap(trigger: Trigger, n: usize) -> AdversarialWrap {
        AdversarialWrap::new(Arc::new(KnnLearner::new(1).unwrap()), trigger, n, 0.5, s2()).unwrap()
    }

    #[test]
    fn untriggered_is_base() {
        let seed = RandomSeed::from_key(4);
        let w = wrap(Trigger::Response(7), 2);
        let base = KnnLearner::new(1).unwrap();
        let d = Dataset::from_pairs(s2(), &[(0, 1), (1, 3)]).unwrap();
        assert_eq!(w.fit(&d, &seed), base.fit(&d, &seed));
        // wrong size, even though y = 7 is present
        let d3 = Dataset::from_pairs(s2(), &[(0, 7), (1, 3), (1, 2)]).unwrap();
        assert_eq!(w.fit(&d3, &seed), base.fit(&d3, &seed));
        let d2 = Dataset::from_pairs(s2(), &[(0, 7), (1, 3)]).unwrap();
        assert_eq!(w.fit(&d2, &seed).provenance(), Provenance::AdversarialA1);
    }

    #[test]
    fn feature_eval_patches_one_entry() {
        let seed = RandomSeed::from_key(4);
        let w = wrap(Trigger::FeatureEval(1), 2);
        let d = Dataset::from_pairs(s2(), &[(0, 1), (0, 3)]).unwrap();
        let m = w.fit(&d, &seed);
        assert_eq!(m.provenance(), Provenance::AdversarialWrapped);
        assert_eq!(m.predict(0), 1.0);
        assert_eq!(m.predict(1), 1.5 + 3.0);
    }

    #[test]
    fn seed_region_dependence_is_piecewise() {
        let w = AdversarialWrap::new(
            Arc::new(SeedThresholdLearner::new(0.3).unwrap()),
            Trigger::SeedRegion(SeedRegion::interval(0.5, 0.8).unwrap()),
            3,
            0.5,
            s2(),
        )
        .unwrap();
        assert_eq!(
            w.seed_dependence(),
            SeedDependence::Piecewise(vec![0.3, 0.5, 0.8])
        );
    }

    #[derive(Debug)]
    struct FirstPoint;

    impl Learner for FirstPoint {
        fn name(&self) -> String {
            "first".into()
        }
        fn fit(&self, data: &Dataset, _seed: &RandomSeed) -> FittedModel {
            let v = data.points().first().map_or(0.0, |p| p.response());
            FittedModel::constant(v, data.space().x_size)
        }
        fn is_symmetric(&self) -> bool {
            false
        }
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(
            AdversarialWrap::new(Arc::new(FirstPoint), Trigger::Response(0), 2, 0.5, s2()).is_err()
        );
        let base: SharedLearner = Arc::new(MeanLearner);
        assert!(AdversarialWrap::new(base.clone(), Trigger::Response(10), 2, 0.5, s2()).is_err());
        assert!(AdversarialWrap::new(base.clone(), Trigger::FeatureEval(2), 2, 0.5, s2()).is_err());
        assert!(AdversarialWrap::new(base.clone(), Trigger::Response(1), 0, 0.5, s2()).is_err());
        let part = CellPartition::round_robin(s2(), 2).unwrap();
        let mask = CountMask::constant(3, 2, true);
        assert!(AdversarialWrap::new(
            base,
            Trigger::CountMask {
                partition: part,
                mask
            },
            2,
            0.5,
            s2()
        )
        .is_err());
    }
}
