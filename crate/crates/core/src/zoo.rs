//! Concrete learners.
//!
//! Every zoo member reduces its input to integer counts and sums before any
//! floating-point work, so fits are bit-identical under permutation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{DataPoint, Dataset};
use crate::error::{Error, Result};
use crate::learner::{FittedModel, Learner, Provenance, SeedDependence, SharedLearner};
use crate::seed::RandomSeed;

/// Predicts a fixed value everywhere.
#[derive(Clone, Debug)]
pub struct ConstantLearner {
    pub value: f64,
}

impl Learner for ConstantLearner {
    fn name(&self) -> String {
        format!("constant({})", self.value)
    }

    fn fit(&self, data: &Dataset, _seed: &RandomSeed) -> FittedModel {
        FittedModel::constant(self.value, data.space().x_size)
    }
}

/// k-nearest-neighbour regression on the feature index.
///
/// Neighbours are ranked by `(|x - x_i|, x_i, y_i)`, which breaks distance
/// ties independently of input order. Fewer than `k` points means all are
/// used; the empty dataset predicts 0.
#[derive(Clone, Debug)]
pub struct KnnLearner {
    k: usize,
}

impl KnnLearner {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("knn requires k >= 1".into()));
        }
        Ok(KnnLearner { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl Learner for KnnLearner {
    fn name(&self) -> String {
        format!("knn(k={})", self.k)
    }

    fn fit(&self, data: &Dataset, _seed: &RandomSeed) -> FittedModel {
        let x_size = data.space().x_size;
        if data.is_empty() {
            return FittedModel::constant(0.0, x_size);
        }
        let mut ranked: Vec<DataPoint> = data.sorted_points();
        let predictions = (0..x_size)
            .map(|x| {
                ranked.sort_by_key(|p| (p.x.abs_diff(x), p.x, p.y));
                let take = self.k.min(ranked.len());
                let sum: u64 = ranked[..take].iter().map(|p| u64::from(p.y)).sum();
                sum as f64 / take as f64
            })
            .collect();
        FittedModel::new(predictions, Provenance::Base)
    }
}

/// Ridge regression on one-hot features with an unpenalized intercept.
///
/// With `n_x` points and response sum `s_x` at feature `x`, the normal
/// equations have the closed form
/// `beta_x = (s_x - n_x b) / (n_x + lambda)` and
/// `b = (S - sum_x n_x s_x / (n_x + lambda)) / (sum_x n_x lambda / (n_x + lambda))`.
#[derive(Clone, Debug)]
pub struct RidgeLearner {
    lambda: f64,
}

impl RidgeLearner {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Config(format!(
                "ridge requires a positive finite lambda, got {lambda}"
            )));
        }
        Ok(RidgeLearner { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Learner for RidgeLearner {
    fn name(&self) -> String {
        format!("ridge(lambda={})", self.lambda)
    }

    fn fit(&self, data: &Dataset, _seed: &RandomSeed) -> FittedModel {
        let x_size = data.space().x_size as usize;
        if data.is_empty() {
            return FittedModel::constant(0.0, x_size as u32);
        }
        let mut counts = vec![0u64; x_size];
        let mut sums = vec![0u64; x_size];
        for p in data {
            counts[p.x as usize] += 1;
            sums[p.x as usize] += u64::from(p.y);
        }
        let lambda = self.lambda;
        let total: u64 = sums.iter().sum();
        let mut numer = total as f64;
        let mut denom = 0.0;
        for (&n_x, &s_x) in counts.iter().zip(&sums) {
            if n_x == 0 {
                continue;
            }
            let (n_x, s_x) = (n_x as f64, s_x as f64);
            numer -= n_x * s_x / (n_x + lambda);
            denom += n_x * lambda / (n_x + lambda);
        }
        let intercept = numer / denom;
        let predictions = counts
            .iter()
            .zip(&sums)
            .map(|(&n_x, &s_x)| {
                let (n_x, s_x) = (n_x as f64, s_x as f64);
                intercept + (s_x - n_x * intercept) / (n_x + lambda)
            })
            .collect();
        FittedModel::new(predictions, Provenance::Base)
    }
}

/// Predicts the mean response everywhere (0 on the empty set).
#[derive(Clone, Debug, Default)]
pub struct MeanLearner;

impl Learner for MeanLearner {
    fn name(&self) -> String {
        "mean".into()
    }

    fn fit(&self, data: &Dataset, _seed: &RandomSeed) -> FittedModel {
        let value = if data.is_empty() {
            0.0
        } else {
            let sum: u64 = data.iter().map(|p| u64::from(p.y)).sum();
            sum as f64 / data.len() as f64
        };
        FittedModel::constant(value, data.space().x_size)
    }
}

/// Predicts `|D|` everywhere. Adding one point always moves the prediction
/// by exactly 1, so it is unstable for every `epsilon < 1`.
#[derive(Clone, Debug, Default)]
pub struct SizeLearner;

impl Learner for SizeLearner {
    fn name(&self) -> String {
        "size".into()
    }

    fn fit(&self, data: &Dataset, _seed: &RandomSeed) -> FittedModel {
        FittedModel::constant(data.len() as f64, data.space().x_size)
    }
}

/// Behaves like [`SizeLearner`] when `xi < rho0` and predicts 0 otherwise,
/// so its instability probability is exactly `rho0` for `epsilon < 1`.
#[derive(Clone, Debug)]
pub struct SeedThresholdLearner {
    rho0: f64,
}

impl SeedThresholdLearner {
    pub fn new(rho0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho0) {
            return Err(Error::Config(format!(
                "rho0 must lie in [0, 1], got {rho0}"
            )));
        }
        Ok(SeedThresholdLearner { rho0 })
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }
}

impl Learner for SeedThresholdLearner {
    fn name(&self) -> String {
        format!("seed-threshold(rho0={})", self.rho0)
    }

    fn fit(&self, data: &Dataset, seed: &RandomSeed) -> FittedModel {
        let value = if seed.value() < self.rho0 {
            data.len() as f64
        } else {
            0.0
        };
        FittedModel::constant(value, data.space().x_size)
    }

    fn seed_dependence(&self) -> SeedDependence {
        SeedDependence::piecewise(vec![self.rho0])
    }
}

/// JSON description of a learner: `{"name": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub name: String,
    #[serde(default)]
    pub params: Value,
}

impl LearnerSpec {
    pub fn new(name: &str, params: Value) -> Self {
        LearnerSpec {
            name: name.into(),
            params,
        }
    }

    fn param_f64(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.params.get(key) {
            Some(v) => v.as_f64().ok_or_else(|| {
                Error::Config(format!(
                    "learner '{}': param '{key}' must be a number",
                    self.name
                ))
            }),
            None => default.ok_or_else(|| {
                Error::Config(format!("learner '{}': missing param '{key}'", self.name))
            }),
        }
    }

    pub fn build(&self) -> Result<SharedLearner> {
        let learner: SharedLearner = match self.name.as_str() {
            "constant" => Arc::new(ConstantLearner {
                value: self.param_f64("value", Some(0.0))?,
            }),
            "knn" => {
                let k = self.param_f64("k", Some(1.0))?;
                if k.fract() != 0.0 || k < 1.0 {
                    return Err(Error::Config(format!(
                        "knn: k must be a positive integer, got {k}"
                    )));
                }
                Arc::new(KnnLearner::new(k as usize)?)
            }
            "ridge" => Arc::new(RidgeLearner::new(self.param_f64("lambda", Some(1.0))?)?),
            "mean" => Arc::new(MeanLearner),
            "size" => Arc::new(SizeLearner),
            "seed-threshold" => Arc::new(SeedThresholdLearner::new(self.param_f64("rho0", None)?)?),
            other => return Err(Error::Config(format!("unknown learner '{other}'"))),
        };
        Ok(learner)
    }
}

/// The built-in learners with their default parameters.
pub fn builtin_learner_zoo() -> Vec<SharedLearner> {
    vec![
        Arc::new(ConstantLearner { value: 0.0 }),
        Arc::new(KnnLearner { k: 1 }),
        Arc::new(KnnLearner { k: 3 }),
        Arc::new(RidgeLearner { lambda: 1.0 }),
        Arc::new(MeanLearner),
        Arc::new(SizeLearner),
        Arc::new(SeedThresholdLearner { rho0: 0.3 }),
    ]
}
