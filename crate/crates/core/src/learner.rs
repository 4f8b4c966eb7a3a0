//! The learner interface and fitted models.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::seed::RandomSeed;

/// Where a fitted model came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Base,
    /// Output of the leave-one-out maximum wrapper.
    AdversarialA1,
    /// Produced by an adversarial wrap; the table mixes base and A1 values.
    AdversarialWrapped,
}

/// A fitted prediction function, tabulated over every feature value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    predictions: Vec<f64>,
    provenance: Provenance,
}

impl FittedModel {
    pub fn new(predictions: Vec<f64>, provenance: Provenance) -> Self {
        debug_assert!(predictions.iter().all(|v| v.is_finite()));
        FittedModel {
            predictions,
            provenance,
        }
    }

    pub fn constant(value: f64, x_size: u32) -> Self {
        Self::new(vec![value; x_size as usize], Provenance::Base)
    }

    /// Prediction at feature `x`. Panics if `x` is outside the feature space.
    pub fn predict(&self, x: u32) -> f64 {
        self.predictions[x as usize]
    }

    pub fn get(&self, x: u32) -> Option<f64> {
        self.predictions.get(x as usize).copied()
    }

    pub fn predictions(&self) -> &[f64] {
        &self.predictions
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }
}

/// How a learner's output depends on the seed value `xi`.
#[derive(Clone, Debug, PartialEq)]
pub enum SeedDependence {
    /// Output ignores the seed.
    None,
    /// Output is constant on each interval between consecutive breakpoints
    /// (sorted, strictly inside `(0, 1)`); intervals are half-open `[a, b)`.
    Piecewise(Vec<f64>),
    /// Anything else; exact enumeration must fall back to sampling seeds.
    General,
}

impl SeedDependence {
    /// Combines two dependences: the result is piecewise on the union of
    /// breakpoints, or general if either side is.
    pub fn merge(&self, other: &SeedDependence) -> SeedDependence {
        match (self, other) {
            (SeedDependence::General, _) | (_, SeedDependence::General) => SeedDependence::General,
            (SeedDependence::None, SeedDependence::None) => SeedDependence::None,
            _ => {
                let mut points = self.breakpoints();
                points.extend(other.breakpoints());
                SeedDependence::piecewise(points)
            }
        }
    }

    /// Normalizes a breakpoint list: sorted, deduplicated, restricted to `(0, 1)`.
    pub fn piecewise(mut points: Vec<f64>) -> SeedDependence {
        points.retain(|p| *p > 0.0 && *p < 1.0);
        points.sort_by(f64::total_cmp);
        points.dedup();
        if points.is_empty() {
            SeedDependence::None
        } else {
            SeedDependence::Piecewise(points)
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            SeedDependence::Piecewise(p) => p.clone(),
            _ => Vec::new(),
        }
    }

    /// Seed buckets `(lo, hi)` covering `[0, 1)`, or `None` for general dependence.
    pub fn buckets(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            SeedDependence::None => Some(vec![(0.0, 1.0)]),
            SeedDependence::Piecewise(points) => {
                let mut edges = Vec::with_capacity(points.len() + 2);
                edges.push(0.0);
                edges.extend(points.iter().copied());
                edges.push(1.0);
                Some(edges.windows(2).map(|w| (w[0], w[1])).collect())
            }
            SeedDependence::General => None,
        }
    }
}

/// A symmetric, seed-randomized learning algorithm `A(D; xi)`.
///
/// Implementations must be pure: the fitted model is a function of the
/// dataset and the seed only.
pub trait Learner: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn fit(&self, data: &Dataset, seed: &RandomSeed) -> FittedModel;

    /// True if `fit` ignores the seed.
    fn is_deterministic(&self) -> bool {
        matches!(self.seed_dependence(), SeedDependence::None)
    }

    /// True if the output depends on the dataset only through its multiset.
    fn is_symmetric(&self) -> bool {
        true
    }

    fn seed_dependence(&self) -> SeedDependence {
        SeedDependence::None
    }
}

pub type SharedLearner = Arc<dyn Learner>;

/// Fits `learner` on `data` with `seed`.
pub fn fit(learner: &dyn Learner, data: &Dataset, seed: &RandomSeed) -> FittedModel {
    learner.fit(data, seed)
}
