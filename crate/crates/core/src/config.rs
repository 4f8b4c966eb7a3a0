//! JSON problem documents:
//! `{"space": {"x_size": 2, "y_size": 2}, "probs": [...], "learner": {"name": ..., "params": {...}}}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{FiniteDistribution, Space};
use crate::error::Result;
use crate::learner::SharedLearner;
use crate::zoo::LearnerSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub space: Space,
    /// Row-major probability table, `probs[x * y_size + y]`.
    pub probs: Vec<f64>,
    pub learner: LearnerSpec,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn distribution(&self) -> Result<FiniteDistribution> {
        let space = Space::new(self.space.x_size, self.space.y_size)?;
        FiniteDistribution::new(space, self.probs.clone())
    }

    pub fn build_learner(&self) -> Result<SharedLearner> {
        self.learner.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn parses_document() {
        let cfg = ProblemConfig::from_json(
            r#"{"space": {"x_size": 2, "y_size": 2},
                "probs": [0.25, 0.25, 0.25, 0.25],
                "learner": {"name": "knn", "params": {"k": 1}}}"#,
        )
        .unwrap();
        assert_eq!(cfg.distribution().unwrap().space().atoms(), 4);
        assert_eq!(cfg.build_learner().unwrap().name(), "knn(k=1)");
    }

    #[test]
    fn rejects_unnormalized_table() {
        let cfg = ProblemConfig::from_json(
            r#"{"space": {"x_size": 1, "y_size": 2}, "probs": [0.5, 0.4],
                "learner": {"name": "mean"}}"#,
        )
        .unwrap();
        assert!(matches!(
            cfg.distribution(),
            Err(Error::InvalidDistribution(_))
        ));
    }
}
