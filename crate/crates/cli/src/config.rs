//! Experiment configuration: one JSON document, every field optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use stabcheck_core::bounds::SpaceSize;
use stabcheck_core::{FiniteDistribution, LearnerSpec, SharedLearner, Space};

use crate::CliError;

pub const KINDS: [&str; 6] = [
    "estimate-stability",
    "run-binom-test",
    "power-experiment",
    "adversarial-demo",
    "bounds",
    "lemma-check",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<String>,
    pub space: Space,
    /// Row-major table, `probs[x * y_size + y]`. Uniform when absent.
    pub probs: Option<Vec<f64>>,
    pub learner: LearnerSpec,

    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
    pub n: usize,
    pub n_labeled: Option<usize>,
    pub n_unlabeled: Option<usize>,
    pub b_train: Option<SpaceSize>,
    pub b_eval: Option<SpaceSize>,
    /// `transparent` or `black-box`.
    pub access: String,
    pub trials: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,

    /// estimate-stability: `monte-carlo`, `exact` or `auto` (both when
    /// enumeration fits under the cap).
    pub method: String,
    pub enumeration_cap: u64,

    /// run-binom-test: where to save the trace.
    pub trace: Option<PathBuf>,

    /// power-experiment grid. `delta_star` values are realized by the
    /// seed-threshold learner.
    pub delta_stars: Vec<f64>,
    pub deltas: Vec<f64>,
    pub kappas: Vec<u64>,

    /// adversarial-demo: distance above the critical weight.
    pub c_offset: f64,
    pub kinds: Vec<String>,

    /// bounds.
    pub delta_star: f64,
    pub x_size: Option<SpaceSize>,
    pub y_size: Option<SpaceSize>,
    pub theorem2_c: Option<f64>,
    pub max_point_mass: Option<f64>,

    /// lemma-check.
    pub max_cells: usize,
    pub n_max: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: None,
            space: Space {
                x_size: 2,
                y_size: 2,
            },
            probs: None,
            learner: LearnerSpec::new("knn", serde_json::json!({"k": 1})),
            epsilon: 0.5,
            delta: 0.2,
            alpha: 0.05,
            n: 3,
            n_labeled: None,
            n_unlabeled: None,
            b_train: None,
            b_eval: None,
            access: "transparent".into(),
            trials: 10_000,
            seed: 0,
            out: None,
            method: "auto".into(),
            enumeration_cap: 10_000_000,
            trace: None,
            delta_stars: vec![0.0, 0.05, 0.1],
            deltas: vec![0.1, 0.2],
            kappas: vec![2, 5, 10],
            c_offset: 0.01,
            kinds: vec![
                "response".into(),
                "feature-train".into(),
                "feature-eval".into(),
                "seed-region".into(),
            ],
            delta_star: 0.0,
            x_size: None,
            y_size: None,
            theorem2_c: None,
            max_point_mass: None,
            max_cells: 6,
            n_max: 20,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn distribution(&self) -> Result<FiniteDistribution, CliError> {
        let space = Space::new(self.space.x_size, self.space.y_size)?;
        Ok(match &self.probs {
            Some(p) => FiniteDistribution::new(space, p.clone())?,
            None => FiniteDistribution::uniform(space),
        })
    }

    pub fn learner(&self) -> Result<SharedLearner, CliError> {
        Ok(self.learner.build()?)
    }

    /// FNV-1a of the canonical JSON form, without the output location.
    pub fn hash(&self) -> u64 {
        let mut c = self.clone();
        c.out = None;
        c.trace = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        h
    }
}
