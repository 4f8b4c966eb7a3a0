//! Budgeted black-box test executor.
//!
//! A [`TestStrategy`] proposes rounds `(D^(r), xi^(r)[, X^(r)])` from the
//! inputs and the history so far; the harness fits the learner, enforces the
//! training (and, for black-box models, evaluation) budgets, and records a
//! replayable [`TestTrace`].

mod events;
mod ledger;
mod strategies;
mod trace;

pub use events::{detect_events, EventFlags, EventQuery};
pub use ledger::BudgetLedger;
pub use strategies::{FixedRequests, RandomStrategy, StopImmediately};
pub use trace::{ExitReason, RoundRecord, TestTrace, TraceHeader};

use serde::{Deserialize, Serialize};

use crate::data::{fnv1a, Dataset};
use crate::error::{Error, Result};
use crate::learner::{FittedModel, Learner};
use crate::seed::RandomSeed;

/// Safety valve for strategies that never stop and only request empty sets.
pub const MAX_ROUNDS: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelAccess {
    /// The strategy sees every fitted model's full prediction table.
    Transparent,
    /// The strategy sees only evaluations at the points it requested.
    BlackBox,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Output 0.
    NotCertified,
    /// Output 1: the test declares the learner stable.
    Stable,
}

impl Verdict {
    pub fn as_u8(self) -> u8 {
        match self {
            Verdict::NotCertified => 0,
            Verdict::Stable => 1,
        }
    }

    pub fn from_bool(stable: bool) -> Verdict {
        if stable {
            Verdict::Stable
        } else {
            Verdict::NotCertified
        }
    }
}

/// Labeled data `D_l` and unlabeled features `D_u`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestInputs {
    pub labeled: Dataset,
    pub unlabeled: Vec<u32>,
}

impl TestInputs {
    pub fn new(labeled: Dataset, unlabeled: Vec<u32>) -> Result<Self> {
        let x_size = labeled.space().x_size;
        if let Some(&x) = unlabeled.iter().find(|&&x| x >= x_size) {
            return Err(Error::Config(format!(
                "unlabeled feature {x} outside the feature space"
            )));
        }
        Ok(TestInputs { labeled, unlabeled })
    }

    /// Features of the labeled points followed by the unlabeled features.
    pub fn feature(&self, index: usize) -> Option<u32> {
        let nl = self.labeled.len();
        if index < nl {
            Some(self.labeled.points()[index].x)
        } else {
            self.unlabeled.get(index - nl).copied()
        }
    }

    pub fn total_features(&self) -> usize {
        self.labeled.len() + self.unlabeled.len()
    }
}

/// Master seed from which `zeta`, `zeta^(1)`, `zeta^(2)`, ... are derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarnessSeeds {
    pub master: u64,
}

impl HarnessSeeds {
    pub fn new(master: u64) -> Self {
        HarnessSeeds { master }
    }

    /// `zeta^(r)` for `r >= 1`.
    pub fn zeta(&self, round: usize) -> RandomSeed {
        RandomSeed::derived(self.master, round as u64)
    }

    /// The final-step seed `zeta`.
    pub fn final_zeta(&self) -> RandomSeed {
        RandomSeed::derived(self.master, 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundRequest {
    pub train: Dataset,
    pub seed: RandomSeed,
    /// Evaluation points; required content in black-box mode (treated as
    /// empty when absent).
    pub eval: Option<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Fit(RoundRequest),
    Stop,
}

/// Read-only view of the completed rounds, gated by the access mode.
#[derive(Clone, Copy, Debug)]
pub struct History<'a> {
    rounds: &'a [RoundRecord],
    access: ModelAccess,
}

impl<'a> History<'a> {
    pub fn new(rounds: &'a [RoundRecord], access: ModelAccess) -> Self {
        History { rounds, access }
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn access(&self) -> ModelAccess {
        self.access
    }

    pub fn train(&self, r: usize) -> &'a Dataset {
        &self.rounds[r].train
    }

    pub fn seed(&self, r: usize) -> RandomSeed {
        self.rounds[r].seed
    }

    pub fn eval_points(&self, r: usize) -> &'a [u32] {
        self.rounds[r].eval_points.as_deref().unwrap_or(&[])
    }

    pub fn evaluations(&self, r: usize) -> &'a [f64] {
        self.rounds[r].evaluations.as_deref().unwrap_or(&[])
    }

    /// The fitted model of round `r`; refused in black-box mode.
    pub fn model(&self, r: usize) -> Result<&'a FittedModel> {
        match self.access {
            ModelAccess::BlackBox => Err(Error::InterfaceViolation(
                "fitted models are not readable in black-box mode".into(),
            )),
            ModelAccess::Transparent => self.rounds[r]
                .model
                .as_ref()
                .ok_or_else(|| Error::InterfaceViolation("round has no model".into())),
        }
    }
}

/// Round generators `g^(r)` and the final map `g`.
pub trait TestStrategy {
    fn next_round(
        &mut self,
        inputs: &TestInputs,
        history: &History<'_>,
        zeta: &RandomSeed,
    ) -> Result<Step>;

    fn finalize(
        &mut self,
        inputs: &TestInputs,
        history: &History<'_>,
        zeta: &RandomSeed,
    ) -> Result<Verdict>;
}

/// Runs `strategy` against `learner` under `ledger`.
pub fn run_test(
    strategy: &mut dyn TestStrategy,
    learner: &dyn Learner,
    inputs: &TestInputs,
    mut ledger: BudgetLedger,
    access: ModelAccess,
    seeds: HarnessSeeds,
) -> Result<TestTrace> {
    if access == ModelAccess::BlackBox && ledger.b_eval.is_none() {
        return Err(Error::Config(
            "black-box mode needs an evaluation budget".into(),
        ));
    }
    let space = inputs.labeled.space();
    let mut rounds: Vec<RoundRecord> = Vec::new();
    let exit = loop {
        if rounds.len() >= MAX_ROUNDS {
            break ExitReason::RoundLimit;
        }
        let zeta = seeds.zeta(rounds.len() + 1);
        let step = strategy.next_round(inputs, &History::new(&rounds, access), &zeta)?;
        let req = match step {
            Step::Stop => break ExitReason::Stopped,
            Step::Fit(req) => req,
        };
        if req.train.space() != space {
            return Err(Error::InvalidRequest(
                "training set lives in a different space".into(),
            ));
        }
        if let Some(eval) = &req.eval {
            if let Some(&x) = eval.iter().find(|&&x| x >= space.x_size) {
                return Err(Error::InvalidRequest(format!(
                    "evaluation point {x} outside the feature space"
                )));
            }
        }
        let train_size = req.train.len() as u64;
        if ledger.would_overflow_train(train_size) {
            break ExitReason::TrainBudget;
        }
        let eval_points = match access {
            ModelAccess::BlackBox => Some(req.eval.unwrap_or_default()),
            ModelAccess::Transparent => req.eval,
        };
        // With the full model in hand, evaluations are not a metered resource.
        let eval_size = match access {
            ModelAccess::BlackBox => eval_points.as_ref().map_or(0, |e| e.len() as u64),
            ModelAccess::Transparent => 0,
        };
        if ledger.would_overflow_eval(eval_size) {
            break ExitReason::EvalBudget;
        }
        let model = learner.fit(&req.train, &req.seed);
        ledger.charge(train_size, eval_size);
        let evaluations = eval_points
            .as_ref()
            .map(|pts| pts.iter().map(|&x| model.predict(x)).collect());
        rounds.push(RoundRecord {
            train: req.train,
            seed: req.seed,
            eval_points,
            evaluations,
            model: match access {
                ModelAccess::Transparent => Some(model),
                ModelAccess::BlackBox => None,
            },
        });
    };
    let verdict = strategy.finalize(inputs, &History::new(&rounds, access), &seeds.final_zeta())?;
    Ok(TestTrace {
        header: TraceHeader {
            access,
            master_seed: seeds.master,
            labeled_size: inputs.labeled.len(),
            unlabeled_size: inputs.unlabeled.len(),
            labeled_fingerprint: inputs.labeled.fingerprint(),
            unlabeled_fingerprint: fnv1a(inputs.unlabeled.iter().copied()),
        },
        rounds,
        verdict,
        ledger,
        exit,
    })
}

/// Runs clones of one strategy against two learners on identical inputs
/// and seed streams.
pub fn coupled_run<S: TestStrategy + Clone>(
    strategy: &S,
    learner_a: &dyn Learner,
    learner_b: &dyn Learner,
    inputs: &TestInputs,
    ledger: BudgetLedger,
    access: ModelAccess,
    seeds: HarnessSeeds,
) -> Result<(TestTrace, TestTrace)> {
    let a = run_test(
        &mut strategy.clone(),
        learner_a,
        inputs,
        ledger,
        access,
        seeds,
    )?;
    let b = run_test(
        &mut strategy.clone(),
        learner_b,
        inputs,
        ledger,
        access,
        seeds,
    )?;
    Ok((a, b))
}
