use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ledger::BudgetLedger;
use super::{ModelAccess, Verdict};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learner::FittedModel;
use crate::seed::RandomSeed;

/// Why the round loop ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitReason {
    Stopped,
    TrainBudget,
    EvalBudget,
    RoundLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub train: Dataset,
    pub seed: RandomSeed,
    pub eval_points: Option<Vec<u32>>,
    pub evaluations: Option<Vec<f64>>,
    /// Present in transparent mode only.
    pub model: Option<FittedModel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub access: ModelAccess,
    pub master_seed: u64,
    pub labeled_size: usize,
    pub unlabeled_size: usize,
    pub labeled_fingerprint: u64,
    pub unlabeled_fingerprint: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestTrace {
    pub header: TraceHeader,
    pub rounds: Vec<RoundRecord>,
    pub verdict: Verdict,
    pub ledger: BudgetLedger,
    pub exit: ExitReason,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum TraceLine {
    Header(TraceHeader),
    Round(RoundRecord),
    Verdict {
        verdict: Verdict,
        ledger: BudgetLedger,
        exit: ExitReason,
    },
}

impl TestTrace {
    pub fn total_train(&self) -> u64 {
        self.rounds.iter().map(|r| r.train.len() as u64).sum()
    }

    pub fn total_eval(&self) -> u64 {
        self.rounds
            .iter()
            .map(|r| r.eval_points.as_ref().map_or(0, |e| e.len() as u64))
            .sum()
    }

    /// Checks the recorded rounds against the ledger limits.
    pub fn respects_budget(&self) -> bool {
        let eval_ok = match (self.header.access, self.ledger.b_eval) {
            (ModelAccess::BlackBox, Some(b)) => self.total_eval() <= b,
            _ => true,
        };
        self.total_train() <= self.ledger.b_train && eval_ok && self.ledger.invariants_hold()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        let mut line = |l: &TraceLine| -> Result<()> {
            serde_json::to_writer(&mut out, l)?;
            out.write_all(b"\n")?;
            Ok(())
        };
        line(&TraceLine::Header(self.header.clone()))?;
        for r in &self.rounds {
            line(&TraceLine::Round(r.clone()))?;
        }
        line(&TraceLine::Verdict {
            verdict: self.verdict,
            ledger: self.ledger,
            exit: self.exit,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_jsonl(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<TestTrace> {
        let mut header = None;
        let mut rounds = Vec::new();
        let mut tail = None;
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<TraceLine>(&line)? {
                TraceLine::Header(h) => header = Some(h),
                TraceLine::Round(r) => rounds.push(r),
                TraceLine::Verdict {
                    verdict,
                    ledger,
                    exit,
                } => tail = Some((verdict, ledger, exit)),
            }
        }
        let header = header.ok_or_else(|| Error::Config("trace has no header line".into()))?;
        let (verdict, ledger, exit) =
            tail.ok_or_else(|| Error::Config("trace has no verdict line".into()))?;
        Ok(TestTrace {
            header,
            rounds,
            verdict,
            ledger,
            exit,
        })
    }

    pub fn load(path: &Path) -> Result<TestTrace> {
        Self::read_jsonl(BufReader::new(File::open(path)?))
    }
}
