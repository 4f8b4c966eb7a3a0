//! Small strategies used for plumbing checks, fuzzing and coupling runs.

use rand::Rng;

use super::{History, RoundRequest, Step, TestInputs, TestStrategy, Verdict};
use crate::data::{fnv1a, Dataset};
use crate::error::Result;
use crate::seed::RandomSeed;

/// Stops before the first round and returns a fixed verdict.
#[derive(Clone, Debug)]
pub struct StopImmediately {
    pub verdict: Verdict,
}

impl TestStrategy for StopImmediately {
    fn next_round(&mut self, _: &TestInputs, _: &History<'_>, _: &RandomSeed) -> Result<Step> {
        Ok(Step::Stop)
    }

    fn finalize(&mut self, _: &TestInputs, _: &History<'_>, _: &RandomSeed) -> Result<Verdict> {
        Ok(self.verdict)
    }
}

/// Issues a fixed list of requests, then stops. The verdict is `Stable`
/// iff every round was performed.
#[derive(Clone, Debug)]
pub struct FixedRequests {
    pub requests: Vec<RoundRequest>,
}

impl TestStrategy for FixedRequests {
    fn next_round(&mut self, _: &TestInputs, h: &History<'_>, _: &RandomSeed) -> Result<Step> {
        Ok(match self.requests.get(h.len()) {
            Some(r) => Step::Fit(r.clone()),
            None => Step::Stop,
        })
    }

    fn finalize(&mut self, _: &TestInputs, h: &History<'_>, _: &RandomSeed) -> Result<Verdict> {
        Ok(Verdict::from_bool(h.len() == self.requests.len()))
    }
}

/// A randomized adaptive strategy: every choice is drawn from the round
/// seed `zeta^(r)` mixed with a digest of everything observed so far, and
/// the verdict is a hash of all observations. Any change in what the
/// learner reveals can therefore change the verdict.
#[derive(Clone, Debug)]
pub struct RandomStrategy {
    /// Size favoured for training sets (chosen half the time).
    pub n: usize,
    /// Largest training set size otherwise drawn.
    pub max_size: usize,
    /// Largest evaluation set size.
    pub max_eval: usize,
    /// Probability of stopping before each round.
    pub stop_prob: f64,
}

fn observation_digest(h: &History<'_>) -> u64 {
    let mut words: Vec<u32> = Vec::new();
    for r in 0..h.len() {
        words.extend(h.eval_points(r).iter().copied());
        for v in h.evaluations(r) {
            let b = v.to_bits();
            words.push(b as u32);
            words.push((b >> 32) as u32);
        }
        if let Ok(m) = h.model(r) {
            for v in m.predictions() {
                let b = v.to_bits();
                words.push(b as u32);
                words.push((b >> 32) as u32);
            }
        }
    }
    fnv1a(words)
}

impl TestStrategy for RandomStrategy {
    fn next_round(
        &mut self,
        inputs: &TestInputs,
        h: &History<'_>,
        zeta: &RandomSeed,
    ) -> Result<Step> {
        let mut rng = zeta.stream();
        let digest = observation_digest(h);
        if rng.random::<f64>() < self.stop_prob {
            return Ok(Step::Stop);
        }
        let space = inputs.labeled.space();
        let size = if rng.random::<bool>() {
            self.n
        } else {
            rng.random_range(0..=self.max_size)
        };
        let mut train = Dataset::empty(space);
        for i in 0..size {
            // mostly resample the labeled data, sometimes synthesize a point
            let from_data = !inputs.labeled.is_empty() && rng.random::<f64>() < 0.8;
            let p = if from_data {
                let j = ((digest as usize).wrapping_add(rng.random_range(0..inputs.labeled.len()))
                    + i)
                    % inputs.labeled.len();
                inputs.labeled.points()[j]
            } else {
                space.atom(rng.random_range(0..space.atoms()))
            };
            train.push(p)?;
        }
        let seed = if h.is_empty() || rng.random::<bool>() {
            RandomSeed::from_key(rng.random::<u64>() ^ digest)
        } else {
            h.seed(rng.random_range(0..h.len()))
        };
        let eval_len = rng.random_range(0..=self.max_eval);
        let eval = (0..eval_len)
            .map(|_| {
                if inputs.total_features() > 0 && rng.random::<bool>() {
                    inputs
                        .feature(rng.random_range(0..inputs.total_features()))
                        .expect("index in range")
                } else {
                    rng.random_range(0..space.x_size)
                }
            })
            .collect();
        Ok(Step::Fit(RoundRequest {
            train,
            seed,
            eval: Some(eval),
        }))
    }

    fn finalize(&mut self, _: &TestInputs, h: &History<'_>, zeta: &RandomSeed) -> Result<Verdict> {
        let d = observation_digest(h) ^ zeta.key();
        Ok(Verdict::from_bool(d.count_ones().is_multiple_of(2)))
    }
}
