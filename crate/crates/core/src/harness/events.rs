use serde::{Deserialize, Serialize};

use super::trace::TestTrace;
use crate::adversarial::{CellPartition, CountMask, SeedRegion};

/// Which trigger events to evaluate on a trace. `n` is the target size used
/// by the seed-region and count-mask events.
#[derive(Clone, Debug, Default)]
pub struct EventQuery {
    pub n: usize,
    pub response: Option<u32>,
    pub feature: Option<u32>,
    pub region: Option<SeedRegion>,
    pub counts: Option<(CellPartition, CountMask)>,
}

/// Event flags; `None` where the query did not ask for the event.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventFlags {
    /// `y` appears in no training set.
    pub e_y: Option<bool>,
    /// `x` appears in no training set.
    pub e_x: Option<bool>,
    /// `x` appears in no training set and in no evaluation set.
    pub e_x_eval: Option<bool>,
    /// No size-`n` round used a seed in `R`.
    pub e_r: Option<bool>,
    /// No size-`n` round had `q_{c(D)} = 1`.
    pub e_q: Option<bool>,
}

pub fn detect_events(trace: &TestTrace, query: &EventQuery) -> EventFlags {
    let rounds = &trace.rounds;
    let size_n = || rounds.iter().filter(|r| r.train.len() == query.n);
    EventFlags {
        e_y: query
            .response
            .map(|y| rounds.iter().all(|r| !r.train.contains_response(y))),
        e_x: query
            .feature
            .map(|x| rounds.iter().all(|r| !r.train.contains_feature(x))),
        e_x_eval: query.feature.map(|x| {
            rounds.iter().all(|r| {
                !r.train.contains_feature(x)
                    && !r.eval_points.as_ref().is_some_and(|e| e.contains(&x))
            })
        }),
        e_r: query
            .region
            .as_ref()
            .map(|reg| size_n().all(|r| !reg.contains(r.seed.value()))),
        e_q: query.counts.as_ref().map(|(part, mask)| {
            size_n().all(|r| {
                part.count_vector(&r.train)
                    .map(|c| !mask.get(&c))
                    .unwrap_or(true)
            })
        }),
    }
}
