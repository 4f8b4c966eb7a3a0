//! Black-box testing of algorithmic stability under computational budgets.
//!
//! The crate is organized around the objects of the testing problem:
//!
//! * [`data`], [`seed`], [`learner`] and [`zoo`]: finite data spaces, seeds,
//!   the symmetric learner interface and a set of concrete learners.
//! * [`stability`]: the instability probability `delta*_eps`, estimated by
//!   Monte Carlo or computed exactly by enumeration.
//! * [`harness`]: the budgeted black-box test executor, traces and the
//!   trigger events used by the indistinguishability couplings.
//! * [`binom_test`]: the sample-splitting binomial test with exact
//!   randomized thresholds and its closed-form power.
//! * [`adversarial`]: the leave-one-out maximum wrapper, the modified
//!   learners and corrupted mixtures that witness hardness.
//! * [`bounds`]: closed-form power ceilings and the partition and
//!   multinomial lemmas behind the deterministic-learner bound.

pub mod adversarial;
pub mod bounds;
pub mod config;
pub mod data;
pub mod error;
pub mod harness;
pub mod learner;
pub mod seed;
pub mod stability;
pub mod zoo;

pub use config::ProblemConfig;
pub use data::{sample_dataset, DataPoint, Dataset, FiniteDistribution, Space};
pub use error::{Error, Result};
pub use learner::{fit, FittedModel, Learner, Provenance, SeedDependence, SharedLearner};
pub use seed::RandomSeed;
pub use zoo::{builtin_learner_zoo, LearnerSpec};
