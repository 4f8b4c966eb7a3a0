//! Power ceilings for any valid black-box test, and the discrete partition
//! and multinomial lemmas behind the deterministic-learner bound.

mod multinom;
mod partition;
mod suites;

pub use multinom::{
    data_counts_bound_check, multinomial_constant, multinomial_pmf_max_bound, DataCountsReport,
    MultinomialCheck, DEFAULT_INDEX_CAP,
};
pub use partition::{
    construct_partition, construct_partition_masses, partition_prefix, PartitionResult,
};
pub use suites::{
    data_counts_suite, multinomial_suite, partition_suite, random_capped_masses, SuiteReport,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A space cardinality or budget that may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceSize {
    Finite(u64),
    Infinite,
}

impl SpaceSize {
    pub fn as_f64(self) -> f64 {
        match self {
            SpaceSize::Finite(v) => v as f64,
            SpaceSize::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == SpaceSize::Infinite
    }
}

impl fmt::Display for SpaceSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSize::Finite(v) => write!(f, "{v}"),
            SpaceSize::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for SpaceSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinite" | "unlimited" => Ok(SpaceSize::Infinite),
            t => t
                .parse::<u64>()
                .map(SpaceSize::Finite)
                .map_err(|_| Error::Config(format!("cannot read size {s:?}"))),
        }
    }
}

impl Serialize for SpaceSize {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SpaceSize::Finite(v) => s.serialize_u64(*v),
            SpaceSize::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for SpaceSize {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(SpaceSize::Finite(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerBoundInputs {
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub delta_star: f64,
    pub n: u64,
    pub n_labeled: u64,
    pub n_unlabeled: u64,
    pub b_train: SpaceSize,
    pub b_eval: SpaceSize,
    pub x_size: SpaceSize,
    pub y_size: SpaceSize,
}

impl PowerBoundInputs {
    /// `(delta + 1/n) ^ 1`.
    pub fn delta_tilde(&self) -> f64 {
        (self.delta + 1.0 / self.n as f64).min(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha = {} must lie in (0, 1)",
                self.alpha
            )));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::Config(format!(
                "delta = {} must lie in [0, 1)",
                self.delta
            )));
        }
        if !(0.0..=1.0).contains(&self.delta_star) {
            return Err(Error::Config(format!(
                "delta* = {} outside [0, 1]",
                self.delta_star
            )));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        Ok(())
    }

    /// The bounds are stated for stable triples, `delta* <= delta`.
    pub fn applicable(&self) -> bool {
        self.delta_star <= self.delta
    }
}

/// `alpha * base^exponent` with the limits an infinite exponent implies.
fn scaled_power(alpha: f64, base: f64, exponent: f64) -> f64 {
    if exponent.is_infinite() {
        if base > 1.0 {
            f64::INFINITY
        } else if base == 1.0 {
            alpha
        } else {
            0.0
        }
    } else {
        alpha * base.powf(exponent)
    }
}

/// `1 - (budget / size ^ 1)`, with `budget/inf = 0` and `inf/finite = inf`.
fn coverage_denominator(budget: SpaceSize, size: SpaceSize) -> f64 {
    let ratio = match (budget, size) {
        (_, SpaceSize::Infinite) => 0.0,
        (SpaceSize::Infinite, SpaceSize::Finite(_)) => 1.0,
        (SpaceSize::Finite(b), SpaceSize::Finite(s)) => {
            if s == 0 {
                1.0
            } else {
                (b as f64 / s as f64).min(1.0)
            }
        }
    };
    1.0 - ratio
}

fn divide_or_inf(num: f64, den: f64) -> f64 {
    if den <= 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

fn add(a: SpaceSize, b: SpaceSize) -> SpaceSize {
    match (a, b) {
        (SpaceSize::Finite(x), SpaceSize::Finite(y)) => SpaceSize::Finite(x.saturating_add(y)),
        _ => SpaceSize::Infinite,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Bound {
    pub computational: f64,
    pub y_term: f64,
    pub x_term: f64,
    pub minimum: f64,
    /// `delta_tilde = 1`, so the X term is infinite.
    pub x_term_degenerate: bool,
    pub applicable: bool,
}

pub fn theorem1_bound(inp: &PowerBoundInputs) -> Result<Theorem1Bound> {
    inp.validate()?;
    let n = inp.n as f64;
    let r = (1.0 - inp.delta_star) / (1.0 - inp.delta);
    let computational = scaled_power(inp.alpha, r, inp.b_train.as_f64() / n);
    let y_term = divide_or_inf(
        scaled_power(inp.alpha, r, inp.n_labeled as f64 / n),
        coverage_denominator(inp.b_train, inp.y_size),
    );
    let dt = inp.delta_tilde();
    let x_term_degenerate = dt >= 1.0;
    let x_term = if x_term_degenerate {
        f64::INFINITY
    } else {
        divide_or_inf(
            scaled_power(
                inp.alpha,
                (1.0 - inp.delta_star) / (1.0 - dt),
                (inp.n_labeled + inp.n_unlabeled) as f64 / n,
            ),
            coverage_denominator(inp.b_train, inp.x_size),
        )
    };
    Ok(Theorem1Bound {
        computational,
        y_term,
        x_term,
        minimum: computational.min(y_term).min(x_term),
        x_term_degenerate,
        applicable: inp.applicable(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Bound {
    /// `+inf` when the bound is inapplicable.
    pub value: f64,
    pub c: f64,
    /// `C` was not supplied and the placeholder 1 was used.
    pub c_defaulted: bool,
    /// `max point mass < 0.2` and `delta + 1/n < 1`.
    pub applicable: bool,
}

/// Default for the unspecified universal constant.
pub const DEFAULT_THEOREM2_C: f64 = 1.0;

/// `(alpha + C/n) ((1 - delta*) / (1 - delta - 1/n))^(B/n)` for deterministic
/// learners.
pub fn theorem2_bound(
    inp: &PowerBoundInputs,
    c: Option<f64>,
    max_point_mass: f64,
) -> Result<Theorem2Bound> {
    inp.validate()?;
    let (c, c_defaulted) = match c {
        Some(v) if v > 0.0 && v.is_finite() => (v, false),
        Some(v) => return Err(Error::Config(format!("constant C = {v} must be positive"))),
        None => (DEFAULT_THEOREM2_C, true),
    };
    let n = inp.n as f64;
    let slack = 1.0 - inp.delta - 1.0 / n;
    let applicable = max_point_mass < 0.2 && slack > 0.0;
    let value = if applicable {
        scaled_power(
            inp.alpha + c / n,
            (1.0 - inp.delta_star) / slack,
            inp.b_train.as_f64() / n,
        )
    } else {
        f64::INFINITY
    };
    Ok(Theorem2Bound {
        value,
        c,
        c_defaulted,
        applicable,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Bound {
    pub computational: f64,
    pub y_term: f64,
    pub x_term: f64,
    pub eval_term: f64,
    pub minimum: f64,
    pub x_term_degenerate: bool,
    pub applicable: bool,
}

/// The [`theorem1_bound`] terms plus the evaluation-budget term
/// `alpha r^((N_l + N_u)/(n + 1)) / (1 - (B_train + B_eval)/|X| ^ 1)`.
pub fn theorem3_bound(inp: &PowerBoundInputs) -> Result<Theorem3Bound> {
    let t1 = theorem1_bound(inp)?;
    let r = (1.0 - inp.delta_star) / (1.0 - inp.delta);
    let eval_term = divide_or_inf(
        scaled_power(
            inp.alpha,
            r,
            (inp.n_labeled + inp.n_unlabeled) as f64 / (inp.n as f64 + 1.0),
        ),
        coverage_denominator(add(inp.b_train, inp.b_eval), inp.x_size),
    );
    Ok(Theorem3Bound {
        computational: t1.computational,
        y_term: t1.y_term,
        x_term: t1.x_term,
        eval_term,
        minimum: t1.minimum.min(eval_term),
        x_term_degenerate: t1.x_term_degenerate,
        applicable: t1.applicable,
    })
}
