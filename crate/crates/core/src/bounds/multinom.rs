use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use super::partition::{construct_partition, PartitionResult};
use crate::adversarial::count_vectors_len;
use crate::data::FiniteDistribution;
use crate::error::{Error, Result};

/// Largest `|I_{n,M}|` enumerated.
pub const DEFAULT_INDEX_CAP: u64 = 10_000_000;

/// `C_M = 1.12^(M - 1)`.
pub fn multinomial_constant(m: usize) -> f64 {
    1.12f64.powi(m as i32 - 1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultinomialCheck {
    pub exact_max: f64,
    pub argmax: Vec<u32>,
    pub bound: f64,
}

impl MultinomialCheck {
    pub fn holds(&self) -> bool {
        self.exact_max <= self.bound
    }
}

fn ln_pmf(n: u64, counts: &[u32], ln_q: &[f64]) -> f64 {
    let mut v = ln_factorial(n);
    for (&c, &lq) in counts.iter().zip(ln_q) {
        v -= ln_factorial(u64::from(c));
        if c > 0 {
            v += f64::from(c) * lq;
        }
    }
    v
}

/// Exhaustive maximum of the Multinomial(`n`, `q`) PMF over `I_{n,M}` and the
/// bound `C_M / sqrt(n^(M-1) prod q_m)`.
pub fn multinomial_pmf_max_bound(n: u64, q: &[f64]) -> Result<MultinomialCheck> {
    multinomial_pmf_max_bound_capped(n, q, DEFAULT_INDEX_CAP)
}

pub fn multinomial_pmf_max_bound_capped(n: u64, q: &[f64], cap: u64) -> Result<MultinomialCheck> {
    let m = q.len();
    if m < 2 {
        return Err(Error::Precondition("need M >= 2 categories".into()));
    }
    if n == 0 {
        return Err(Error::Precondition("need n >= 1".into()));
    }
    if q.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Precondition("all q_m must be positive".into()));
    }
    if (q.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution("q must sum to 1".into()));
    }
    let required = count_vectors_len(n as usize, m);
    if required > cap as f64 {
        return Err(Error::EnumerationCap { required, cap });
    }
    let ln_q: Vec<f64> = q.iter().map(|v| v.ln()).collect();
    let mut best = f64::NEG_INFINITY;
    let mut argmax = vec![0u32; m];
    let mut cur = vec![0u32; m];
    // iterate compositions of n into m parts
    fn rec(
        slot: usize,
        remaining: u32,
        n: u64,
        cur: &mut [u32],
        ln_q: &[f64],
        best: &mut f64,
        argmax: &mut Vec<u32>,
    ) {
        if slot + 1 == cur.len() {
            cur[slot] = remaining;
            let v = ln_pmf(n, cur, ln_q);
            if v > *best {
                *best = v;
                argmax.copy_from_slice(cur);
            }
            return;
        }
        for c in 0..=remaining {
            cur[slot] = c;
            rec(slot + 1, remaining - c, n, cur, ln_q, best, argmax);
        }
    }
    rec(0, n as u32, n, &mut cur, &ln_q, &mut best, &mut argmax);
    let prod: f64 = q.iter().product();
    let bound = multinomial_constant(m) / ((n as f64).powi(m as i32 - 1) * prod).sqrt();
    Ok(MultinomialCheck {
        exact_max: best.exp(),
        argmax,
        bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataCountsReport {
    pub partition: PartitionResult,
    pub gamma: f64,
    pub check: MultinomialCheck,
    /// `C_{M,gamma} = C_M / L^(M/2)` with `L` the partition guarantee.
    pub c_m_gamma: f64,
    /// `C_{M,gamma} / n^((M-1)/2)`.
    pub lemma_bound: f64,
}

impl DataCountsReport {
    pub fn holds(&self) -> bool {
        self.check.holds() && self.check.exact_max <= self.lemma_bound
    }
}

/// Partition with `gamma` = max point mass, then bound the largest
/// probability of a count vector.
pub fn data_counts_bound_check(
    dist: &FiniteDistribution,
    n: u64,
    m: usize,
) -> Result<DataCountsReport> {
    let gamma = dist.max_point_mass();
    let partition = construct_partition(dist, m, gamma)?;
    let check = multinomial_pmf_max_bound(n, &partition.cell_masses)?;
    let c_m_gamma = multinomial_constant(m) / partition.guarantee.powf(m as f64 / 2.0);
    let lemma_bound = c_m_gamma / (n as f64).powf((m as f64 - 1.0) / 2.0);
    Ok(DataCountsReport {
        partition,
        gamma,
        check,
        c_m_gamma,
        lemma_bound,
    })
}
