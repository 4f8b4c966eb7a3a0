//! Randomized property suites for the partition and multinomial lemmas.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::multinom::{data_counts_bound_check, multinomial_pmf_max_bound};
use super::partition::construct_partition_masses;
use crate::data::{FiniteDistribution, Space};
use crate::error::Result;
use crate::seed::derive_key;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub m: usize,
    /// Mass cap for partition cases; `NaN` where it does not apply.
    pub gamma: f64,
    pub cases: u64,
    pub failures: u64,
    /// Smallest `bound - value` seen (negative on failure).
    pub worst_margin: f64,
}

impl SuiteReport {
    fn new(suite: &str, m: usize, gamma: f64) -> Self {
        SuiteReport {
            suite: suite.into(),
            m,
            gamma,
            cases: 0,
            failures: 0,
            worst_margin: f64::INFINITY,
        }
    }

    fn record(&mut self, margin: f64, ok: bool) {
        self.cases += 1;
        self.failures += u64::from(!ok);
        self.worst_margin = self.worst_margin.min(margin);
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Exponential spacings: a uniform draw from the simplex.
fn simplex<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

/// A random probability vector on `atoms` atoms with every mass `<= gamma`,
/// obtained by shrinking a simplex draw towards uniform.
pub fn random_capped_masses<R: Rng>(rng: &mut R, atoms: usize, gamma: f64) -> Vec<f64> {
    let w = simplex(rng, atoms);
    let max = w.iter().copied().fold(0.0, f64::max);
    let u = 1.0 / atoms as f64;
    if max <= gamma {
        return w;
    }
    let lambda = (gamma - u) / (max - u);
    let mixed: Vec<f64> = w.iter().map(|v| lambda * v + (1.0 - lambda) * u).collect();
    let s: f64 = mixed.iter().sum();
    mixed.iter().map(|v| v / s).collect()
}

/// `samples` random distributions with max mass `<= gamma`, each split into
/// `m` cells; counts cells falling below the guarantee.
pub fn partition_suite(m: usize, gamma: f64, samples: u64, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_key(seed, m as u64));
    let mut rep = SuiteReport::new("partition", m, gamma);
    let min_atoms = (1.0 / gamma).ceil() as usize + 1;
    for _ in 0..samples {
        let atoms = rng.random_range(min_atoms..=min_atoms + 60);
        let masses = random_capped_masses(&mut rng, atoms, gamma);
        let max = masses.iter().copied().fold(0.0, f64::max);
        let r = construct_partition_masses(&masses, m, gamma.max(max))?;
        rep.record(r.min_mass - r.guarantee, r.meets_guarantee());
    }
    Ok(rep)
}

/// `samples` random `q` on `m` categories, each checked for every
/// `1 <= n <= n_max`.
pub fn multinomial_suite(m: usize, n_max: u64, samples: u64, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_key(seed, 0x100 + m as u64));
    let mut rep = SuiteReport::new("multinomial", m, f64::NAN);
    for _ in 0..samples {
        let q = simplex(&mut rng, m);
        for n in 1..=n_max {
            let c = multinomial_pmf_max_bound(n, &q)?;
            rep.record(c.bound - c.exact_max, c.holds());
        }
    }
    Ok(rep)
}

/// The combined count bound on uniform distributions over each space in
/// `spaces`, for `1 <= n <= n_max`.
pub fn data_counts_suite(m: usize, n_max: u64, spaces: &[(u32, u32)]) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("data_counts", m, f64::NAN);
    for &(x, y) in spaces {
        let dist = FiniteDistribution::uniform(Space::new(x, y)?);
        for n in 1..=n_max {
            let r = data_counts_bound_check(&dist, n, m)?;
            rep.record(r.lemma_bound - r.check.exact_max, r.holds());
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capped_masses_respect_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let w = random_capped_masses(&mut rng, 12, 0.15);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(w.iter().all(|&v| v <= 0.15 + 1e-12));
        }
    }

    #[test]
    fn small_suites_pass() {
        assert!(partition_suite(3, 0.3, 200, 1).unwrap().passed());
        assert!(multinomial_suite(3, 8, 20, 1).unwrap().passed());
        let dc = data_counts_suite(6, 8, &[(2, 3), (3, 3)]).unwrap();
        assert_eq!(dc.cases, 16);
        assert!(dc.passed());
    }
}
