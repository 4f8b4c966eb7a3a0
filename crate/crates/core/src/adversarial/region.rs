use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite union of half-open seed intervals `[a, b)` inside `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRegion {
    intervals: Vec<(f64, f64)>,
}

impl SeedRegion {
    /// Validates and merges the intervals. Empty intervals (`a == b`) are
    /// dropped; reversed or out-of-range ones are an error.
    pub fn new(intervals: &[(f64, f64)]) -> Result<Self> {
        let mut ivs: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for &(a, b) in intervals {
            if !(a.is_finite() && b.is_finite()) || a < 0.0 || b > 1.0 || a > b {
                return Err(Error::Config(format!("malformed seed interval [{a}, {b})")));
            }
            if a < b {
                ivs.push((a, b));
            }
        }
        ivs.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(ivs.len());
        for (a, b) in ivs {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Ok(SeedRegion { intervals: merged })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(&[(a, b)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// Lebesgue measure.
    pub fn leb(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, value: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= value && value < b)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.intervals.iter().flat_map(|&(a, b)| [a, b]).collect()
    }
}
