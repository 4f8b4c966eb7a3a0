//! Finite data spaces, datasets and distributions over them.

use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::RandomSeed;

/// Tolerance on the total mass of a probability table.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Finite, integer-indexed feature and response spaces.
///
/// Responses are embedded in the reals by their index, so `y = 3` predicts
/// as `3.0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Space {
    pub x_size: u32,
    pub y_size: u32,
}

impl Space {
    pub fn new(x_size: u32, y_size: u32) -> Result<Self> {
        if x_size == 0 || y_size == 0 {
            return Err(Error::Config(format!(
                "space sizes must be positive, got {x_size}x{y_size}"
            )));
        }
        Ok(Space { x_size, y_size })
    }

    /// Number of atoms `|X| * |Y|`.
    pub fn atoms(&self) -> usize {
        self.x_size as usize * self.y_size as usize
    }

    /// Row-major atom index of `p`.
    pub fn atom_index(&self, p: DataPoint) -> usize {
        p.x as usize * self.y_size as usize + p.y as usize
    }

    pub fn atom(&self, index: usize) -> DataPoint {
        let y = self.y_size as usize;
        DataPoint::new((index / y) as u32, (index % y) as u32)
    }

    pub fn contains(&self, p: DataPoint) -> bool {
        p.x < self.x_size && p.y < self.y_size
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: u32,
    pub y: u32,
}

impl DataPoint {
    pub const fn new(x: u32, y: u32) -> Self {
        DataPoint { x, y }
    }

    /// Real embedding of the response.
    pub fn response(&self) -> f64 {
        f64::from(self.y)
    }
}

impl fmt::Display for DataPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Ordered sequence of labeled points over a fixed space.
///
/// Order matters for the leave-last-out construction; learners themselves
/// only ever see the multiset.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dataset {
    space: Space,
    points: Vec<DataPoint>,
}

impl Dataset {
    pub fn empty(space: Space) -> Self {
        Dataset {
            space,
            points: Vec::new(),
        }
    }

    pub fn new(space: Space, points: Vec<DataPoint>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !space.contains(**p)) {
            return Err(Error::Config(format!(
                "point {p} outside space {}x{}",
                space.x_size, space.y_size
            )));
        }
        Ok(Dataset { space, points })
    }

    /// Convenience constructor from `(x, y)` pairs.
    pub fn from_pairs(space: Space, pairs: &[(u32, u32)]) -> Result<Self> {
        Self::new(
            space,
            pairs.iter().map(|&(x, y)| DataPoint::new(x, y)).collect(),
        )
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DataPoint> {
        self.points.iter()
    }

    pub fn push(&mut self, p: DataPoint) -> Result<()> {
        if !self.space.contains(p) {
            return Err(Error::Config(format!("point {p} outside space")));
        }
        self.points.push(p);
        Ok(())
    }

    /// The dataset with its final point removed (`D_{n-1}` from `D_n`).
    pub fn without_last(&self) -> Dataset {
        let mut points = self.points.clone();
        points.pop();
        Dataset {
            space: self.space,
            points,
        }
    }

    /// The dataset with the point at `index` removed.
    pub fn without(&self, index: usize) -> Dataset {
        let mut points = self.points.clone();
        points.remove(index);
        Dataset {
            space: self.space,
            points,
        }
    }

    /// Contiguous sub-range of points as a new dataset.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Dataset {
        Dataset {
            space: self.space,
            points: self.points[range].to_vec(),
        }
    }

    /// Points in canonical (sorted) order.
    pub fn sorted_points(&self) -> Vec<DataPoint> {
        let mut p = self.points.clone();
        p.sort_unstable();
        p
    }

    /// Order-insensitive comparison.
    pub fn multiset_eq(&self, other: &Dataset) -> bool {
        self.space == other.space && self.sorted_points() == other.sorted_points()
    }

    pub fn contains_response(&self, y: u32) -> bool {
        self.points.iter().any(|p| p.y == y)
    }

    pub fn contains_feature(&self, x: u32) -> bool {
        self.points.iter().any(|p| p.x == x)
    }

    /// Per-atom counts, indexed by [`Space::atom_index`].
    pub fn atom_counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.space.atoms()];
        for p in &self.points {
            counts[self.space.atom_index(*p)] += 1;
        }
        counts
    }

    /// Stable 64-bit FNV-1a fingerprint of the ordered contents.
    pub fn fingerprint(&self) -> u64 {
        let words = [self.space.x_size, self.space.y_size]
            .into_iter()
            .chain(self.points.iter().flat_map(|p| [p.x, p.y]));
        fnv1a(words)
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a DataPoint;
    type IntoIter = std::slice::Iter<'a, DataPoint>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

pub(crate) fn fnv1a(words: impl IntoIterator<Item = u32>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Probability table over `X x Y`, row-major in `x`.
#[derive(Clone, Debug)]
pub struct FiniteDistribution {
    space: Space,
    probs: Vec<f64>,
    joint: WeightedIndex<f64>,
    x_marginal: WeightedIndex<f64>,
}

impl PartialEq for FiniteDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.probs == other.probs
    }
}

impl FiniteDistribution {
    pub fn new(space: Space, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != space.atoms() {
            return Err(Error::InvalidDistribution(format!(
                "expected {} probabilities for a {}x{} space, got {}",
                space.atoms(),
                space.x_size,
                space.y_size,
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "probability {p} is negative or not finite"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let joint =
            WeightedIndex::new(&probs).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        let px = marginal_x(space, &probs);
        let x_marginal =
            WeightedIndex::new(&px).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        Ok(FiniteDistribution {
            space,
            probs,
            joint,
            x_marginal,
        })
    }

    pub fn uniform(space: Space) -> Self {
        let p = 1.0 / space.atoms() as f64;
        let mut probs = vec![p; space.atoms()];
        // absorb rounding so the table sums to one within tolerance
        let drift = 1.0 - probs.iter().sum::<f64>();
        probs[0] += drift;
        Self::new(space, probs).expect("uniform table is valid")
    }

    /// All mass on a single atom.
    pub fn point_mass(space: Space, at: DataPoint) -> Result<Self> {
        if !space.contains(at) {
            return Err(Error::InvalidDistribution(format!(
                "point mass at {at} outside space"
            )));
        }
        let mut probs = vec![0.0; space.atoms()];
        probs[space.atom_index(at)] = 1.0;
        Self::new(space, probs)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, p: DataPoint) -> f64 {
        self.probs[self.space.atom_index(p)]
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        marginal_x(self.space, &self.probs)
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        let mut py = vec![0.0; self.space.y_size as usize];
        for (i, p) in self.probs.iter().enumerate() {
            py[i % self.space.y_size as usize] += p;
        }
        py
    }

    /// `sup P({(x, y)})`.
    pub fn max_point_mass(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> DataPoint {
        self.space.atom(self.joint.sample(rng))
    }

    pub fn sample_feature<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.x_marginal.sample(rng) as u32
    }

    pub fn sample_features<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<u32> {
        (0..n).map(|_| self.sample_feature(rng)).collect()
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Dataset {
        Dataset {
            space: self.space,
            points: (0..n).map(|_| self.sample_point(rng)).collect(),
        }
    }
}

fn marginal_x(space: Space, probs: &[f64]) -> Vec<f64> {
    probs
        .chunks(space.y_size as usize)
        .map(|row| row.iter().sum())
        .collect()
}

/// Draws `n` i.i.d. points from `dist`, reproducibly from `seed`.
pub fn sample_dataset(dist: &FiniteDistribution, n: usize, seed: &RandomSeed) -> Dataset {
    dist.sample_with(n, &mut seed.stream())
}
