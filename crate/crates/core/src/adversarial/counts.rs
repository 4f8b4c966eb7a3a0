use std::collections::HashMap;

use rand::Rng;

use crate::data::{DataPoint, Dataset, Space};
use crate::error::{Error, Result};

/// Assignment of the atoms of `X x Y` to `m` cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellPartition {
    space: Space,
    m: usize,
    assignment: Vec<Option<usize>>,
}

impl CellPartition {
    /// `assignment[atom]` is the cell of that atom, `None` if uncovered.
    pub fn new(space: Space, m: usize, assignment: Vec<Option<usize>>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Partition(
                "a partition needs at least one cell".into(),
            ));
        }
        if assignment.len() != space.atoms() {
            return Err(Error::Partition(format!(
                "assignment has {} entries for {} atoms",
                assignment.len(),
                space.atoms()
            )));
        }
        if let Some(c) = assignment.iter().flatten().find(|&&c| c >= m) {
            return Err(Error::Partition(format!(
                "cell index {c} out of range for M = {m}"
            )));
        }
        Ok(CellPartition {
            space,
            m,
            assignment,
        })
    }

    /// Builds the assignment from explicit cells of atom indices.
    pub fn from_cells(space: Space, cells: &[Vec<usize>]) -> Result<Self> {
        let mut assignment = vec![None; space.atoms()];
        for (c, atoms) in cells.iter().enumerate() {
            for &a in atoms {
                if a >= assignment.len() {
                    return Err(Error::Partition(format!("atom {a} outside the space")));
                }
                if assignment[a].is_some() {
                    return Err(Error::Partition(format!("atom {a} assigned twice")));
                }
                assignment[a] = Some(c);
            }
        }
        Self::new(space, cells.len(), assignment)
    }

    /// Cell `atom % m` for every atom.
    pub fn round_robin(space: Space, m: usize) -> Result<Self> {
        Self::new(
            space,
            m,
            (0..space.atoms()).map(|a| Some(a % m.max(1))).collect(),
        )
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    pub fn cell_of(&self, p: DataPoint) -> Result<usize> {
        if !self.space.contains(p) {
            return Err(Error::Partition(format!("point {p} outside the space")));
        }
        self.assignment[self.space.atom_index(p)]
            .ok_or_else(|| Error::Partition(format!("point {p} lies in no cell")))
    }

    /// `c(D)`: how many points of `data` fall in each cell.
    pub fn count_vector(&self, data: &Dataset) -> Result<Vec<u32>> {
        let mut counts = vec![0u32; self.m];
        for p in data {
            counts[self.cell_of(*p)?] += 1;
        }
        Ok(counts)
    }
}

/// `count_vector` as a free function.
pub fn count_vector(data: &Dataset, partition: &CellPartition) -> Result<Vec<u32>> {
    partition.count_vector(data)
}

/// `|I_{n,M}| = C(n + M - 1, M - 1)` as a float.
pub fn count_vectors_len(n: usize, m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let mut v = 1.0f64;
    for j in 1..m {
        v = v * (n + j) as f64 / j as f64;
    }
    v.round()
}

/// All of `I_{n,M}` in lexicographic order, `(0, ..., 0, n)` first.
pub fn enumerate_count_vectors(n: usize, m: usize) -> Vec<Vec<u32>> {
    fn rec(remaining: u32, slots: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 1 {
            cur.push(remaining);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=remaining {
            cur.push(v);
            rec(remaining - v, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if m > 0 {
        rec(n as u32, m, &mut Vec::with_capacity(m), &mut out);
    }
    out
}

/// A mask `q in {0,1}^{I_{n,M}}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountMask {
    n: usize,
    m: usize,
    index: HashMap<Vec<u32>, usize>,
    bits: Vec<bool>,
}

impl CountMask {
    pub fn from_fn(n: usize, m: usize, mut bit: impl FnMut(&[u32]) -> bool) -> Self {
        let vectors = enumerate_count_vectors(n, m);
        let bits = vectors.iter().map(|v| bit(v)).collect();
        let index = vectors
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, i))
            .collect();
        CountMask { n, m, index, bits }
    }

    pub fn constant(n: usize, m: usize, value: bool) -> Self {
        Self::from_fn(n, m, |_| value)
    }

    /// `q_i` iid Bernoulli(`rho`), drawn in lexicographic order of `i`.
    pub fn sample<R: Rng + ?Sized>(n: usize, m: usize, rho: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::Config(format!(
                "mask probability {rho} outside [0, 1]"
            )));
        }
        Ok(Self::from_fn(n, m, |_| rng.random::<f64>() < rho))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// `q_{counts}`; vectors outside `I_{n,M}` read as 0.
    pub fn get(&self, counts: &[u32]) -> bool {
        self.index.get(counts).is_some_and(|&i| self.bits[i])
    }

    /// `(i, q_i)` pairs in lexicographic order.
    pub fn entries(&self) -> Vec<(Vec<u32>, bool)> {
        let mut v: Vec<(Vec<u32>, bool)> = self
            .index
            .iter()
            .map(|(k, &i)| (k.clone(), self.bits[i]))
            .collect();
        v.sort();
        v
    }
}
