use serde::{Deserialize, Serialize};

use crate::adversarial::CellPartition;
use crate::data::FiniteDistribution;
use crate::error::{Error, Result};

/// Slack for floating-point comparisons against the guarantee.
const TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    /// Cell of each atom.
    pub assignment: Vec<usize>,
    pub cell_masses: Vec<f64>,
    pub min_mass: f64,
    /// `min{1/(2M - 1), 1 - (M - 1) gamma}`.
    pub guarantee: f64,
}

impl PartitionResult {
    pub fn m(&self) -> usize {
        self.cell_masses.len()
    }

    pub fn meets_guarantee(&self) -> bool {
        self.min_mass >= self.guarantee - TOL
    }

    pub fn to_cell_partition(&self, dist: &FiniteDistribution) -> Result<CellPartition> {
        CellPartition::new(
            dist.space(),
            self.m(),
            self.assignment.iter().map(|&c| Some(c)).collect(),
        )
    }
}

/// Indices of atoms sorted by mass, heaviest first (ties by index).
fn by_mass_desc(masses: &[f64], atoms: &[usize]) -> Vec<usize> {
    let mut order = atoms.to_vec();
    order.sort_by(|&a, &b| masses[b].total_cmp(&masses[a]).then(a.cmp(&b)));
    order
}

/// Shortest heaviest-first prefix of `atoms` whose mass reaches `gamma/2`.
/// Masses are taken relative to `total`.
fn prefix_of(masses: &[f64], atoms: &[usize], total: f64, gamma: f64) -> Vec<usize> {
    let mut acc = 0.0;
    let mut out = Vec::new();
    for a in by_mass_desc(masses, atoms) {
        if acc >= gamma / 2.0 - TOL {
            break;
        }
        acc += masses[a] / total;
        out.push(a);
    }
    out
}

/// A set `C` of atoms with `gamma/2 <= P(C) <= gamma`, built by the
/// heaviest-first greedy prefix. Requires `max mass <= gamma`.
pub fn partition_prefix(dist: &FiniteDistribution, gamma: f64) -> Result<Vec<usize>> {
    let masses = dist.probs();
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Inapplicable(format!(
            "gamma = {gamma} outside [0, 1]"
        )));
    }
    if dist.max_point_mass() > gamma + TOL {
        return Err(Error::Inapplicable(format!(
            "max point mass {} exceeds gamma = {gamma}",
            dist.max_point_mass()
        )));
    }
    let atoms: Vec<usize> = (0..masses.len()).collect();
    Ok(prefix_of(masses, &atoms, 1.0, gamma))
}

/// Partition of a discrete distribution into `m` cells with
/// `min P(C_m) >= min{1/(2M - 1), 1 - (M - 1) gamma}`.
pub fn construct_partition(
    dist: &FiniteDistribution,
    m: usize,
    gamma: f64,
) -> Result<PartitionResult> {
    construct_partition_masses(dist.probs(), m, gamma)
}

/// [`construct_partition`] on a raw probability vector.
pub fn construct_partition_masses(masses: &[f64], m: usize, gamma: f64) -> Result<PartitionResult> {
    if m < 2 {
        return Err(Error::Inapplicable("need at least two cells".into()));
    }
    let total: f64 = masses.iter().sum();
    if masses.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(
            "masses must be a probability vector".into(),
        ));
    }
    let max = masses.iter().copied().fold(0.0, f64::max);
    if max > gamma + TOL {
        return Err(Error::Inapplicable(format!(
            "max point mass {max} exceeds gamma = {gamma}"
        )));
    }
    if gamma >= 1.0 / (m as f64 - 1.0) {
        return Err(Error::Inapplicable(format!(
            "gamma = {gamma} must be below 1/(M - 1) = {}",
            1.0 / (m as f64 - 1.0)
        )));
    }
    let mut assignment = vec![usize::MAX; masses.len()];
    let mut remaining: Vec<usize> = (0..masses.len()).collect();
    let mut rest_mass = 1.0;
    let mut g = gamma;
    for cell in 0..m - 1 {
        let cells_left = m - cell;
        let g_eff = g.max(2.0 / (2.0 * cells_left as f64 - 1.0));
        let chosen = prefix_of(masses, &remaining, rest_mass, g_eff);
        let chosen_mass: f64 = chosen.iter().map(|&a| masses[a]).sum();
        for &a in &chosen {
            assignment[a] = cell;
        }
        remaining.retain(|a| !chosen.contains(a));
        rest_mass -= chosen_mass;
        if rest_mass <= 0.0 {
            return Err(Error::Partition(
                "ran out of mass before the last cell".into(),
            ));
        }
        g = g_eff / (rest_mass / (rest_mass + chosen_mass));
    }
    for a in remaining {
        assignment[a] = m - 1;
    }
    let mut cell_masses = vec![0.0; m];
    for (a, &c) in assignment.iter().enumerate() {
        cell_masses[c] += masses[a];
    }
    let min_mass = cell_masses.iter().copied().fold(f64::INFINITY, f64::min);
    let guarantee = (1.0 / (2.0 * m as f64 - 1.0)).min(1.0 - (m as f64 - 1.0) * gamma);
    Ok(PartitionResult {
        assignment,
        cell_masses,
        min_mass,
        guarantee,
    })
}
