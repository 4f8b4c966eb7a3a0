//! Hardness constructions: the `A_1` wrapper, the modified learners `A'`,
//! the corrupted mixtures `P'`, and the bounds they satisfy.

mod construction;
mod counts;
mod mixture;
mod region;
mod wrap;

pub use construction::{
    adversarial_pair, btrain_condition, critical_c, deterministic_construction_check,
    deterministic_construction_check_sampled, instability_lower_bound, rho_for, ConstructionReport,
    CorruptionKind, SeedFunctionMethod, SeedRegionReport,
};
pub use counts::{
    count_vector, count_vectors_len, enumerate_count_vectors, CellPartition, CountMask,
};
pub use mixture::{mixture, MixtureDistribution, MixtureKind};
pub use region::SeedRegion;
pub use wrap::{a1_model, AdversarialWrap, Trigger};
