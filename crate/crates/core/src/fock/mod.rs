//! Second-quantized bosons: canonical and grand-canonical free ensembles,
//! relaxed particle-number sectors, interacting Hamiltonians, and thermal states.

pub mod cannon;
pub mod canonical;
pub mod factor;
pub mod grand;
pub mod manybody;
pub mod relaxed;
pub mod thermal;

pub use cannon::{cannon_match, CannonMatching};
pub use canonical::{
    canonical_shift_bound, free_canonical_occupations, free_canonical_partition, CanonicalEnsembleData, ShiftBound,
};
pub use factor::{factorization_coeffs, FactorizationCoeffs};
pub use grand::{grand_canonical_mu, grand_canonical_occupations, GrandCanonical};
pub use manybody::{build_interacting_hamiltonian, wmatrix_elements, ManyBodyOperator, OccupationBasis};
pub use relaxed::{relaxed_sector_weights, SectorWeights};
pub use thermal::{
    free_energy, pair_interaction_expectation, quantum_relative_entropy, reduced_dm, thermal_relative_entropy,
    thermal_state, ThermalState,
};
