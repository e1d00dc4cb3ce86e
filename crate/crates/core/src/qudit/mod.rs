//! Amplitude-level simulation of single qudits and qudit pairs.

mod basis;
mod measure;
mod operator;
mod state;

pub use basis::{
    basis_change, builtin_basis_set, correlation_map, correlation_rules, cross_correlation_map,
    max_builtin_bases, partner_set, Basis, BasisSet, CorrelationRule,
};
pub use measure::{
    bell_distribution, bell_measure, born_probabilities, measure_pair_local, measure_single,
    LocalOutcome, PairSide,
};
pub use operator::{
    apply_to_photon_a, apply_to_photon_b, compose_indices, hadamard_matrix, pauli_unitary,
    pauli_unitary_of, PauliIndex, Unitary,
};
pub use state::{make_bell_state, root_of_unity, Amplitude, PairState, QuditState, TOLERANCE};
