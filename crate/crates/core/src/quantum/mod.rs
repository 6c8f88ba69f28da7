//! Small dense state-vector toolkit: matrices, states, gates and
//! single-qubit measurement.

mod gates;
mod linalg;

pub use gates::{
    basis_rotation, basis_state, canonical_gate, hadamard, identity1, measure_qubit, nonlocal_part,
    pauli, pauli_string, rotation, star_gate, Axis, Basis, GateParams, MeasurementBranch, Parity,
    Pauli, Sign, StarGateSpec, DEGENERATE_PROBABILITY,
};
pub(crate) use linalg::apply_single_raw;
pub use linalg::{
    dagger, tensor, ComplexMatrix, StateVector, Tensor, C64, I, MAX_GATE_DIM, MAX_QUBITS, ONE, ZERO,
};
