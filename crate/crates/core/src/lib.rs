//! Desk-scale quantum workbench core: an exact statevector/density-matrix
//! simulator with configurable noise, a transpiler to the native gate set
//! {R(θ,φ), CZ} on a star coupling map, observable estimation and state
//! tomography, and the error-mitigation stack (readout error mitigation,
//! randomized compiling, zero-noise extrapolation, bootstrap error bars).
//!
//! Qubit ordering convention: the first qubit (index 0) is the most
//! significant bit of every basis-state index and measured bitstring.

pub mod backend;
pub mod circuit;
pub mod error;
pub mod math;
pub mod mitigation;
pub mod noise;
pub mod pauli;
pub mod qasm;
pub mod qutrit;
pub mod rng;
pub mod sim;
pub mod tomography;
pub mod transpiler;

pub use backend::Backend;
pub use circuit::{Circuit, Gate};
pub use error::{Error, Result};
pub use noise::NoiseProfile;
pub use pauli::{Observable, PauliString};
pub use sim::{
    partial_trace, run_statevector, sample_counts, state_fidelity, Counts, QuantumState,
};
pub use transpiler::{transpile, NativeCircuit, Topology};
