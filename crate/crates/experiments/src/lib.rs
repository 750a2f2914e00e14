//! Experiment suites for the five-qubit workbench: CHSH scans, GHZ
//! entanglement entropy and Mermin polynomials, Maxcut QAOA with the
//! Q-score benchmark, neutrino-oscillation simulation, Jones-polynomial
//! estimation, and a VQE solver for the Anderson impurity model.

pub mod chsh;
pub mod ghz;
pub mod jones;
pub mod maxcut;
pub mod neutrino;
pub mod report;
pub mod vqe;

pub use report::{ExperimentReport, MitigationConfig};
