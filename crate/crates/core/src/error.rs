use thiserror::Error;

/// Errors produced by the simulator, transpiler and mitigation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {num_qubits}-qubit register")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("gate acts twice on qubit {0}")]
    DuplicateQubit(usize),

    #[error("gate parameter is not finite: {0}")]
    NonFiniteParameter(f64),

    #[error("matrix is not unitary (deviation {deviation:.3e} exceeds {tolerance:.1e})")]
    NotUnitary { deviation: f64, tolerance: f64 },

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{0}")]
    InvalidState(String),

    #[error("circuit contains a measurement where none is allowed")]
    UnexpectedMeasurement,

    #[error("circuit contains no measurement")]
    MissingMeasurement,

    #[error("invalid probability {0}: must lie in [0, 1)")]
    InvalidProbability(f64),

    #[error("readout confusion row does not sum to 1 (sum = {0})")]
    InvalidConfusionRow(f64),

    #[error("no confusion matrix configured for qubit {0}")]
    MissingConfusion(usize),

    #[error("assignment matrix is ill-conditioned (estimated condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("fit did not converge: {0}")]
    NonConvergence(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("topology is disconnected; cannot route two-qubit gates")]
    DisconnectedTopology,

    #[error("eigensolver failed to converge after {0} sweeps")]
    EigenFailure(usize),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
