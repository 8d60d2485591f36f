use thiserror::Error;

/// Errors produced by state, gate, channel and sequence operations.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    IndexOutOfRange { index: usize, n_qubits: usize },

    #[error("invalid basis label {0:?}")]
    InvalidLabel(String),

    #[error("keep set must be a nonempty subset of the qubit indices")]
    EmptyKeepSet,

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("expectation value has imaginary residue {0:.3e}")]
    ImaginaryResidue(f64),

    #[error("Kraus completeness violated (max deviation {0:.3e})")]
    CompletenessViolation(f64),

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("flip operator commutes with the stabilizer; no pumping possible")]
    FlipCommutes,

    #[error("gate kind {0} has no unitary representation")]
    DissipativeGate(&'static str),

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("state invariant violated: {0}")]
    InvariantViolation(String),

    #[error("operator basis is not orthonormal and complete")]
    BadOperatorBasis,

    #[error("sequence parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
