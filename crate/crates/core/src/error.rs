use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mixing angle undefined: jx - jy and b are both zero")]
    DegenerateAngle,

    #[error("couplings jx, jy and b are all zero; every state is an eigenstate")]
    DegenerateCouplings,

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    IndexOutOfRange { index: usize, num_qubits: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not hermitian (max |A - A^dagger| = {0:e})")]
    NotHermitian(f64),

    #[error("non-physical state: {0}")]
    NonPhysical(String),

    #[error("occupation parity does not match the compiled {0} sector")]
    ParityMismatch(&'static str),

    #[error("unsupported chain length {0}; the chain compiler accepts 2, 4, 8 or 16 sites")]
    UnsupportedLength(usize),

    #[error("malformed occupation: {0}")]
    MalformedOccupation(String),

    #[error("missing measurement setting {0}")]
    MissingSetting(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
