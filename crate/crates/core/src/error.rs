use thiserror::Error;

/// Errors raised by the simulator, trainer and data generators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semi-definite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("empty qubit selection")]
    EmptySelection,

    #[error("parameter shape mismatch for {layer}: expected {expected} values, got {actual}")]
    ParameterShape {
        layer: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("input {index} is not a product state (marginal purity {purity})")]
    NonProductInput { index: usize, purity: f64 },

    #[error("missing branch circuit for measurement outcome {0}")]
    MissingBranch(usize),

    #[error("unsupported gate in circuit: {0}")]
    UnsupportedGate(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
