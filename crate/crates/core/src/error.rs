use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("register of {requested} qubits exceeds the {max}-qubit capacity")]
    Capacity { requested: usize, max: usize },

    #[error("qubit {qubit} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },

    #[error("gate targets must be distinct (qubit {0} repeated)")]
    DuplicateQubit(usize),

    #[error("parameter slot {slot} missing (only {len} parameters supplied)")]
    MissingParameter { slot: usize, len: usize },

    #[error("control qubit {0} is also a target of the controlled subcircuit")]
    ControlTargetOverlap(usize),

    #[error("control value {value} does not fit in {bits} control qubits")]
    InvalidControlValue { value: usize, bits: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("observable is not Hermitian (deviation {0:e})")]
    NonHermitian(f64),

    #[error("observable addresses qubit {qubit} outside the {working}-qubit working register")]
    ObservableScope { qubit: usize, working: usize },

    #[error("cannot amplitude-encode a vector with norm {0:e}")]
    ZeroNorm(f64),

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("invalid architecture: {0}")]
    Architecture(String),

    #[error("{what} has length {found}, expected {expected}")]
    ParameterLength {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter id: {0}")]
    InvalidParam(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("block of dimension {dim} exceeds the limit of {limit} for this mode")]
    OversizeBlock { dim: String, limit: usize },

    #[error("IDX format error: {0}")]
    IdxFormat(String),

    #[error("IDX payload truncated: need {needed} bytes, found {found}")]
    Truncated { needed: usize, found: usize },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("non-finite loss: {0}")]
    NonFinite(String),
}
