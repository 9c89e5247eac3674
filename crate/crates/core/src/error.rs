use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: probability {value} outside (0, 0.5]")]
    ProbabilityOutOfRange { line: usize, value: f64 },

    #[error("line {line}: negative {kind} index in `{token}`")]
    NegativeIndex {
        line: usize,
        kind: &'static str,
        token: String,
    },

    #[error("invalid code spec: {0}")]
    InvalidSpec(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("mechanism {index} flips {count} detectors and has no graph-like decomposition")]
    NotGraphLike { index: usize, count: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model has {mechanisms} mechanisms; exhaustive enumeration supports at most {max}")]
    ModelTooLarge { mechanisms: usize, max: usize },

    #[error("{fired} fired detectors exceeds the matching limit of {max}")]
    TooManyDetections { fired: usize, max: usize },

    #[error("detectors {a} and {b} are not connected in the matching graph")]
    Disconnected { a: usize, b: usize },

    #[error("{qubits} qubits exceeds the simulator cap of {max}")]
    QubitCapExceeded { qubits: usize, max: usize },

    #[error("fingerprint mismatch: expected {expected}, found {found}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("empty dataset: {0}")]
    EmptyData(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
