//! Error type shared by the simulator, the trainer, and the data pipeline.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
///
/// Variants are grouped by origin: state/circuit contract violations,
/// numeric failures encountered at run time, data-pipeline problems, and
/// configuration or I/O errors raised while reading user-supplied files.
#[derive(Debug, Error)]
pub enum Error {
    /// A computational-basis index does not fit in the requested register.
    #[error("basis index {index} out of range for {num_qubits} qubit(s) (dimension {dim})")]
    BasisIndexOutOfRange {
        index: usize,
        num_qubits: usize,
        dim: usize,
    },

    /// A gate references a qubit outside the register.
    #[error("qubit index {qubit} out of range for {num_qubits} qubit(s)")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },

    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch in {context}: {left} vs {right}")]
    DimensionMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    /// A parameter vector has the wrong length for its circuit.
    #[error("parameter vector has length {got}, circuit expects {expected}")]
    ParamCountMismatch { got: usize, expected: usize },

    /// A dense matrix realization was requested beyond the supported size.
    #[error("dense realization limited to {max_qubits} qubit(s), got {qubits}")]
    DenseTooLarge { qubits: usize, max_qubits: usize },

    /// An operator dimension is not a power of two.
    #[error("operator dimension {dim} is not a power of two")]
    NotPowerOfTwo { dim: usize },

    /// A gate description violates the circuit contract (bad control/slot layout).
    #[error("invalid gate: {0}")]
    InvalidGate(String),

    /// Mixing coefficients cannot be normalized because every raw amplitude is zero.
    #[error("all raw mixing amplitudes are zero; normalization is undefined")]
    ZeroAmplitudes,

    /// A state that must be renormalized has numerically vanished.
    #[error("degenerate state: norm {norm:.3e} is below threshold {threshold:.1e}")]
    DegenerateState { norm: f64, threshold: f64 },

    /// An input state expected to be normalized is not.
    #[error("state norm {norm} deviates from 1 beyond tolerance {tolerance}")]
    NotNormalized { norm: f64, tolerance: f64 },

    /// A term-enumeration request exceeds the configured work budget.
    #[error("enumeration budget exceeded: {required} terms > {budget}")]
    EnumerationBudget { required: u128, budget: u128 },

    /// A non-finite value (NaN or infinity) appeared during numeric work.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// A token id is outside the vocabulary.
    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    TokenOutOfRange { id: usize, vocab_size: usize },

    /// The corpus contained no tokens at all.
    #[error("corpus is empty")]
    EmptyCorpus,

    /// A token stream is too short to cut even one context window.
    #[error("token stream of length {len} too short for window size {window}")]
    StreamTooShort { len: usize, window: usize },

    /// A context has the wrong length for the model it is fed to.
    #[error("context has length {got}, model expects {expected}")]
    ContextLength { got: usize, expected: usize },

    /// A stored vocabulary disagrees with the model or the run configuration.
    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),

    /// A checkpoint file is malformed or belongs to a different format version.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// A run configuration is invalid.
    #[error("configuration error: {0}")]
    Config(String),

    /// A function argument violates its documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
