use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("gate {gate} {reason}")]
    GateAngle {
        gate: &'static str,
        reason: &'static str,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("qubit index {index} out of range for a {qubits}-qubit state")]
    QubitOutOfRange { index: usize, qubits: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("{what} must lie in [{lo}, {hi}], got {value}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("probabilities do not sum to one (p0 + p1 = {0})")]
    NotNormalized(f64),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("AUC undefined: truth labels contain a single class")]
    SingleClass,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
