use alloc::string::String;
use alloc::vec::Vec;

use crate::protocol::Violation;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown register `{0}`")]
    UnknownRegister(String),

    #[error("qubit index {index} out of range for register `{register}` ({size} qubits)")]
    QubitOutOfRange {
        register: String,
        index: usize,
        size: usize,
    },

    #[error("duplicate register name `{0}`")]
    DuplicateRegister(String),

    #[error("qubit {0} used twice by one gate")]
    DuplicateQubit(String),

    #[error("gate {gate} not unitary (‖U†U−I‖ = {deviation:.3e})")]
    NotUnitary { gate: String, deviation: f64 },

    #[error("matrix not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("operator not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state not normalized (‖ψ‖² = {0})")]
    NotNormalized(f64),

    #[error("too many qubits for this operation: {qubits} (limit {limit})")]
    TooManyQubits { qubits: usize, limit: usize },

    #[error("circuit contains a coin flip; purify it before inverting or controlling")]
    CoinNotInvertible,

    #[error("invalid instance: {}", join(.0))]
    Invalid(Vec<Violation>),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("numerical check failed: {0}")]
    Numerical(String),
}

fn join(v: &[Violation]) -> String {
    let mut out = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        out.push_str(&x.message);
    }
    out
}

pub type Result<T> = core::result::Result<T, Error>;
