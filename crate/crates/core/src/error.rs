//! Error type shared across the crate.

use crate::driver::AttemptTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// No modular inverse exists because gcd(value, modulus) != 1.
    #[error("{value} has no inverse modulo {modulus}")]
    NoInverse { value: u64, modulus: u64 },

    /// A runtime parameter slot referenced by the program is not bound.
    #[error("unbound parameter: {0}")]
    MissingParameter(String),

    /// The program evaluated to something inconsistent (qubit index out of
    /// range, bad table index, arity mismatch, ...).
    #[error("malformed program: {0}")]
    MalformedProgram(String),

    /// A configured resource limit (qubits, branches) would be exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Internal consistency check failed (e.g. statevector norm drift).
    #[error("internal consistency error: {0}")]
    Internal(String),

    /// The factoring loop ran out of attempts; carries the full trace.
    #[error("factoring failed after {} attempts", attempts.len())]
    AttemptsExhausted { attempts: Vec<AttemptTrace> },
}
