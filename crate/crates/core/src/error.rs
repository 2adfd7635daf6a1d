//! Error type shared by all modules.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Errors raised by construction and compilation routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A dimension exceeds the configured cap or operands disagree.
    Size(String),
    /// An input violates a documented precondition (non-Hermitian,
    /// non-unitary, non-orthonormal, ...).
    Contract(String),
    /// A scalar argument is outside its admissible domain.
    Domain(String),
    /// Codeword states are linearly dependent; the offending word strings.
    Degenerate(Vec<String>),
    /// A phase/duration constraint system has no admissible solution.
    Infeasible(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Size(m) => write!(f, "size error: {m}"),
            Error::Contract(m) => write!(f, "contract violation: {m}"),
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Degenerate(words) => {
                write!(f, "degenerate codewords: {}", words.join(", "))
            }
            Error::Infeasible(m) => write!(f, "infeasible: {m}"),
        }
    }
}

#[cfg(any(feature = "std", test))]
impl std::error::Error for Error {}
