//! Optimum collective decoding of codeword states built from binary letters.
//!
//! The crate covers the full chain from codebook construction to a verified
//! gate-level realization:
//!
//! * [`linalg`] — dense complex vectors/matrices, Hermitian eigensolver,
//!   matrix functions on a span, orthonormal-basis completion.
//! * [`codebook`] — binary letter pairs with a fixed real overlap, codeword
//!   tensor products, Gram matrices, and the phase-keyed coherent-state
//!   frontend on a truncated Fock space.
//! * [`decoder`] — square-root ("pretty good") measurement, the pairwise
//!   Bayes-cost-reduction optimizer, error probability, induced classical
//!   channels, mutual information and single-letter capacity.
//! * [`circuit`] — the adaptor unitary that maps the optimal collective
//!   measurement onto a separate per-letter measurement, its two-level
//!   (plane rotation) decomposition, and lowering to an elementary gate
//!   netlist with a reconstruction oracle.
//! * [`cavity`] — pulse-level models of Ramsey-zone rotations and
//!   Jaynes-Cummings interactions, composed into a controlled-√NOT.
//! * [`sim`] — state-vector execution of netlists, projective sampling with
//!   a counter-based deterministic generator, Monte Carlo decoding.
//!
//! Register ordering is big-endian throughout: qubit 0 is the leftmost
//! letter and the most significant bit of a basis index. `|↑⟩` (upper
//! level) is basis index 0.
//!
//! The library is `no_std` + `alloc`; everything is a pure function of its
//! inputs and safe to call from multiple threads.

#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod cavity;
pub mod circuit;
pub mod codebook;
pub mod decoder;
pub mod error;
pub mod linalg;
pub mod sim;

pub use error::Error;
pub use linalg::{CMatrix, Ket, C64};

/// Result alias used across the crate.
pub type Result<T> = core::result::Result<T, Error>;
