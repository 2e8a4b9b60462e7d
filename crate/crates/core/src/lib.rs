//! Adiabatic Grover search with `N` three-level atoms in a single-mode
//! cavity driven by two lasers.
//!
//! Hamiltonians come in a full single-photon form and two reductions of it.
//! Pulse pairs are designed from the constant-adiabaticity law `θ̇ = εΛ` and
//! handed to the propagator; `experiments` packages the standard studies.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x <= y)` also rejects NaN

pub mod error;
pub mod experiments;
pub mod hamiltonians;
pub mod linalg;
pub mod propagator;
pub mod pulsedesign;
pub mod statespace;
pub mod textio;

pub use error::{Error, Result};
pub use num_complex::Complex64;
