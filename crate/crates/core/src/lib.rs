//! Numerical toolkit for truncated interacting Fock spaces over `C^d`.
//!
//! Levels `0..=N` of the full Fock space are stored densely in the
//! big-endian tensor basis. On top of that sit positive deformations,
//! squeezings, one-mode Jacobi theory, boundedness diagnostics, projection
//! families (subproduct systems) and spans of creation/annihilation words.

pub mod error;
pub mod linalg;
pub mod par;
pub mod tensor;
pub mod deform;
pub mod interacting;
pub mod onemode;
pub mod bounds;
pub mod subproduct;
pub mod opalg;
pub mod catalog;
pub mod io;
pub mod cli;

pub use error::{Error, Result};

/// Numerical thresholds shared by the checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative eigenvalue floor for positivity, `λ_min ≥ -psd·λ_max`.
    pub psd: f64,
    /// Relative rank cutoff for eigenvalues and singular values.
    pub rank: f64,
    /// Relative residual for identities (kernel condition, factorizations, norms).
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            psd: 1e-10,
            rank: 1e-10,
            residual: 1e-9,
        }
    }
}
