//! Numerical verification of a family of Schatten-class trace
//! inequalities and their use in ground-state long-range-order bounds for
//! quantum rotor lattices.
//!
//! The crate is organised bottom-up:
//!
//! - [`schatten`]: dense complex matrices, polar decomposition, the trace
//!   inequality gap, random test matrices and operator truncation ladders.
//! - [`vectorize`]: the vectorization map of Hilbert–Schmidt operators into a
//!   tensor product space and the expectation-value form of the inequality.
//! - [`rotor`]: lattice geometry, truncated single-rotor operators and sparse
//!   assembly of the (perturbed) rotor Hamiltonian.
//! - [`spectra`]: ground states, Fourier spin operators and the momentum-space
//!   observables (correlation, susceptibility, double commutator, sum rule).
//! - [`rp`]: the reflection-positivity energy inequalities and curvature checks.
//! - [`criterion`]: Brillouin-zone quadrature and the ordering criterion.

pub mod criterion;
pub mod error;
pub mod linalg;
pub mod rotor;
pub mod rp;
pub mod schatten;
pub mod spectra;
pub mod vectorize;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Tolerances shared across modules.
pub mod tol {
    /// Relative reconstruction tolerance for polar parts.
    pub const REC: f64 = 1e-12;
    /// Inequality slack tolerance is `INEQ * (1 + rhs)`.
    pub const INEQ: f64 = 1e-10;
    /// Eigenvalue / positivity tolerance.
    pub const EIG: f64 = 1e-12;
    /// Identity tolerance for the vectorization identities.
    pub const ID: f64 = 1e-12;
    /// Absolute tolerance on normalized momentum observables.
    pub const OBS: f64 = 1e-8;
    /// Relative agreement of the two susceptibility routes.
    pub const CHI: f64 = 1e-6;
    /// Energy tolerance is `EN * (1 + |E0|)`.
    pub const EN: f64 = 1e-9;
    /// Curvature nonnegativity tolerance.
    pub const CURV: f64 = 1e-6;
    /// Relative agreement of finite-difference and perturbative curvature.
    pub const MATCH: f64 = 1e-6;
}
