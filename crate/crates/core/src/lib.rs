//! # nclp-core
//!
//! Desk-scale noncommutative L^p machinery on finite direct sums of full
//! matrix algebras `M = M_{n_1} ⊕ … ⊕ M_{n_K}`.
//!
//! Every positive functional is carried by its density with respect to the
//! plain matrix trace, Haagerup L^p reduces to Schatten classes, and the
//! Connes cocycle reduces to `h_ψ^{it} h_φ^{-it}`. On top of that the crate
//! provides:
//!
//! - [`algebra`]: block elements, Hermitian spectra, functional calculus with
//!   the kernel convention `f(0) = 0`, support projections, polar decomposition.
//! - [`functionals`]: positive functionals, densities, cocycles and the
//!   support-cut identity for non-faithful functionals.
//! - [`lp`]: Schatten (quasi-)norms and Kosaki interpolated spaces
//!   `L^p(M, φ)_η`.
//! - [`tensorprod`]: Kronecker products of algebras, elements, functionals and
//!   the norm multiplicativity identities.
//! - [`divergence`]: sandwiched and α-z Rényi divergences, additivity and
//!   monotonicity probes under unital CP maps.
//! - [`random`]: seeded instance generators over any [`rand_core::RngCore`].
//!
//! The crate is `no_std` and needs only `alloc`.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod algebra;
pub mod divergence;
mod error;
pub mod functionals;
pub mod lp;
pub mod matrix;
pub mod random;
pub mod tensorprod;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Identifier of the eigensolver backing every spectral computation.
pub const EIGENSOLVER_ID: &str = "cyclic-jacobi-hermitian/one-sided-jacobi-svd";

/// Default relative kernel threshold `ε_rel`.
pub const DEFAULT_EPS_REL: f64 = 1e-12;

/// Absolute tolerance on the Hermitian defect of inputs that are expected to
/// be self-adjoint (relative to `max(1, ‖h‖_F)`).
pub const HERMITIAN_TOL: f64 = 1e-8;

/// Eigenvalues in `[-PSD_CLIP_TOL·λ_max, 0)` of a PSD-expected input clip to zero.
pub const PSD_CLIP_TOL: f64 = 1e-10;

/// Spectral configuration shared by all operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    /// An eigenvalue `λ` is treated as kernel iff `|λ| ≤ eps_rel · max|λ_j|`.
    pub eps_rel: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            eps_rel: DEFAULT_EPS_REL,
        }
    }
}

impl SpectralConfig {
    pub fn new(eps_rel: f64) -> Result<Self> {
        if !(eps_rel.is_finite() && eps_rel > 0.0 && eps_rel < 1.0) {
            return Err(Error::Domain(alloc::format!(
                "eps_rel must lie in (0, 1), got {eps_rel}"
            )));
        }
        Ok(Self { eps_rel })
    }
}
