//! Seeded instance generators.
//!
//! Complex Gaussians use the Box–Muller transform on two uniform draws
//! `u1 ∈ (0, 1]`, `u2 ∈ [0, 1)` built from the top 53 bits of `next_u64`:
//! `z = sqrt(-ln u1) · (cos 2πu2 + i sin 2πu2)`, so that `E|z|² = 1`.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand_core::RngCore;

use crate::algebra::{BlockAlgebra, Element};
use crate::functionals::PositiveFunctional;
use crate::matrix::{self, CMatrix};
use crate::C64;

const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

/// Uniform in `[0, 1)`.
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * INV_2_53
}

/// Uniform in `[lo, hi)`.
pub fn uniform_in<R: RngCore + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(rng)
}

/// Standard complex normal, `E|z|² = 1`.
pub fn complex_gaussian<R: RngCore + ?Sized>(rng: &mut R) -> C64 {
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * INV_2_53;
    let u2 = uniform(rng);
    let r = (-u1.ln()).sqrt();
    let theta = 2.0 * PI * u2;
    C64::new(r * theta.cos(), r * theta.sin())
}

pub fn gaussian_matrix<R: RngCore + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Element with i.i.d. complex Gaussian entries.
pub fn gaussian_element<R: RngCore + ?Sized>(rng: &mut R, algebra: &BlockAlgebra) -> Element {
    let blocks = algebra
        .block_dims()
        .iter()
        .map(|&n| gaussian_matrix(rng, n, n))
        .collect();
    Element::from_blocks(algebra, blocks).expect("blocks conform by construction")
}

/// Haar-like unitary element (Gram–Schmidt on a Gaussian draw).
pub fn unitary_element<R: RngCore + ?Sized>(rng: &mut R, algebra: &BlockAlgebra) -> Element {
    let blocks = algebra
        .block_dims()
        .iter()
        .map(|&n| matrix::orthonormalize_columns(&gaussian_matrix(rng, n, n)))
        .collect();
    Element::from_blocks(algebra, blocks).expect("blocks conform by construction")
}

/// `rows × cols` matrix with orthonormal columns (`rows ≥ cols`).
pub fn isometry<R: RngCore + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    assert!(rows >= cols, "an isometry needs rows >= cols");
    matrix::orthonormalize_columns(&gaussian_matrix(rng, rows, cols))
}

/// Rank profile of a generated density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankProfile {
    Full,
    /// Rank `min(r, n_k)` in every block, with exactly zero remaining eigenvalues
    /// by construction (`G G*` with an `n_k × r` factor).
    Deficient(usize),
    Zero,
}

/// Density `G G*` from a Gaussian factor, normalized to `mass` unless the
/// profile is [`RankProfile::Zero`].
pub fn positive_density<R: RngCore + ?Sized>(
    rng: &mut R,
    algebra: &BlockAlgebra,
    profile: RankProfile,
    mass: Option<f64>,
) -> Element {
    let blocks: Vec<CMatrix> = algebra
        .block_dims()
        .iter()
        .map(|&n| {
            let r = match profile {
                RankProfile::Full => n,
                RankProfile::Deficient(r) => r.min(n),
                RankProfile::Zero => 0,
            };
            if r == 0 {
                return CMatrix::zeros(n, n);
            }
            let g = gaussian_matrix(rng, n, r);
            g.matmul(&g.adjoint()).hermitian_part()
        })
        .collect();
    let h = Element::from_blocks(algebra, blocks).expect("blocks conform by construction");
    match mass {
        Some(m) if !h.is_zero() => h.scale_real(m / h.canonical_trace().re),
        _ => h,
    }
}

/// Positive functional from [`positive_density`]; `Full` and `Deficient`
/// profiles are normalized to mass 1.
pub fn positive_functional<R: RngCore + ?Sized>(
    rng: &mut R,
    algebra: &BlockAlgebra,
    profile: RankProfile,
) -> PositiveFunctional {
    let h = positive_density(rng, algebra, profile, Some(1.0));
    PositiveFunctional::from_density_unchecked(h)
}

/// Density `U diag(d) U*` with prescribed eigenvalues `d` (concatenated over
/// blocks) and a random unitary `U`.
pub fn density_with_spectrum<R: RngCore + ?Sized>(
    rng: &mut R,
    algebra: &BlockAlgebra,
    spectrum: &[f64],
) -> Element {
    let u = unitary_element(rng, algebra);
    let d = Element::from_real_diag(algebra, spectrum).expect("spectrum length matches carrier");
    u.multiply(&d)
        .and_then(|ud| ud.multiply(&u.adjoint()))
        .expect("same algebra")
        .hermitian_part()
}
