//! Sandwiched and α-z Rényi divergences for positive functionals.
//!
//! For `α < 1` the quasi-entropies are trace formulas; for `α > 1` they go
//! through the reference-sandwiched solve
//! `h_ψ^{α/z} = h_φ^{(α−1)/2z} x h_φ^{(α−1)/2z}` with `x = s(φ) x s(φ)`,
//! which is solvable at desk scale iff `s(ψ) ≤ s(φ)`. Logarithms are natural.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand_core::RngCore;

use crate::algebra::{self, BlockAlgebra, BlockSpectrum, Element, HermitianSpectrum, SpectralFn};
use crate::functionals::PositiveFunctional;
use crate::matrix::{self, CMatrix};
use crate::tensorprod::{self, TensorAlgebra};
use crate::{random, Error, Result, SpectralConfig, C64};

/// Logarithm base used by every divergence.
pub const LOG_BASE: &str = "nat";

/// Why a divergence value is what it is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reason {
    Finite,
    /// `α > 1` and `s(ψ) ≰ s(φ)`.
    SupportViolation,
    /// `α < 1` and `Q̃ = 0` with `φ ≠ 0`.
    ZeroQAlphaLt1,
    /// `α < 1` and `φ = 0`.
    ZeroReference,
}

impl Reason {
    pub const ALL: [Reason; 4] = [
        Reason::Finite,
        Reason::SupportViolation,
        Reason::ZeroQAlphaLt1,
        Reason::ZeroReference,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Self::Finite => "finite",
            Self::SupportViolation => "support_violation",
            Self::ZeroQAlphaLt1 => "zero_Q_alpha_lt_1",
            Self::ZeroReference => "zero_reference",
        }
    }
}

impl core::fmt::Display for Reason {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.code())
    }
}

/// A real value or `+∞` tagged with a reason; `+∞` iff the reason is not
/// [`Reason::Finite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceValue {
    value: f64,
    reason: Reason,
}

impl DivergenceValue {
    pub fn finite(value: f64) -> Self {
        debug_assert!(value.is_finite());
        Self {
            value,
            reason: Reason::Finite,
        }
    }

    pub fn infinite(reason: Reason) -> Self {
        debug_assert!(reason != Reason::Finite);
        Self {
            value: f64::INFINITY,
            reason,
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn reason(&self) -> Reason {
        self.reason
    }

    pub fn is_finite(&self) -> bool {
        self.reason == Reason::Finite
    }
}

/// `α` and optionally `z`; without `z` the sandwiched case `z = α` applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceParams {
    alpha: f64,
    z: Option<f64>,
}

impl DivergenceParams {
    /// Sandwiched mode, `α ∈ [1/2, ∞) \ {1}`.
    pub fn sandwiched(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.5 && alpha != 1.0) {
            return Err(Error::Domain(format!(
                "sandwiched mode needs alpha in [1/2, inf) without 1, got {alpha}"
            )));
        }
        Ok(Self { alpha, z: None })
    }

    /// α-z mode, `α, z > 0`, `α ≠ 1`.
    pub fn alpha_z(alpha: f64, z: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && alpha != 1.0) {
            return Err(Error::Domain(format!("alpha must be positive and != 1, got {alpha}")));
        }
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::Domain(format!("z must be positive, got {z}")));
        }
        Ok(Self { alpha, z: Some(z) })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn z(&self) -> f64 {
        self.z.unwrap_or(self.alpha)
    }

    pub fn is_sandwiched(&self) -> bool {
        self.z.is_none()
    }
}

/// Relative tolerance of the `s(ψ) ≤ s(φ)` test.
pub const SUPPORT_TOL: f64 = 1e-10;

fn check_nonzero(psi: &PositiveFunctional) -> Result<()> {
    if psi.is_zero() {
        return Err(Error::Domain("the first argument must be a nonzero functional".into()));
    }
    Ok(())
}

/// `‖(1−s(φ)) h_ψ (1−s(φ))‖_F > SUPPORT_TOL · ‖h_ψ‖_F`.
pub fn support_violated(psi: &PositiveFunctional, phi: &PositiveFunctional, cfg: &SpectralConfig) -> Result<bool> {
    let s = phi.support(cfg)?;
    let co = Element::identity(phi.algebra()).sub(&s)?;
    let outside = co.multiply(psi.density())?.multiply(&co)?;
    Ok(outside.frobenius_norm() > SUPPORT_TOL * psi.density().frobenius_norm())
}

/// `Σ λ^r` over the non-kernel eigenvalues of a PSD-in-exact-arithmetic element.
fn trace_power(x: &Element, r: f64, cfg: &SpectralConfig) -> Result<f64> {
    let spec = algebra::hermitian_eig(x, true, cfg)?;
    Ok(spec
        .blocks()
        .iter()
        .flat_map(|b| b.values.iter().zip(&b.kernel))
        .filter(|(v, k)| !**k && **v > 0.0)
        .map(|(v, _)| v.powf(r))
        .sum())
}

fn sandwich(a: &Element, b: &Element) -> Result<Element> {
    a.multiply(b)?.multiply(a)
}

/// `‖A B A‖_F ≤ ε_rel ‖A‖_F² ‖B‖_F`: the sandwich counts as exactly zero.
fn sandwich_vanishes(a: &Element, b: &Element, cfg: &SpectralConfig) -> Result<bool> {
    let scale = a.frobenius_norm().powi(2) * b.frobenius_norm();
    Ok(sandwich(a, b)?.frobenius_norm() <= cfg.eps_rel * scale)
}

/// `Σ σ_i^r` over the singular values of the half factor
/// `G = Λ_φ^a (U_φ* U_ψ) Λ_ψ^b`, assembled block by block in the two
/// eigenframes on the non-kernel eigenpairs. `G G*` is unitarily equivalent to
/// `h_φ^a h_ψ^{2b} h_φ^a`, but its singular values keep relative accuracy where
/// the eigenvalues of the dense sandwich do not. Values at or below
/// `floor · max λ_φ^a · max λ_ψ^b` are dropped.
fn half_factor_power_sum(
    phi: &HermitianSpectrum,
    psi: &HermitianSpectrum,
    a: f64,
    b: f64,
    r: f64,
    floor: f64,
) -> f64 {
    let live = |bs: &BlockSpectrum| -> Vec<usize> {
        (0..bs.values.len()).filter(|&i| !bs.kernel[i] && bs.values[i] > 0.0).collect()
    };
    let peak = |spec: &HermitianSpectrum, e: f64| {
        spec.blocks()
            .iter()
            .flat_map(|bs| live(bs).into_iter().map(move |i| bs.values[i].powf(e)))
            .fold(0.0, f64::max)
    };
    let cut = floor * peak(phi, a) * peak(psi, b);
    let mut total = 0.0;
    for (fb, pb) in phi.blocks().iter().zip(psi.blocks()) {
        let (rows, cols) = (live(fb), live(pb));
        if rows.is_empty() || cols.is_empty() {
            continue;
        }
        let n = fb.values.len();
        let g = CMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            let (s, t) = (rows[i], cols[j]);
            let w: C64 = (0..n).map(|k| fb.vectors[(k, s)].conj() * pb.vectors[(k, t)]).sum();
            w * (fb.values[s].powf(a) * pb.values[t].powf(b))
        });
        total += matrix::singular_values(&g)
            .into_iter()
            .filter(|&v| v > cut)
            .map(|v| v.powf(r))
            .sum::<f64>();
    }
    total
}

/// `Q̃_α(ψ‖φ)` for `α ∈ [1/2, ∞) \ {1}`.
pub fn q_tilde_alpha(
    psi: &PositiveFunctional,
    phi: &PositiveFunctional,
    alpha: f64,
    cfg: &SpectralConfig,
) -> Result<DivergenceValue> {
    DivergenceParams::sandwiched(alpha)?;
    check_nonzero(psi)?;
    psi.density().check_same_algebra(phi.density())?;
    let phi_spec = phi.spectrum(cfg)?;
    if alpha < 1.0 {
        let a = phi_spec.apply(&SpectralFn::Power((1.0 - alpha) / (2.0 * alpha)))?;
        if phi.is_zero() || sandwich_vanishes(&a, psi.density(), cfg)? {
            return Ok(DivergenceValue::finite(0.0));
        }
        return Ok(DivergenceValue::finite(trace_power(&sandwich(&a, psi.density())?, alpha, cfg)?));
    }
    if phi.is_zero() || support_violated(psi, phi, cfg)? {
        return Ok(DivergenceValue::infinite(Reason::SupportViolation));
    }
    let a_inv = phi_spec.apply(&SpectralFn::Power(-(alpha - 1.0) / (2.0 * alpha)))?;
    let x = sandwich(&a_inv, psi.density())?;
    Ok(DivergenceValue::finite(trace_power(&x, alpha, cfg)?))
}

/// Pseudo-inverse solution of `h_ψ^{α/z} = h_φ^{c} x h_φ^{c}`, `c = (α−1)/2z`,
/// for `α > 1`. `None` when `s(ψ) ≰ s(φ)`; a conditioning error when the
/// recomposition residual exceeds `1e-9·(1 + ‖h_ψ^{α/z}‖_F)`.
pub fn spade_solution(
    psi: &PositiveFunctional,
    phi: &PositiveFunctional,
    params: &DivergenceParams,
    cfg: &SpectralConfig,
) -> Result<Option<Element>> {
    let (alpha, z) = (params.alpha(), params.z());
    if alpha < 1.0 {
        return Err(Error::Domain("the sandwiched solve is defined for alpha > 1".into()));
    }
    check_nonzero(psi)?;
    psi.density().check_same_algebra(phi.density())?;
    if phi.is_zero() || support_violated(psi, phi, cfg)? {
        return Ok(None);
    }
    let c = (alpha - 1.0) / (2.0 * z);
    let phi_spec = phi.spectrum(cfg)?;
    let b = psi.spectrum(cfg)?.apply(&SpectralFn::Power(alpha / z))?;
    // solve and recompose in the eigenframe of h_φ, where h_φ^{±c} is diagonal
    let mut blocks = Vec::with_capacity(b.blocks().len());
    let mut residual_sq = 0.0;
    for (fb, bb) in phi_spec.blocks().iter().zip(b.blocks()) {
        let u = &fb.vectors;
        let framed = u.adjoint().matmul(bb).matmul(u);
        let n = fb.values.len();
        let w: Vec<f64> = (0..n)
            .map(|i| if fb.kernel[i] || fb.values[i] <= 0.0 { 0.0 } else { fb.values[i].powf(c) })
            .collect();
        let x_hat = CMatrix::from_fn(n, n, |i, j| {
            if w[i] == 0.0 || w[j] == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                framed[(i, j)] / (w[i] * w[j])
            }
        });
        for i in 0..n {
            for j in 0..n {
                residual_sq += (x_hat[(i, j)] * (w[i] * w[j]) - framed[(i, j)]).norm_sqr();
            }
        }
        blocks.push(u.matmul(&x_hat).matmul(&u.adjoint()));
    }
    let residual = residual_sq.sqrt();
    let bound = 1e-9 * (1.0 + b.frobenius_norm());
    if residual > bound {
        return Err(Error::Conditioning { residual, bound });
    }
    Ok(Some(Element::from_blocks(phi.algebra(), blocks)?))
}

/// Independent solve of the same equation: an orthonormal basis `Q` of the
/// range of `h_φ` (pivoted Gram–Schmidt on its columns), then the vectorized
/// system `(A_r ⊗ A_rᵀ) vec(X_r) = vec(B_r)` by QR least squares with
/// `A_r = Q* h_φ^c Q`, `B_r = Q* h_ψ^{α/z} Q`, and `x = Q X_r Q*`.
pub fn spade_solution_least_squares(
    psi: &PositiveFunctional,
    phi: &PositiveFunctional,
    params: &DivergenceParams,
    cfg: &SpectralConfig,
) -> Result<Option<Element>> {
    let (alpha, z) = (params.alpha(), params.z());
    if alpha < 1.0 {
        return Err(Error::Domain("the sandwiched solve is defined for alpha > 1".into()));
    }
    check_nonzero(psi)?;
    psi.density().check_same_algebra(phi.density())?;
    if phi.is_zero() || support_violated(psi, phi, cfg)? {
        return Ok(None);
    }
    let c = (alpha - 1.0) / (2.0 * z);
    let a = algebra::func_calc(phi.density(), &SpectralFn::Power(c), cfg)?;
    let b = algebra::func_calc(psi.density(), &SpectralFn::Power(alpha / z), cfg)?;
    let mut blocks = Vec::with_capacity(phi.algebra().num_blocks());
    for ((hb, ab), bb) in phi.density().blocks().iter().zip(a.blocks()).zip(b.blocks()) {
        let n = hb.rows();
        let q = matrix::range_basis(hb, 1e-10);
        let r = q.cols();
        if r == 0 {
            blocks.push(CMatrix::zeros(n, n));
            continue;
        }
        let qh = q.adjoint();
        let ar = qh.matmul(ab).matmul(&q);
        let br = qh.matmul(bb).matmul(&q);
        let lin = ar.kron(&ar.transpose());
        let sol = matrix::least_squares(&lin, &br.vectorize()).ok_or(Error::Conditioning {
            residual: f64::INFINITY,
            bound: 0.0,
        })?;
        let xr = CMatrix::from_row_major(r, r, sol);
        blocks.push(q.matmul(&xr).matmul(&qh));
    }
    Ok(Some(Element::from_blocks(phi.algebra(), blocks)?))
}

/// `Q̃_{α,z}(ψ‖φ)` for `α, z > 0`, `α ≠ 1`.
///
/// Both branches evaluate `tr[(h_φ^{e} h_ψ^{α/z} h_φ^{e})^z]` through the
/// singular values of `h_φ^{e} h_ψ^{α/2z}` (see [`half_factor_power_sum`]);
/// for `α > 1` the solution of the sandwiched equation is formed first and its
/// recomposition residual checked.
pub fn q_tilde_alpha_z(
    psi: &PositiveFunctional,
    phi: &PositiveFunctional,
    params: &DivergenceParams,
    cfg: &SpectralConfig,
) -> Result<DivergenceValue> {
    check_nonzero(psi)?;
    psi.density().check_same_algebra(phi.density())?;
    let (alpha, z) = (params.alpha(), params.z());
    let psi_spec = psi.spectrum(cfg)?;
    let phi_spec = phi.spectrum(cfg)?;
    if alpha < 1.0 {
        let e = (1.0 - alpha) / (2.0 * z);
        if phi.is_zero() {
            return Ok(DivergenceValue::finite(0.0));
        }
        let a = phi_spec.apply(&SpectralFn::Power(e))?;
        let b = psi_spec.apply(&SpectralFn::Power(alpha / z))?;
        if sandwich_vanishes(&a, &b, cfg)? {
            return Ok(DivergenceValue::finite(0.0));
        }
        let q = half_factor_power_sum(&phi_spec, &psi_spec, e, alpha / (2.0 * z), 2.0 * z, cfg.eps_rel);
        return Ok(DivergenceValue::finite(q));
    }
    if spade_solution(psi, phi, params, cfg)?.is_none() {
        return Ok(DivergenceValue::infinite(Reason::SupportViolation));
    }
    let c = (alpha - 1.0) / (2.0 * z);
    let q = half_factor_power_sum(&phi_spec, &psi_spec, -c, alpha / (2.0 * z), 2.0 * z, 0.0);
    Ok(DivergenceValue::finite(q))
}

/// `Q̃` by the code path matching the parameter mode.
pub fn q_tilde(
    psi: &PositiveFunctional,
    phi: &PositiveFunctional,
    params: &DivergenceParams,
    cfg: &SpectralConfig,
) -> Result<DivergenceValue> {
    if params.is_sandwiched() {
        q_tilde_alpha(psi, phi, params.alpha(), cfg)
    } else {
        q_tilde_alpha_z(psi, phi, params, cfg)
    }
}

/// `D̃ = (α−1)^{-1} ln(Q̃ / ψ(1))` from an already computed `Q̃`.
pub fn d_from_q(q: DivergenceValue, alpha: f64, psi_mass: f64, phi_is_zero: bool) -> DivergenceValue {
    if !q.is_finite() {
        return q;
    }
    if q.value() == 0.0 {
        // only reachable for alpha < 1
        return DivergenceValue::infinite(if phi_is_zero {
            Reason::ZeroReference
        } else {
            Reason::ZeroQAlphaLt1
        });
    }
    DivergenceValue::finite((q.value() / psi_mass).ln() / (alpha - 1.0))
}

/// `D̃(ψ‖φ)` (sandwiched or α-z according to `params`).
pub fn d_tilde(
    psi: &PositiveFunctional,
    phi: &PositiveFunctional,
    params: &DivergenceParams,
    cfg: &SpectralConfig,
) -> Result<DivergenceValue> {
    let q = q_tilde(psi, phi, params, cfg)?;
    Ok(d_from_q(q, params.alpha(), psi.mass(), phi.is_zero()))
}

/// Both evaluations of `Q̃_{α,α}` versus `Q̃_α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathAgreement {
    pub sandwiched: DivergenceValue,
    pub alpha_z: DivergenceValue,
}

impl PathAgreement {
    /// `|a − b| / max(|a|, |b|)` when both finite; `0` or `∞` otherwise.
    pub fn relative_difference(&self) -> f64 {
        match (self.sandwiched.is_finite(), self.alpha_z.is_finite()) {
            (true, true) => {
                let (a, b) = (self.sandwiched.value(), self.alpha_z.value());
                let scale = a.abs().max(b.abs());
                if scale == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / scale
                }
            }
            (false, false) if self.sandwiched.reason() == self.alpha_z.reason() => 0.0,
            _ => f64::INFINITY,
        }
    }

    pub fn agrees(&self, rel_tol: f64) -> bool {
        self.relative_difference() <= rel_tol
    }
}

pub fn lemma9_check(
    psi: &PositiveFunctional,
    phi: &PositiveFunctional,
    alpha: f64,
    cfg: &SpectralConfig,
) -> Result<PathAgreement> {
    let params = DivergenceParams::alpha_z(alpha, alpha)?;
    Ok(PathAgreement {
        sandwiched: q_tilde_alpha(psi, phi, alpha, cfg)?,
        alpha_z: q_tilde_alpha_z(psi, phi, &params, cfg)?,
    })
}

/// Which statement of product additivity an instance falls under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdditivityBranch {
    /// `α < 1`, or both factor quasi-entropies finite.
    Finite,
    /// `α = z` with an infinite factor: the product must be infinite too.
    InfiniteEqualOrders,
    /// `α > 1`, `z ≠ α`, an infinite factor: recorded, not covered by the theorem.
    Uncovered,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdditivityReport {
    pub branch: AdditivityBranch,
    pub q1: DivergenceValue,
    pub q2: DivergenceValue,
    pub q_product: DivergenceValue,
    pub d1: DivergenceValue,
    pub d2: DivergenceValue,
    pub d_product: DivergenceValue,
}

impl AdditivityReport {
    /// `|Q̃₁₂ − Q̃₁Q̃₂| / |Q̃₁Q̃₂|` (zero when both vanish), `None` unless all finite.
    pub fn q_relative_error(&self) -> Option<f64> {
        if !(self.q1.is_finite() && self.q2.is_finite() && self.q_product.is_finite()) {
            return None;
        }
        let expect = self.q1.value() * self.q2.value();
        let err = (self.q_product.value() - expect).abs();
        Some(if err == 0.0 { 0.0 } else { err / expect.abs() })
    }

    /// `|D̃₁₂ − D̃₁ − D̃₂|`, `None` unless all finite.
    pub fn d_abs_error(&self) -> Option<f64> {
        if !(self.d1.is_finite() && self.d2.is_finite() && self.d_product.is_finite()) {
            return None;
        }
        Some((self.d_product.value() - self.d1.value() - self.d2.value()).abs())
    }

    /// Checks the identity: finite values multiply (relative `q_tol`) and add
    /// (absolute `d_tol`); infinite factors force an infinite product.
    pub fn holds(&self, q_tol: f64, d_tol: f64) -> bool {
        let any_q_inf = !self.q1.is_finite() || !self.q2.is_finite();
        if any_q_inf {
            return !self.q_product.is_finite();
        }
        match self.q_relative_error() {
            Some(e) if e <= q_tol => {}
            _ => return false,
        }
        let any_d_inf = !self.d1.is_finite() || !self.d2.is_finite();
        if any_d_inf {
            return !self.d_product.is_finite();
        }
        matches!(self.d_abs_error(), Some(e) if e <= d_tol)
    }
}

pub fn additivity_check(
    t: &TensorAlgebra,
    psi1: &PositiveFunctional,
    phi1: &PositiveFunctional,
    psi2: &PositiveFunctional,
    phi2: &PositiveFunctional,
    params: &DivergenceParams,
    cfg: &SpectralConfig,
) -> Result<AdditivityReport> {
    let psi = tensorprod::kron_functional(t, psi1, psi2)?;
    let phi = tensorprod::kron_functional(t, phi1, phi2)?;
    let q1 = q_tilde(psi1, phi1, params, cfg)?;
    let q2 = q_tilde(psi2, phi2, params, cfg)?;
    let q_product = q_tilde(&psi, &phi, params, cfg)?;
    let alpha = params.alpha();
    let branch = if alpha < 1.0 || (q1.is_finite() && q2.is_finite()) {
        AdditivityBranch::Finite
    } else if params.z() == alpha {
        AdditivityBranch::InfiniteEqualOrders
    } else {
        AdditivityBranch::Uncovered
    };
    Ok(AdditivityReport {
        branch,
        q1,
        q2,
        q_product,
        d1: d_from_q(q1, alpha, psi1.mass(), phi1.is_zero()),
        d2: d_from_q(q2, alpha, psi2.mass(), phi2.is_zero()),
        d_product: d_from_q(q_product, alpha, psi.mass(), phi.is_zero()),
    })
}

/// Unital CP map `Φ(b) = Σ V_i* b V_i` from `domain` to `codomain`.
///
/// Each `V_i` is a `carrier(domain) × carrier(codomain)` matrix and
/// `Σ V_i* V_i = 1` within `1e-10`. Functionals on the codomain pull back by
/// `h_{ψ∘Φ} = E_domain(Σ V_i h_ψ V_i*)`, where `E_domain` keeps the diagonal
/// blocks of the domain algebra.
#[derive(Debug, Clone)]
pub struct UnitalChannel {
    domain: BlockAlgebra,
    codomain: BlockAlgebra,
    kraus: Vec<CMatrix>,
    unitality_residual: f64,
}

/// Tolerance on `‖Σ V_i* V_i − 1‖_F`.
pub const UNITALITY_TOL: f64 = 1e-10;

impl UnitalChannel {
    pub fn new(domain: &BlockAlgebra, codomain: &BlockAlgebra, kraus: Vec<CMatrix>) -> Result<Self> {
        let (m, n) = (domain.carrier_dim(), codomain.carrier_dim());
        if kraus.is_empty() {
            return Err(Error::Domain("a channel needs at least one Kraus operator".into()));
        }
        let mut gram = CMatrix::zeros(n, n);
        for v in &kraus {
            if v.rows() != m || v.cols() != n {
                return Err(Error::Shape(format!(
                    "Kraus operator is {}x{}, expected {m}x{n}",
                    v.rows(),
                    v.cols()
                )));
            }
            gram = gram.add(&v.adjoint().matmul(v));
        }
        let unitality_residual = gram.sub(&CMatrix::identity(n)).frobenius_norm();
        if unitality_residual > UNITALITY_TOL {
            return Err(Error::Domain(format!(
                "channel is not unital: residual {unitality_residual:e}"
            )));
        }
        Ok(Self {
            domain: domain.clone(),
            codomain: codomain.clone(),
            kraus,
            unitality_residual,
        })
    }

    pub fn identity(algebra: &BlockAlgebra) -> Self {
        let n = algebra.carrier_dim();
        Self::new(algebra, algebra, alloc::vec![CMatrix::identity(n)]).expect("identity is unital")
    }

    /// `b ↦ Σ_i P_i b P_i` over the rank-one coordinate projections.
    pub fn pinching(algebra: &BlockAlgebra) -> Self {
        let n = algebra.carrier_dim();
        let kraus = (0..n)
            .map(|i| {
                let mut p = CMatrix::zeros(n, n);
                p[(i, i)] = C64::new(1.0, 0.0);
                p
            })
            .collect();
        Self::new(algebra, algebra, kraus).expect("pinching is unital")
    }

    /// `γ: a ↦ a ⊗ 1` from the left factor into the product. Pulling back a
    /// functional takes the partial trace over the right factor.
    pub fn embedding(t: &TensorAlgebra) -> Self {
        let left_offsets = t.left().carrier_offsets();
        let prod_offsets = t.product().carrier_offsets();
        let (m, n) = (t.left().carrier_dim(), t.product().carrier_dim());
        let mut kraus = Vec::new();
        for (j, &mj) in t.right().block_dims().iter().enumerate() {
            for b in 0..mj {
                let mut v = CMatrix::zeros(m, n);
                for (i, &ni) in t.left().block_dims().iter().enumerate() {
                    let off = prod_offsets[t.block_index(i, j)];
                    for a in 0..ni {
                        v[(left_offsets[i] + a, off + a * mj + b)] = C64::new(1.0, 0.0);
                    }
                }
                kraus.push(v);
            }
        }
        Self::new(t.left(), t.product(), kraus).expect("embedding is unital")
    }

    /// Random unital CP map with `kraus_count` operators, cut from a random
    /// isometry `W` with `W*W = 1`.
    pub fn random<R: RngCore + ?Sized>(
        rng: &mut R,
        domain: &BlockAlgebra,
        codomain: &BlockAlgebra,
        kraus_count: usize,
    ) -> Result<Self> {
        let (m, n) = (domain.carrier_dim(), codomain.carrier_dim());
        if kraus_count == 0 || kraus_count * m < n {
            return Err(Error::Domain(format!(
                "{kraus_count} Kraus operators of size {m}x{n} cannot be unital"
            )));
        }
        let w = random::isometry(rng, kraus_count * m, n);
        let kraus = (0..kraus_count).map(|k| w.sub_block(k * m, 0, m, n)).collect();
        Self::new(domain, codomain, kraus)
    }

    pub fn domain(&self) -> &BlockAlgebra {
        &self.domain
    }

    pub fn codomain(&self) -> &BlockAlgebra {
        &self.codomain
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn unitality_residual(&self) -> f64 {
        self.unitality_residual
    }

    /// `Φ(b)`, compressed to the codomain's blocks.
    pub fn apply(&self, b: &Element) -> Result<Element> {
        if b.algebra() != &self.domain {
            return Err(Error::Shape("element does not live on the channel's domain".into()));
        }
        let dense = b.to_dense();
        let n = self.codomain.carrier_dim();
        let out = self
            .kraus
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, v| acc.add(&v.adjoint().matmul(&dense).matmul(v)));
        Element::compress_dense(&self.codomain, &out)
    }
}

/// `ψ ∘ Φ`.
pub fn precompose(psi: &PositiveFunctional, channel: &UnitalChannel) -> Result<PositiveFunctional> {
    if psi.algebra() != channel.codomain() {
        return Err(Error::Shape("functional does not live on the channel's codomain".into()));
    }
    let h = psi.density().to_dense();
    let m = channel.domain.carrier_dim();
    let pulled = channel
        .kraus
        .iter()
        .fold(CMatrix::zeros(m, m), |acc, v| acc.add(&v.matmul(&h).matmul(&v.adjoint())));
    let density = Element::compress_dense(&channel.domain, &pulled)?.hermitian_part();
    Ok(PositiveFunctional::from_density_unchecked(density))
}

/// Piece of the `(α, z)` plane where `D̃_{α,z}` is monotone under unital CP maps:
/// `α` in the given interval and `max_k(c_k + d_k α) ≤ z ≤ u₀ + u₁ α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneRegion {
    pub alpha_min: f64,
    pub alpha_min_inclusive: bool,
    pub alpha_max: f64,
    pub alpha_max_inclusive: bool,
    /// Affine lower bounds `(c, d)`: `z ≥ c + d α`.
    pub z_lower: &'static [(f64, f64)],
    /// Affine upper bound `(u₀, u₁)`: `z ≤ u₀ + u₁ α`; `None` for unbounded.
    pub z_upper: Option<(f64, f64)>,
}

impl MonotoneRegion {
    pub fn contains(&self, alpha: f64, z: f64) -> bool {
        let above = if self.alpha_min_inclusive { alpha >= self.alpha_min } else { alpha > self.alpha_min };
        let below = if self.alpha_max_inclusive { alpha <= self.alpha_max } else { alpha < self.alpha_max };
        let lo = self.z_lower.iter().all(|&(c, d)| z >= c + d * alpha);
        let hi = self.z_upper.is_none_or(|(u0, u1)| z <= u0 + u1 * alpha);
        above && below && lo && hi
    }
}

/// Parameter range on which α-z divergences are monotone under unital CP maps.
pub const ALPHA_Z_MONOTONE_REGIONS: &[MonotoneRegion] = &[
    MonotoneRegion {
        alpha_min: 0.0,
        alpha_min_inclusive: false,
        alpha_max: 1.0,
        alpha_max_inclusive: false,
        z_lower: &[(0.0, 1.0), (1.0, -1.0)],
        z_upper: None,
    },
    MonotoneRegion {
        alpha_min: 1.0,
        alpha_min_inclusive: false,
        alpha_max: 2.0,
        alpha_max_inclusive: true,
        z_lower: &[(0.0, 0.5)],
        z_upper: Some((0.0, 1.0)),
    },
    MonotoneRegion {
        alpha_min: 2.0,
        alpha_min_inclusive: true,
        alpha_max: f64::INFINITY,
        alpha_max_inclusive: false,
        z_lower: &[(-1.0, 1.0)],
        z_upper: Some((0.0, 1.0)),
    },
];

/// Whether monotonicity is known to hold for these parameters.
pub fn dpi_valid(params: &DivergenceParams) -> bool {
    if params.is_sandwiched() {
        return params.alpha() >= 0.5;
    }
    ALPHA_Z_MONOTONE_REGIONS
        .iter()
        .any(|r| r.contains(params.alpha(), params.z()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpiReport {
    /// `D̃(ψ‖φ)`.
    pub before: DivergenceValue,
    /// `D̃(ψ∘Φ‖φ∘Φ)`.
    pub after: DivergenceValue,
    /// Parameters lie in the monotone range, so the inequality is asserted.
    pub asserted: bool,
}

impl DpiReport {
    /// `after − before`, `−∞` when `before = +∞`, `+∞` when only `after` is.
    pub fn excess(&self) -> f64 {
        match (self.before.is_finite(), self.after.is_finite()) {
            (_, false) if !self.before.is_finite() => f64::NEG_INFINITY,
            (false, true) => f64::NEG_INFINITY,
            (true, false) => f64::INFINITY,
            (true, true) => self.after.value() - self.before.value(),
            _ => unreachable!(),
        }
    }

    /// `true` when not asserted, otherwise `after ≤ before + slack`.
    pub fn holds(&self, slack: f64) -> bool {
        !self.asserted || self.excess() <= slack
    }
}

pub fn dpi_probe(
    psi: &PositiveFunctional,
    phi: &PositiveFunctional,
    channel: &UnitalChannel,
    params: &DivergenceParams,
    cfg: &SpectralConfig,
) -> Result<DpiReport> {
    let before = d_tilde(psi, phi, params, cfg)?;
    let after = d_tilde(&precompose(psi, channel)?, &precompose(phi, channel)?, params, cfg)?;
    Ok(DpiReport {
        before,
        after,
        asserted: dpi_valid(params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cfg() -> SpectralConfig {
        SpectralConfig::default()
    }

    fn m2() -> BlockAlgebra {
        BlockAlgebra::full(2).unwrap()
    }

    fn diag_fn(alg: &BlockAlgebra, d: &[f64]) -> PositiveFunctional {
        PositiveFunctional::from_density(Element::from_real_diag(alg, d).unwrap(), &cfg()).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(DivergenceParams::sandwiched(0.4).is_err());
        assert!(DivergenceParams::sandwiched(1.0).is_err());
        assert!(DivergenceParams::sandwiched(0.5).is_ok());
        assert!(DivergenceParams::alpha_z(0.3, 0.5).is_ok());
        assert!(DivergenceParams::alpha_z(2.0, 0.0).is_err());
        assert!(DivergenceParams::alpha_z(1.0, 2.0).is_err());
        assert_eq!(DivergenceParams::sandwiched(2.0).unwrap().z(), 2.0);
    }

    #[test]
    fn identical_states_give_one() {
        let phi = diag_fn(&m2(), &[0.3, 0.7]);
        for alpha in [0.5, 0.7, 1.5, 2.0, 3.0] {
            let q = q_tilde_alpha(&phi, &phi, alpha, &cfg()).unwrap();
            assert!((q.value() - 1.0).abs() < 1e-14, "alpha={alpha}");
            for z in [0.5, 1.0, 2.5] {
                let p = DivergenceParams::alpha_z(alpha, z).unwrap();
                let q = q_tilde_alpha_z(&phi, &phi, &p, &cfg()).unwrap();
                assert!((q.value() - 1.0).abs() < 1e-14);
                assert!(d_tilde(&phi, &phi, &p, &cfg()).unwrap().value().abs() < 1e-14);
            }
        }
        let thin = diag_fn(&m2(), &[0.0, 0.4]);
        let p = DivergenceParams::alpha_z(3.0, 1.2).unwrap();
        assert!((q_tilde_alpha_z(&thin, &thin, &p, &cfg()).unwrap().value() - 0.4).abs() < 1e-14);
    }

    #[test]
    fn classical_pair() {
        let rho = diag_fn(&m2(), &[0.5, 0.5]);
        let sigma = diag_fn(&m2(), &[1.0 / 3.0, 2.0 / 3.0]);
        let q = q_tilde_alpha(&rho, &sigma, 2.0, &cfg()).unwrap();
        assert!((q.value() - 9.0 / 8.0).abs() < 1e-14);
        let p = DivergenceParams::alpha_z(2.0, 2.0).unwrap();
        let q = q_tilde_alpha_z(&rho, &sigma, &p, &cfg()).unwrap();
        assert!((q.value() - 1.125).abs() < 1e-14);
        let d = d_tilde(&rho, &sigma, &p, &cfg()).unwrap();
        assert!((d.value() - 0.117_783_035_656_383_5).abs() < 1e-14);
    }

    #[test]
    fn infinite_branches() {
        let a = diag_fn(&m2(), &[1.0, 0.0]);
        let b = diag_fn(&m2(), &[0.0, 1.0]);
        let q = q_tilde_alpha(&a, &b, 2.0, &cfg()).unwrap();
        assert_eq!(q.reason(), Reason::SupportViolation);
        assert!(q.value().is_infinite());
        let p = DivergenceParams::alpha_z(3.0, 1.2).unwrap();
        assert_eq!(q_tilde_alpha_z(&a, &b, &p, &cfg()).unwrap().reason(), Reason::SupportViolation);
        let d = d_tilde(&a, &b, &DivergenceParams::sandwiched(2.0).unwrap(), &cfg()).unwrap();
        assert_eq!(d.reason(), Reason::SupportViolation);

        let low = DivergenceParams::sandwiched(0.7).unwrap();
        assert_eq!(q_tilde(&a, &b, &low, &cfg()).unwrap().value(), 0.0);
        assert_eq!(d_tilde(&a, &b, &low, &cfg()).unwrap().reason(), Reason::ZeroQAlphaLt1);
        let zero = PositiveFunctional::zero(&m2());
        assert_eq!(d_tilde(&a, &zero, &low, &cfg()).unwrap().reason(), Reason::ZeroReference);
        assert_eq!(
            d_tilde(&a, &zero, &DivergenceParams::sandwiched(2.0).unwrap(), &cfg()).unwrap().reason(),
            Reason::SupportViolation
        );
        assert!(matches!(q_tilde_alpha(&zero, &a, 2.0, &cfg()), Err(Error::Domain(_))));
    }

    #[test]
    fn lemma9_examples() {
        let phi = diag_fn(&m2(), &[0.4, 0.6]);
        let r = lemma9_check(&phi, &phi, 2.0, &cfg()).unwrap();
        assert!(r.agrees(1e-14) && (r.sandwiched.value() - 1.0).abs() < 1e-14);
        let a = diag_fn(&m2(), &[1.0, 0.0]);
        let b = diag_fn(&m2(), &[0.0, 1.0]);
        let r = lemma9_check(&a, &b, 2.0, &cfg()).unwrap();
        assert!(r.agrees(0.0));
        assert!(!r.sandwiched.is_finite());
    }

    #[test]
    fn additivity_classical() {
        let t = TensorAlgebra::new(&m2(), &m2());
        let rho = diag_fn(&m2(), &[0.5, 0.5]);
        let sigma = diag_fn(&m2(), &[1.0 / 3.0, 2.0 / 3.0]);
        let rho2 = diag_fn(&m2(), &[0.2, 0.8]);
        let sigma2 = diag_fn(&m2(), &[0.6, 0.4]);
        let p = DivergenceParams::alpha_z(2.0, 2.0).unwrap();
        let r = additivity_check(&t, &rho, &sigma, &rho2, &sigma2, &p, &cfg()).unwrap();
        let q2 = 0.2f64.powi(2) / 0.6 + 0.8f64.powi(2) / 0.4;
        assert!((r.q_product.value() - 9.0 / 8.0 * q2).abs() < 1e-13);
        assert!(r.holds(1e-9, 1e-8));
        assert_eq!(r.branch, AdditivityBranch::Finite);
    }

    #[test]
    fn additivity_infinite_branch() {
        let t = TensorAlgebra::new(&m2(), &m2());
        let a = diag_fn(&m2(), &[1.0, 0.0]);
        let b = diag_fn(&m2(), &[0.0, 1.0]);
        let s = diag_fn(&m2(), &[0.5, 0.5]);
        let p = DivergenceParams::alpha_z(3.0, 3.0).unwrap();
        let r = additivity_check(&t, &a, &b, &s, &s, &p, &cfg()).unwrap();
        assert_eq!(r.branch, AdditivityBranch::InfiniteEqualOrders);
        assert!(!r.q_product.is_finite());
        assert!(r.holds(1e-9, 1e-8));
    }

    #[test]
    fn channel_constructors() {
        let alg = BlockAlgebra::new(&[2, 1]).unwrap();
        let psi = PositiveFunctional::from_density(
            Element::from_blocks(
                &alg,
                vec![
                    CMatrix::from_row_major(
                        2,
                        2,
                        vec![C64::new(0.4, 0.0), C64::new(0.1, 0.2), C64::new(0.1, -0.2), C64::new(0.3, 0.0)],
                    ),
                    CMatrix::from_real_diag(&[0.3]),
                ],
            )
            .unwrap(),
            &cfg(),
        )
        .unwrap();
        let id = precompose(&psi, &UnitalChannel::identity(&alg)).unwrap();
        assert!(id.density().distance(psi.density()) < 1e-15);
        let pinched = precompose(&psi, &UnitalChannel::pinching(&alg)).unwrap();
        assert_eq!(pinched.density().block(0)[(0, 1)], C64::new(0.0, 0.0));
        assert!((pinched.mass() - psi.mass()).abs() < 1e-15);
        assert!(UnitalChannel::new(&alg, &alg, vec![CMatrix::identity(3).scale(C64::new(0.5, 0.0))]).is_err());
    }

    #[test]
    fn embedding_takes_partial_trace() {
        let left = BlockAlgebra::new(&[2, 1]).unwrap();
        let right = BlockAlgebra::new(&[2]).unwrap();
        let t = TensorAlgebra::new(&left, &right);
        let psi1 = diag_fn(&left, &[0.1, 0.2, 0.7]);
        let psi2 = diag_fn(&right, &[0.2, 0.3]);
        let gamma = UnitalChannel::embedding(&t);
        let joint = tensorprod::kron_functional(&t, &psi1, &psi2).unwrap();
        let pulled = precompose(&joint, &gamma).unwrap();
        assert!(pulled.density().distance(&psi1.density().scale_real(0.5)) < 1e-15);
        let a = Element::from_real_diag(&left, &[1.0, -2.0, 3.0]).unwrap();
        let image = gamma.apply(&a).unwrap();
        let expect = tensorprod::kron_element(&t, &a, &Element::identity(&right)).unwrap();
        assert!(image.distance(&expect) < 1e-15);
    }

    #[test]
    fn dpi_examples() {
        let rho = diag_fn(&m2(), &[0.5, 0.5]);
        let sigma = diag_fn(&m2(), &[1.0 / 3.0, 2.0 / 3.0]);
        let p = DivergenceParams::sandwiched(2.0).unwrap();
        let r = dpi_probe(&rho, &sigma, &UnitalChannel::identity(&m2()), &p, &cfg()).unwrap();
        assert!(r.excess().abs() < 1e-15 && r.asserted);
        let r = dpi_probe(&rho, &sigma, &UnitalChannel::pinching(&m2()), &p, &cfg()).unwrap();
        assert!(r.holds(1e-9));
    }

    #[test]
    fn monotone_table() {
        let v = |a, z| dpi_valid(&DivergenceParams::alpha_z(a, z).unwrap());
        assert!(v(0.5, 0.5) && v(0.3, 0.7) && !v(0.3, 0.5));
        assert!(v(1.5, 1.5) && v(1.5, 0.75) && !v(1.5, 0.5) && !v(1.5, 3.0));
        assert!(v(2.0, 1.0) && v(3.0, 2.0) && !v(3.0, 1.5) && !v(3.0, 6.0));
        assert!(dpi_valid(&DivergenceParams::sandwiched(0.5).unwrap()));
    }

    #[test]
    fn spade_paths_agree_on_example() {
        let alg = BlockAlgebra::full(3).unwrap();
        let phi = diag_fn(&alg, &[0.2, 0.8, 0.0]);
        let psi = diag_fn(&alg, &[0.5, 0.5, 0.0]);
        let p = DivergenceParams::alpha_z(2.0, 1.5).unwrap();
        let a = spade_solution(&psi, &phi, &p, &cfg()).unwrap().unwrap();
        let b = spade_solution_least_squares(&psi, &phi, &p, &cfg()).unwrap().unwrap();
        assert!(a.distance(&b) < 1e-12);
        let outside = diag_fn(&alg, &[0.5, 0.0, 0.5]);
        assert!(spade_solution(&outside, &phi, &p, &cfg()).unwrap().is_none());
        assert!(spade_solution_least_squares(&outside, &phi, &p, &cfg()).unwrap().is_none());
    }
}
