//! Haagerup L^p (quasi-)norms as Schatten norms for the canonical trace, and
//! Kosaki's interpolated spaces `L^p(M, φ)_η`, realized concretely as
//! `h_φ^{η/q} L^p(M) h_φ^{(1−η)/q}` with the transported norm.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::algebra::{BlockAlgebra, Element, HermitianSpectrum, SpectralFn};
use crate::functionals::PositiveFunctional;
use crate::matrix::{self, CMatrix};
use crate::{Error, Result, SpectralConfig, C64};

/// Exponent `p ∈ (0, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpExponent {
    Finite(f64),
    Infinite,
}

impl LpExponent {
    /// `f64::INFINITY` maps to [`LpExponent::Infinite`].
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(Self::Infinite)
        } else if p.is_finite() && p > 0.0 {
            Ok(Self::Finite(p))
        } else {
            Err(Error::Domain(format!("L^p exponent must lie in (0, inf], got {p}")))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Self::Finite(p) => p,
            Self::Infinite => f64::INFINITY,
        }
    }

    /// `1/p` (zero at `p = ∞`).
    pub fn reciprocal(self) -> f64 {
        match self {
            Self::Finite(p) => 1.0 / p,
            Self::Infinite => 0.0,
        }
    }

    /// Dual exponent `q` with `1/p + 1/q = 1`; only for `p ≥ 1`.
    pub fn conjugate(self) -> Result<Self> {
        match self {
            Self::Infinite => Ok(Self::Finite(1.0)),
            Self::Finite(1.0) => Ok(Self::Infinite),
            Self::Finite(p) if p > 1.0 => Ok(Self::Finite(p / (p - 1.0))),
            Self::Finite(p) => Err(Error::Domain(format!("no dual exponent for p = {p} < 1"))),
        }
    }
}

/// `‖x‖_p = (Σ σ_i^p)^{1/p}`, `‖x‖_∞ = max σ_i`.
pub fn lp_norm(x: &Element, p: LpExponent) -> f64 {
    schatten_norm(&x.singular_values(), p)
}

/// Schatten norm of a list of singular values, scaled by the largest one to
/// avoid overflow.
pub fn schatten_norm(sigma: &[f64], p: LpExponent) -> f64 {
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0.0;
    }
    match p {
        LpExponent::Infinite => smax,
        LpExponent::Finite(p) => {
            let s: f64 = sigma.iter().map(|&v| (v / smax).powf(p)).sum();
            smax * s.powf(1.0 / p)
        }
    }
}

/// `Σ σ_i^r = ‖x‖_r^r` without the final root.
pub fn schatten_power_sum(x: &Element, r: f64) -> f64 {
    x.singular_values().iter().filter(|&&s| s > 0.0).map(|&s| s.powf(r)).sum()
}

/// Parameters of `L^p(M, φ)_η`.
#[derive(Debug, Clone)]
pub struct KosakiSpec {
    phi: PositiveFunctional,
    spectrum: HermitianSpectrum,
    p: LpExponent,
    eta: f64,
}

/// Minimum `λ_min / λ_max` of `h_φ` accepted by [`KosakiSpec`].
pub const FAITHFULNESS_FLOOR: f64 = 1e-13;

impl KosakiSpec {
    pub fn new(phi: &PositiveFunctional, p: LpExponent, eta: f64, cfg: &SpectralConfig) -> Result<Self> {
        if p.value() < 1.0 {
            return Err(Error::Domain(format!("Kosaki spaces need p >= 1, got {}", p.value())));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::Domain(format!("eta must lie in [0, 1], got {eta}")));
        }
        let spectrum = phi.spectrum(cfg)?;
        if phi.is_zero() || !spectrum.is_injective() {
            return Err(Error::NotFaithful);
        }
        let ratio = spectrum.min_eigenvalue() / spectrum.scale();
        if ratio < FAITHFULNESS_FLOOR {
            return Err(Error::Conditioning {
                residual: ratio,
                bound: FAITHFULNESS_FLOOR,
            });
        }
        Ok(Self {
            phi: phi.clone(),
            spectrum,
            p,
            eta,
        })
    }

    pub fn phi(&self) -> &PositiveFunctional {
        &self.phi
    }

    pub fn p(&self) -> LpExponent {
        self.p
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        self.phi.algebra()
    }

    /// `1/q = 1 − 1/p`.
    pub fn inv_q(&self) -> f64 {
        1.0 - self.p.reciprocal()
    }

    /// `h_φ^r` (kernel convention; `φ` is faithful here).
    pub fn phi_power(&self, r: f64) -> Element {
        if r == 0.0 {
            return Element::identity(self.algebra());
        }
        self.spectrum
            .apply(&SpectralFn::Power(r))
            .expect("faithful density has a positive spectrum")
    }

    /// Same `φ` and `η` with another exponent.
    pub fn with_exponent(&self, p: LpExponent) -> Result<Self> {
        if p.value() < 1.0 {
            return Err(Error::Domain(format!("Kosaki spaces need p >= 1, got {}", p.value())));
        }
        Ok(Self { p, ..self.clone() })
    }
}

fn sandwich(left: &Element, x: &Element, right: &Element) -> Result<Element> {
    left.multiply(x)?.multiply(right)
}

/// `a ↦ h_φ^η a h_φ^{1−η}`.
pub fn kosaki_embed(a: &Element, spec: &KosakiSpec) -> Result<Element> {
    sandwich(&spec.phi_power(spec.eta), a, &spec.phi_power(1.0 - spec.eta))
}

/// Solves `y = h_φ^{η/q} x h_φ^{(1−η)/q}` for `x`.
pub fn kosaki_membership(y: &Element, spec: &KosakiSpec) -> Result<Element> {
    let iq = spec.inv_q();
    let (l, r) = (spec.eta * iq, (1.0 - spec.eta) * iq);
    let x = sandwich(&spec.phi_power(-l), y, &spec.phi_power(-r))?;
    let back = sandwich(&spec.phi_power(l), &x, &spec.phi_power(r))?;
    let residual = back.distance(y);
    let bound = 1e-9 * (1.0 + y.frobenius_norm());
    if residual > bound {
        return Err(Error::Conditioning { residual, bound });
    }
    Ok(x)
}

/// `‖y‖_{p,φ,η} := ‖x‖_p` for the `x` of [`kosaki_membership`].
pub fn kosaki_norm(y: &Element, spec: &KosakiSpec) -> Result<f64> {
    Ok(lp_norm(&kosaki_membership(y, spec)?, spec.p))
}

/// Two sides of `‖h_φ^η a h_φ^{1−η}‖_{p,φ,η} ≤ ‖a‖^{1/q} ‖h_φ^η a h_φ^{1−η}‖_1^{1/p}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationBound {
    pub lhs: f64,
    pub rhs: f64,
}

impl InterpolationBound {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs + slack
    }
}

pub fn interpolation_bound_check(a: &Element, spec: &KosakiSpec) -> Result<InterpolationBound> {
    let y = kosaki_embed(a, spec)?;
    let lhs = kosaki_norm(&y, spec)?;
    let rhs = a.operator_norm().powf(spec.inv_q()) * lp_norm(&y, LpExponent::Finite(1.0)).powf(spec.p.reciprocal());
    Ok(InterpolationBound { lhs, rhs })
}

/// Rank data of the linear map `a ↦ a h_φ^{1/p}` on the `D`-dimensional carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bijectivity {
    pub dimension: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

/// Relative threshold on `σ_min/σ_max` below which the map counts as singular.
pub const BIJECTIVITY_THRESHOLD: f64 = 1e-10;

impl Bijectivity {
    pub fn ratio(&self) -> f64 {
        if self.sigma_max == 0.0 {
            0.0
        } else {
            self.sigma_min / self.sigma_max
        }
    }

    pub fn is_bijective(&self) -> bool {
        self.ratio() > BIJECTIVITY_THRESHOLD
    }

    /// Full rank but with a ratio close to the threshold.
    pub fn ill_conditioned(&self) -> bool {
        self.ratio() <= 1e3 * BIJECTIVITY_THRESHOLD
    }
}

/// Builds the `D × D` matrix of `a ↦ a h_φ^{1/p}` on matrix units and reads
/// its singular values. Unlike [`KosakiSpec`] this accepts nearly singular `φ`
/// and reports the conditioning instead of rejecting it.
pub fn lemma3_bijectivity(phi: &PositiveFunctional, p: LpExponent, cfg: &SpectralConfig) -> Result<Bijectivity> {
    if p.value() < 1.0 {
        return Err(Error::Domain(format!("need p >= 1, got {}", p.value())));
    }
    let alg = phi.algebra().clone();
    // no kernel cut: near-zero eigenvalues must show up in the rank test
    let spec = crate::algebra::hermitian_eig(phi.density(), false, cfg)?.without_kernel();
    let root_fn = |v: f64| Some(C64::new(if v > 0.0 { v.powf(p.reciprocal()) } else { 0.0 }, 0.0));
    let root = spec.apply(&SpectralFn::Custom {
        f: &root_fn,
        at_zero: C64::new(0.0, 0.0),
    })?;
    let d = alg.dimension();
    let columns: Vec<Vec<C64>> = Element::matrix_units(&alg)
        .iter()
        .map(|e| e.multiply(&root).map(|x| x.flatten()))
        .collect::<Result<_>>()?;
    let lin = CMatrix::from_fn(d, d, |i, j| columns[j][i]);
    let s = matrix::singular_values(&lin);
    Ok(Bijectivity {
        dimension: d,
        sigma_min: s.last().copied().unwrap_or(0.0),
        sigma_max: s.first().copied().unwrap_or(0.0),
    })
}
