//! Normal positive functionals carried by their densities, and the tracial
//! Connes cocycle `[Dψ:Dφ]_t = h_ψ^{it} h_φ^{-it}`.

use alloc::format;

use crate::algebra::{self, BlockAlgebra, Element, HermitianSpectrum, SpectralFn};
use crate::{Error, Result, SpectralConfig, C64};

/// `ψ(a) = tr(h_ψ a)` with `h_ψ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveFunctional {
    density: Element,
}

impl PositiveFunctional {
    /// Validates `h`: Hermitian within tolerance (then symmetrized) and PSD
    /// after clipping. If clipping changed an eigenvalue the density is
    /// rebuilt from the clipped spectrum.
    pub fn from_density(h: Element, cfg: &SpectralConfig) -> Result<Self> {
        let spec = algebra::hermitian_eig(&h, false, cfg)?;
        let clipped = spec.eigenvalues().iter().any(|&v| v < 0.0);
        let spec = spec.into_psd()?;
        let density = if clipped {
            spec.reconstruct().hermitian_part()
        } else {
            h.hermitian_part()
        };
        Ok(Self { density })
    }

    /// Wraps a density known to be PSD (e.g. built as `G G*`).
    pub fn from_density_unchecked(h: Element) -> Self {
        Self { density: h }
    }

    pub fn zero(algebra: &BlockAlgebra) -> Self {
        Self {
            density: Element::zero(algebra),
        }
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        self.density.algebra()
    }

    pub fn density(&self) -> &Element {
        &self.density
    }

    /// `ψ(a) = tr(h_ψ a)`.
    pub fn evaluate(&self, a: &Element) -> Result<C64> {
        Ok(self.density.multiply(a)?.canonical_trace())
    }

    /// `ψ(1)`.
    pub fn mass(&self) -> f64 {
        self.density.canonical_trace().re
    }

    pub fn is_zero(&self) -> bool {
        self.density.is_zero()
    }

    pub fn spectrum(&self, cfg: &SpectralConfig) -> Result<HermitianSpectrum> {
        algebra::psd_spectrum(&self.density, cfg)
    }

    /// `s(ψ)`.
    pub fn support(&self, cfg: &SpectralConfig) -> Result<Element> {
        Ok(self.spectrum(cfg)?.support())
    }

    /// `s(ψ) = 1`.
    pub fn is_faithful(&self, cfg: &SpectralConfig) -> Result<bool> {
        Ok(!self.is_zero() && self.spectrum(cfg)?.is_injective())
    }

    /// `λψ`.
    pub fn scale(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("scale factor must be >= 0, got {lambda}")));
        }
        Ok(Self {
            density: self.density.scale_real(lambda),
        })
    }

    /// `ψ + ψ′`.
    pub fn sum(&self, rhs: &Self) -> Result<Self> {
        Ok(Self {
            density: self.density.add(&rhs.density)?,
        })
    }
}

/// `h_ψ`, the density with respect to the canonical trace.
pub fn haagerup_density(psi: &PositiveFunctional) -> Element {
    psi.density.clone()
}

/// Free-function form of [`PositiveFunctional::scale`].
pub fn scale(psi: &PositiveFunctional, lambda: f64) -> Result<PositiveFunctional> {
    psi.scale(lambda)
}

/// `[Dψ:Dφ]_t = f_t(h_ψ) f_{-t}(h_φ)` for faithful `φ`.
pub fn connes_cocycle(
    psi: &PositiveFunctional,
    phi: &PositiveFunctional,
    t: f64,
    cfg: &SpectralConfig,
) -> Result<Element> {
    psi.density.check_same_algebra(&phi.density)?;
    let phi_spec = phi.spectrum(cfg)?;
    if phi.is_zero() || !phi_spec.is_injective() {
        return Err(Error::NotFaithful);
    }
    let left = psi.spectrum(cfg)?.apply(&SpectralFn::ImagPower(t))?;
    let right = phi_spec.apply(&SpectralFn::ImagPower(-t))?;
    left.multiply(&right)
}

/// Both sides of `[Dψ:Dφ]_t = s(ψ)[Dχ:Dφ]_t` with `χ = ψ + ψ′`.
#[derive(Debug, Clone)]
pub struct CocycleCut {
    pub lhs: Element,
    pub rhs: Element,
}

impl CocycleCut {
    pub fn residual(&self) -> f64 {
        self.lhs.distance(&self.rhs)
    }
}

/// Evaluates the support-cut identity. Requires `s(ψ)s(ψ′) = 0` and
/// `s(ψ) + s(ψ′) = 1` within `1e-8`, so that `χ` is faithful.
pub fn lemma1_cut(
    psi: &PositiveFunctional,
    psi_prime: &PositiveFunctional,
    phi: &PositiveFunctional,
    t: f64,
    cfg: &SpectralConfig,
) -> Result<CocycleCut> {
    const SUPPORT_TOL: f64 = 1e-8;
    let s = psi.support(cfg)?;
    let s_prime = psi_prime.support(cfg)?;
    let one = Element::identity(psi.algebra());
    let cover = s.add(&s_prime)?.distance(&one);
    let overlap = s.multiply(&s_prime)?.frobenius_norm();
    if cover > SUPPORT_TOL || overlap > SUPPORT_TOL {
        return Err(Error::Precondition(format!(
            "supports must be complementary: ‖s+s′−1‖={cover:e}, ‖s s′‖={overlap:e}"
        )));
    }
    let chi = psi.sum(psi_prime)?;
    let lhs = connes_cocycle(psi, phi, t, cfg)?;
    let rhs = s.multiply(&connes_cocycle(&chi, phi, t, cfg)?)?;
    Ok(CocycleCut { lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::CMatrix;
    use alloc::vec;

    fn cfg() -> SpectralConfig {
        SpectralConfig::default()
    }

    fn m2() -> BlockAlgebra {
        BlockAlgebra::full(2).unwrap()
    }

    fn diag_fn(d: &[f64]) -> PositiveFunctional {
        PositiveFunctional::from_density(Element::from_real_diag(&m2(), d).unwrap(), &cfg()).unwrap()
    }

    fn expi(x: f64) -> C64 {
        C64::new(x.cos(), x.sin())
    }

    #[test]
    fn density_examples() {
        let psi = diag_fn(&[0.3, 0.7]);
        assert!((psi.mass() - 1.0).abs() < 1e-15);
        let a = Element::from_blocks(
            &m2(),
            vec![CMatrix::from_row_major(
                2,
                2,
                vec![C64::new(2.0, 0.0), C64::new(5.0, 1.0), C64::new(-1.0, 0.0), C64::new(3.0, 0.0)],
            )],
        )
        .unwrap();
        assert!((psi.evaluate(&a).unwrap() - C64::new(0.3 * 2.0 + 0.7 * 3.0, 0.0)).norm() < 1e-15);
        assert!(haagerup_density(&PositiveFunctional::zero(&m2())).is_zero());
    }

    #[test]
    fn rejects_non_positive_density() {
        let h = Element::from_real_diag(&m2(), &[-0.5, 1.0]).unwrap();
        assert!(matches!(
            PositiveFunctional::from_density(h, &cfg()),
            Err(Error::NotPositive(_))
        ));
    }

    #[test]
    fn scale_examples() {
        let psi = diag_fn(&[0.2, 0.3]);
        assert_eq!(psi.scale(1.0).unwrap(), psi);
        assert!(psi.scale(0.0).unwrap().is_zero());
        assert!((psi.scale(2.0).unwrap().mass() - 1.0).abs() < 1e-15);
        assert!(matches!(psi.scale(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn cocycle_examples() {
        let phi = diag_fn(&[1.0 / 3.0, 2.0 / 3.0]);
        let u = connes_cocycle(&phi, &phi, 2.3, &cfg()).unwrap();
        assert!(u.distance(&Element::identity(&m2())) < 1e-14);

        let psi = diag_fn(&[0.5, 0.5]);
        let u = connes_cocycle(&psi, &phi, 1.0, &cfg()).unwrap();
        assert!((u.block(0)[(0, 0)] - expi(1.5f64.ln())).norm() < 1e-14);
        assert!((u.block(0)[(1, 1)] - expi(0.75f64.ln())).norm() < 1e-14);

        let thin = diag_fn(&[0.0, 0.4]);
        let u0 = connes_cocycle(&thin, &phi, 0.0, &cfg()).unwrap();
        assert!(u0.distance(&thin.support(&cfg()).unwrap()) < 1e-15);

        assert!(matches!(connes_cocycle(&phi, &thin, 1.0, &cfg()), Err(Error::NotFaithful)));
    }

    #[test]
    fn support_cut_examples() {
        let phi = diag_fn(&[0.5, 0.5]);
        let psi = diag_fn(&[0.4, 0.0]);
        let psi_prime = diag_fn(&[0.0, 0.6]);
        let cut = lemma1_cut(&psi, &psi_prime, &phi, 1.0, &cfg()).unwrap();
        assert!((cut.lhs.block(0)[(0, 0)] - expi(0.8f64.ln())).norm() < 1e-14);
        assert!(cut.lhs.block(0)[(1, 1)].norm() < 1e-15);
        assert!(cut.residual() <= 1e-9);

        let faithful = diag_fn(&[0.3, 0.7]);
        let zero = PositiveFunctional::zero(&m2());
        let cut = lemma1_cut(&faithful, &zero, &phi, 0.6, &cfg()).unwrap();
        let direct = connes_cocycle(&faithful, &phi, 0.6, &cfg()).unwrap();
        assert!(cut.lhs.distance(&direct) < 1e-15 && cut.rhs.distance(&direct) < 1e-14);

        assert!(matches!(
            lemma1_cut(&psi, &psi, &phi, 1.0, &cfg()),
            Err(Error::Precondition(_))
        ));
    }
}
