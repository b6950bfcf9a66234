//! Tensor products `M₁ ⊗ M₂ = ⊕_{i,j} M_{n_i m_j}` and the identities they
//! satisfy: polar and power factorization, norm multiplicativity for Haagerup
//! and Kosaki norms, and spectral products.
//!
//! Block `(i, j)` of the product sits at flat block index `i·K₂ + j`, and
//! inside it `(x⊗y)[(a,b),(c,d)] = x[a,c]·y[b,d]`.

use alloc::format;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::algebra::{self, BlockAlgebra, Element, SpectralFn};
use crate::functionals::PositiveFunctional;
use crate::lp::{self, KosakiSpec, LpExponent};
use crate::matrix::{self, CMatrix};
use crate::{random, Error, Result, SpectralConfig, C64};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorAlgebra {
    left: BlockAlgebra,
    right: BlockAlgebra,
    product: BlockAlgebra,
}

impl TensorAlgebra {
    pub fn new(left: &BlockAlgebra, right: &BlockAlgebra) -> Self {
        let dims: Vec<usize> = left
            .block_dims()
            .iter()
            .flat_map(|&n| right.block_dims().iter().map(move |&m| n * m))
            .collect();
        Self {
            left: left.clone(),
            right: right.clone(),
            product: BlockAlgebra::new(&dims).expect("products of positive dims are positive"),
        }
    }

    pub fn left(&self) -> &BlockAlgebra {
        &self.left
    }

    pub fn right(&self) -> &BlockAlgebra {
        &self.right
    }

    pub fn product(&self) -> &BlockAlgebra {
        &self.product
    }

    /// Flat product block index of the pair `(i, j)`.
    pub fn block_index(&self, i: usize, j: usize) -> usize {
        i * self.right.num_blocks() + j
    }

    /// Inverse of [`Self::block_index`].
    pub fn block_pair(&self, k: usize) -> (usize, usize) {
        let kr = self.right.num_blocks();
        (k / kr, k % kr)
    }

    fn check_factors(&self, x: &Element, y: &Element) -> Result<()> {
        if x.algebra() != &self.left || y.algebra() != &self.right {
            return Err(Error::Shape(format!(
                "factors on {:?} ⊗ {:?} do not match tensor algebra {:?} ⊗ {:?}",
                x.algebra().block_dims(),
                y.algebra().block_dims(),
                self.left.block_dims(),
                self.right.block_dims()
            )));
        }
        Ok(())
    }
}

/// `x ⊗ y`, blockwise Kronecker product.
pub fn kron_element(t: &TensorAlgebra, x: &Element, y: &Element) -> Result<Element> {
    t.check_factors(x, y)?;
    let blocks = x
        .blocks()
        .iter()
        .flat_map(|xb| y.blocks().iter().map(move |yb| xb.kron(yb)))
        .collect();
    Element::from_blocks(&t.product, blocks)
}

/// `ψ₁ ⊗ ψ₂`, whose density is `h_{ψ₁} ⊗ h_{ψ₂}`.
pub fn kron_functional(
    t: &TensorAlgebra,
    psi1: &PositiveFunctional,
    psi2: &PositiveFunctional,
) -> Result<PositiveFunctional> {
    let h = kron_element(t, psi1.density(), psi2.density())?;
    Ok(PositiveFunctional::from_density_unchecked(h.hermitian_part()))
}

/// Residuals of `polar(x⊗y) = (v_x⊗v_y, |x|⊗|y|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarFactorization {
    pub isometry_residual: f64,
    pub modulus_residual: f64,
}

impl PolarFactorization {
    pub fn max_residual(&self) -> f64 {
        self.isometry_residual.max(self.modulus_residual)
    }
}

pub fn lemma5_polar(t: &TensorAlgebra, x: &Element, y: &Element, cfg: &SpectralConfig) -> Result<PolarFactorization> {
    let joint = algebra::polar_decompose(&kron_element(t, x, y)?, cfg);
    let px = algebra::polar_decompose(x, cfg);
    let py = algebra::polar_decompose(y, cfg);
    Ok(PolarFactorization {
        isometry_residual: joint.v.distance(&kron_element(t, &px.v, &py.v)?),
        modulus_residual: joint.abs.distance(&kron_element(t, &px.abs, &py.abs)?),
    })
}

/// Power applied to moduli in [`lemma5_power`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerKind {
    /// `λ ↦ λ^p`, `p > 0`.
    Real(f64),
    /// `λ ↦ λ^{it}` with the kernel convention.
    Imaginary(f64),
}

impl PowerKind {
    fn spectral_fn(self) -> SpectralFn<'static> {
        match self {
            Self::Real(p) => SpectralFn::Power(p),
            Self::Imaginary(t) => SpectralFn::ImagPower(t),
        }
    }
}

/// `‖f(|x⊗y|) − f(|x|)⊗f(|y|)‖_F` for a power `f`.
pub fn lemma5_power(t: &TensorAlgebra, x: &Element, y: &Element, kind: PowerKind, cfg: &SpectralConfig) -> Result<f64> {
    if let PowerKind::Real(p) = kind {
        if p.is_nan() || p <= 0.0 {
            return Err(Error::Domain(format!("power must be positive, got {p}")));
        }
    }
    let f = kind.spectral_fn();
    let joint = algebra::polar_decompose(&kron_element(t, x, y)?, cfg).abs;
    let lhs = algebra::func_calc(&joint, &f, cfg)?;
    let fx = algebra::func_calc(&algebra::polar_decompose(x, cfg).abs, &f, cfg)?;
    let fy = algebra::func_calc(&algebra::polar_decompose(y, cfg).abs, &f, cfg)?;
    Ok(lhs.distance(&kron_element(t, &fx, &fy)?))
}

/// Two sides of a multiplicativity identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormPair {
    pub lhs: f64,
    pub rhs: f64,
}

impl NormPair {
    /// `|lhs − rhs| / (1 + rhs)`.
    pub fn relative_error(&self) -> f64 {
        (self.lhs - self.rhs).abs() / (1.0 + self.rhs.abs())
    }
}

/// `‖x⊗y‖_p` against `‖x‖_p ‖y‖_p`.
pub fn theorem6_norm(t: &TensorAlgebra, x: &Element, y: &Element, p: LpExponent) -> Result<NormPair> {
    let xy = kron_element(t, x, y)?;
    Ok(NormPair {
        lhs: lp::lp_norm(&xy, p),
        rhs: lp::lp_norm(x, p) * lp::lp_norm(y, p),
    })
}

/// Rank of a sample of simple tensors against the product dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpanReport {
    pub rank: usize,
    pub dimension: usize,
}

impl SpanReport {
    pub fn spans(&self) -> bool {
        self.rank == self.dimension
    }
}

/// Rank (relative threshold `1e-10`) of the span of the given simple tensors.
pub fn simple_tensor_rank(t: &TensorAlgebra, factors: &[(Element, Element)]) -> Result<SpanReport> {
    let d = t.product.dimension();
    let columns: Vec<Vec<C64>> = factors
        .iter()
        .map(|(x, y)| kron_element(t, x, y).map(|e| e.flatten()))
        .collect::<Result<_>>()?;
    let sample = CMatrix::from_fn(d, columns.len(), |i, j| columns[j][i]);
    let s = matrix::singular_values(&sample);
    let smax = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&v| smax > 0.0 && v > 1e-10 * smax).count();
    Ok(SpanReport { rank, dimension: d })
}

/// Draws `sample_budget ≥ D` random simple tensors and checks they span the
/// product carrier.
pub fn theorem6_spanning<R: RngCore + ?Sized>(
    t: &TensorAlgebra,
    sample_budget: usize,
    rng: &mut R,
) -> Result<SpanReport> {
    let d = t.product.dimension();
    if sample_budget < d {
        return Err(Error::Domain(format!("sample budget {sample_budget} below dimension {d}")));
    }
    let factors: Vec<(Element, Element)> = (0..sample_budget)
        .map(|_| {
            (
                random::gaussian_element(rng, &t.left),
                random::gaussian_element(rng, &t.right),
            )
        })
        .collect();
    simple_tensor_rank(t, &factors)
}

/// `‖x₁⊗x₂‖_{p,φ₁⊗φ₂,η}` against `‖x₁‖_{p,φ₁,η}‖x₂‖_{p,φ₂,η}`.
pub fn corollary7_norm(
    t: &TensorAlgebra,
    x1: &Element,
    x2: &Element,
    spec1: &KosakiSpec,
    spec2: &KosakiSpec,
    cfg: &SpectralConfig,
) -> Result<NormPair> {
    if spec1.p() != spec2.p() || spec1.eta() != spec2.eta() {
        return Err(Error::Domain("Kosaki specs must share p and eta".into()));
    }
    let phi = kron_functional(t, spec1.phi(), spec2.phi())?;
    let joint = KosakiSpec::new(&phi, spec1.p(), spec1.eta(), cfg)?;
    let lhs = lp::kosaki_norm(&kron_element(t, x1, x2)?, &joint)?;
    let rhs = lp::kosaki_norm(x1, spec1)? * lp::kosaki_norm(x2, spec2)?;
    Ok(NormPair { lhs, rhs })
}

/// Sorted comparison of the spectrum of `|x|⊗|y|` with all products `λ_i μ_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralProduct {
    pub max_deviation: f64,
    /// Largest eigenvalue of `|x|⊗|y|`.
    pub scale: f64,
}

impl SpectralProduct {
    pub fn matches(&self, rel_tol: f64) -> bool {
        self.max_deviation <= rel_tol * self.scale.max(f64::MIN_POSITIVE)
    }
}

pub fn spectral_product_check(t: &TensorAlgebra, x: &Element, y: &Element, cfg: &SpectralConfig) -> Result<SpectralProduct> {
    let ax = algebra::polar_decompose(x, cfg).abs;
    let ay = algebra::polar_decompose(y, cfg).abs;
    let mut joint = algebra::hermitian_eig(&kron_element(t, &ax, &ay)?, true, cfg)?.eigenvalues();
    let lx = algebra::hermitian_eig(&ax, true, cfg)?.eigenvalues();
    let ly = algebra::hermitian_eig(&ay, true, cfg)?.eigenvalues();
    let mut products: Vec<f64> = lx.iter().flat_map(|&a| ly.iter().map(move |&b| a * b)).collect();
    joint.sort_by(f64::total_cmp);
    products.sort_by(f64::total_cmp);
    let max_deviation = joint
        .iter()
        .zip(&products)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = joint.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(SpectralProduct { max_deviation, scale })
}

/// `‖f(|x|⊗|y|) − f(|x|)⊗f(|y|)‖_F` for a multiplicative `f`.
pub fn multiplicative_fn_check(
    t: &TensorAlgebra,
    x: &Element,
    y: &Element,
    f: &SpectralFn<'_>,
    cfg: &SpectralConfig,
) -> Result<f64> {
    let ax = algebra::polar_decompose(x, cfg).abs;
    let ay = algebra::polar_decompose(y, cfg).abs;
    let joint = algebra::func_calc(&kron_element(t, &ax, &ay)?.hermitian_part(), f, cfg)?;
    let split = kron_element(t, &algebra::func_calc(&ax, f, cfg)?, &algebra::func_calc(&ay, f, cfg)?)?;
    Ok(joint.distance(&split))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cfg() -> SpectralConfig {
        SpectralConfig::default()
    }

    fn alg(d: &[usize]) -> BlockAlgebra {
        BlockAlgebra::new(d).unwrap()
    }

    fn diag(a: &BlockAlgebra, d: &[f64]) -> Element {
        Element::from_real_diag(a, d).unwrap()
    }

    #[test]
    fn product_block_layout() {
        let t = TensorAlgebra::new(&alg(&[2, 3]), &alg(&[1, 2]));
        assert_eq!(t.product().block_dims(), &[2, 4, 3, 6]);
        assert_eq!(t.block_index(1, 0), 2);
        assert_eq!(t.block_pair(3), (1, 1));
    }

    #[test]
    fn kron_examples() {
        let t = TensorAlgebra::new(&alg(&[2]), &alg(&[2]));
        let id = kron_element(&t, &Element::identity(t.left()), &Element::identity(t.right())).unwrap();
        assert_eq!(id, Element::identity(t.product()));

        let t = TensorAlgebra::new(&alg(&[2]), &alg(&[1]));
        let k = kron_element(&t, &diag(t.left(), &[1.0, 2.0]), &diag(t.right(), &[3.0])).unwrap();
        assert_eq!(k, diag(t.product(), &[3.0, 6.0]));
        assert!(matches!(
            kron_element(&t, &diag(t.right(), &[3.0]), &diag(t.right(), &[3.0])),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn kron_functional_masses() {
        let t = TensorAlgebra::new(&alg(&[2]), &alg(&[2]));
        let a = PositiveFunctional::from_density(diag(t.left(), &[0.2, 0.3]), &cfg()).unwrap();
        let b = PositiveFunctional::from_density(diag(t.right(), &[0.1, 0.3]), &cfg()).unwrap();
        let ab = kron_functional(&t, &a, &b).unwrap();
        assert!((ab.mass() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn polar_examples() {
        let t = TensorAlgebra::new(&alg(&[2]), &alg(&[1]));
        let x = Element::from_blocks(
            t.left(),
            vec![CMatrix::from_row_major(
                2,
                2,
                vec![C64::new(0.0, 0.0), C64::new(2.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
            )],
        )
        .unwrap();
        let y = diag(t.right(), &[1.0]);
        let r = lemma5_polar(&t, &x, &y, &cfg()).unwrap();
        assert!(r.max_residual() < 1e-15);
        let joint = algebra::polar_decompose(&kron_element(&t, &x, &y).unwrap(), &cfg());
        assert_eq!(joint.abs, diag(t.product(), &[0.0, 2.0]));

        let t = TensorAlgebra::new(&alg(&[2]), &alg(&[2]));
        let x = diag(t.left(), &[0.0, 1.5]);
        let y = diag(t.right(), &[0.7, 0.2]);
        let joint = algebra::polar_decompose(&kron_element(&t, &x, &y).unwrap(), &cfg());
        let sx = algebra::support_projection(&x, &cfg()).unwrap();
        let sy = algebra::support_projection(&y, &cfg()).unwrap();
        assert!(joint.v.distance(&kron_element(&t, &sx, &sy).unwrap()) < 1e-15);
    }

    #[test]
    fn power_example() {
        let t = TensorAlgebra::new(&alg(&[2]), &alg(&[1]));
        let x = diag(t.left(), &[0.0, 2.0]);
        let y = diag(t.right(), &[3.0]);
        assert!(lemma5_power(&t, &x, &y, PowerKind::Real(2.0), &cfg()).unwrap() < 1e-13);
        let joint = algebra::func_calc(&kron_element(&t, &x, &y).unwrap(), &SpectralFn::Power(2.0), &cfg()).unwrap();
        assert!(joint.distance(&diag(t.product(), &[0.0, 36.0])) < 1e-13);
        assert!(lemma5_power(&t, &x, &y, PowerKind::Imaginary(0.7), &cfg()).unwrap() < 1e-14);
        assert!(lemma5_power(&t, &x, &y, PowerKind::Real(-1.0), &cfg()).is_err());
    }

    #[test]
    fn norm_example() {
        let t = TensorAlgebra::new(&alg(&[2]), &alg(&[1]));
        let r = theorem6_norm(&t, &diag(t.left(), &[1.0, 2.0]), &diag(t.right(), &[3.0]), LpExponent::Finite(2.0)).unwrap();
        let expect = 3.0 * 5.0f64.sqrt();
        assert!((r.lhs - expect).abs() < 1e-14 && (r.rhs - expect).abs() < 1e-14);
    }

    #[test]
    fn spanning_examples() {
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(5);
        let t = TensorAlgebra::new(&alg(&[1]), &alg(&[1]));
        assert!(theorem6_spanning(&t, 1, &mut rng).unwrap().spans());
        let t = TensorAlgebra::new(&alg(&[2]), &alg(&[2]));
        let r = theorem6_spanning(&t, 16, &mut rng).unwrap();
        assert_eq!(r.rank, 16);
        let t = TensorAlgebra::new(&alg(&[2]), &alg(&[3]));
        let r = theorem6_spanning(&t, 36, &mut rng).unwrap();
        assert_eq!((r.rank, r.dimension), (36, 36));
        assert!(theorem6_spanning(&t, 10, &mut rng).is_err());
    }

    #[test]
    fn corollary7_states() {
        let t = TensorAlgebra::new(&alg(&[2]), &alg(&[2]));
        let p1 = PositiveFunctional::from_density(diag(t.left(), &[0.3, 0.7]), &cfg()).unwrap();
        let p2 = PositiveFunctional::from_density(diag(t.right(), &[0.6, 0.4]), &cfg()).unwrap();
        let s1 = KosakiSpec::new(&p1, LpExponent::Finite(2.0), 0.25, &cfg()).unwrap();
        let s2 = KosakiSpec::new(&p2, LpExponent::Finite(2.0), 0.25, &cfg()).unwrap();
        let r = corollary7_norm(&t, p1.density(), p2.density(), &s1, &s2, &cfg()).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-14 && (r.rhs - 1.0).abs() < 1e-14);
        let s3 = KosakiSpec::new(&p2, LpExponent::Finite(3.0), 0.25, &cfg()).unwrap();
        assert!(corollary7_norm(&t, p1.density(), p2.density(), &s1, &s3, &cfg()).is_err());
    }
}
