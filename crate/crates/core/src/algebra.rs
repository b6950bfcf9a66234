//! Finite direct sums of full matrix algebras.
//!
//! An [`Element`] is a tuple of square complex blocks conforming to a
//! [`BlockAlgebra`]. Spectral work goes through [`HermitianSpectrum`], whose
//! kernel mask drives the convention that imaginary, fractional and negative
//! powers vanish on the kernel.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::matrix::{self, CMatrix};
use crate::{Error, Result, SpectralConfig, C64, HERMITIAN_TOL, PSD_CLIP_TOL};

/// `M = M_{n_1} ⊕ … ⊕ M_{n_K}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockAlgebra {
    dims: Arc<[usize]>,
}

impl BlockAlgebra {
    pub fn new(block_dims: &[usize]) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(Error::Domain("an algebra needs at least one block".into()));
        }
        if block_dims.contains(&0) {
            return Err(Error::Domain(format!("block dimensions must be positive: {block_dims:?}")));
        }
        Ok(Self {
            dims: block_dims.into(),
        })
    }

    /// The full matrix algebra `M_n`.
    pub fn full(n: usize) -> Result<Self> {
        Self::new(&[n])
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_blocks(&self) -> usize {
        self.dims.len()
    }

    /// `D = Σ n_k²`, the flat length of an element.
    pub fn dimension(&self) -> usize {
        self.dims.iter().map(|n| n * n).sum()
    }

    /// `Σ n_k`, the dimension of the Hilbert space the blocks act on.
    pub fn carrier_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Offset of each block on the carrier.
    pub fn carrier_offsets(&self) -> Vec<usize> {
        self.dims
            .iter()
            .scan(0, |acc, &n| {
                let start = *acc;
                *acc += n;
                Some(start)
            })
            .collect()
    }
}

/// Block-diagonal element of a [`BlockAlgebra`].
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    algebra: BlockAlgebra,
    blocks: Vec<CMatrix>,
}

impl Element {
    pub fn from_blocks(algebra: &BlockAlgebra, blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.len() != algebra.num_blocks() {
            return Err(Error::Shape(format!(
                "expected {} blocks, got {}",
                algebra.num_blocks(),
                blocks.len()
            )));
        }
        for (k, (b, &n)) in blocks.iter().zip(algebra.block_dims()).enumerate() {
            if b.rows() != n || b.cols() != n {
                return Err(Error::Shape(format!(
                    "block {k} is {}x{}, expected {n}x{n}",
                    b.rows(),
                    b.cols()
                )));
            }
        }
        Ok(Self {
            algebra: algebra.clone(),
            blocks,
        })
    }

    pub fn zero(algebra: &BlockAlgebra) -> Self {
        Self::from_map(algebra, |n, _| CMatrix::zeros(n, n))
    }

    pub fn identity(algebra: &BlockAlgebra) -> Self {
        Self::from_map(algebra, |n, _| CMatrix::identity(n))
    }

    /// Diagonal element from the concatenated real diagonal of all blocks.
    pub fn from_real_diag(algebra: &BlockAlgebra, diag: &[f64]) -> Result<Self> {
        if diag.len() != algebra.carrier_dim() {
            return Err(Error::Shape(format!(
                "diagonal of length {} for carrier dimension {}",
                diag.len(),
                algebra.carrier_dim()
            )));
        }
        let offsets = algebra.carrier_offsets();
        Ok(Self::from_map(algebra, |n, k| {
            CMatrix::from_real_diag(&diag[offsets[k]..offsets[k] + n])
        }))
    }

    fn from_map(algebra: &BlockAlgebra, mut f: impl FnMut(usize, usize) -> CMatrix) -> Self {
        let blocks = algebra
            .block_dims()
            .iter()
            .enumerate()
            .map(|(k, &n)| f(n, k))
            .collect();
        Self {
            algebra: algebra.clone(),
            blocks,
        }
    }

    fn map_blocks(&self, f: impl FnMut(&CMatrix) -> CMatrix) -> Self {
        Self {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    fn zip_blocks(&self, rhs: &Self, mut f: impl FnMut(&CMatrix, &CMatrix) -> CMatrix) -> Result<Self> {
        self.check_same_algebra(rhs)?;
        Ok(Self {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| f(a, b)).collect(),
        })
    }

    pub fn check_same_algebra(&self, rhs: &Self) -> Result<()> {
        if self.algebra != rhs.algebra {
            return Err(Error::Shape(format!(
                "algebra mismatch: {:?} vs {:?}",
                self.algebra.block_dims(),
                rhs.algebra.block_dims()
            )));
        }
        Ok(())
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &CMatrix {
        &self.blocks[k]
    }

    /// Blockwise product.
    pub fn multiply(&self, rhs: &Self) -> Result<Self> {
        self.zip_blocks(rhs, CMatrix::matmul)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_blocks(rhs, CMatrix::add)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_blocks(rhs, CMatrix::sub)
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map_blocks(|b| b.scale(s))
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        self.map_blocks(CMatrix::adjoint)
    }

    /// Sum of the diagonal entries over all blocks.
    pub fn canonical_trace(&self) -> C64 {
        self.blocks.iter().map(CMatrix::trace).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// `‖self − rhs‖_F`; panics on algebra mismatch.
    pub fn distance(&self, rhs: &Self) -> f64 {
        self.sub(rhs).expect("distance between elements of different algebras").frobenius_norm()
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.blocks.iter().map(CMatrix::hermitian_defect).fold(0.0, f64::max)
    }

    pub fn hermitian_part(&self) -> Self {
        self.map_blocks(CMatrix::hermitian_part)
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| b.as_slice().iter().all(|z| z.is_zero()))
    }

    /// Block-diagonal matrix on the carrier.
    pub fn to_dense(&self) -> CMatrix {
        let n = self.algebra.carrier_dim();
        let mut out = CMatrix::zeros(n, n);
        for (b, off) in self.blocks.iter().zip(self.algebra.carrier_offsets()) {
            out.set_block(off, off, b);
        }
        out
    }

    /// Keeps the diagonal blocks of a carrier matrix; off-block entries are dropped.
    pub fn compress_dense(algebra: &BlockAlgebra, dense: &CMatrix) -> Result<Self> {
        let n = algebra.carrier_dim();
        if dense.rows() != n || dense.cols() != n {
            return Err(Error::Shape(format!(
                "carrier matrix is {}x{}, expected {n}x{n}",
                dense.rows(),
                dense.cols()
            )));
        }
        let offsets = algebra.carrier_offsets();
        Ok(Self::from_map(algebra, |m, k| dense.sub_block(offsets[k], offsets[k], m, m)))
    }

    /// Concatenated row-major entries of all blocks (length `D`).
    pub fn flatten(&self) -> Vec<C64> {
        self.blocks.iter().flat_map(|b| b.as_slice().iter().copied()).collect()
    }

    /// Matrix unit `e_ij` inside block `k`.
    pub fn matrix_unit(algebra: &BlockAlgebra, k: usize, i: usize, j: usize) -> Self {
        let mut e = Self::zero(algebra);
        e.blocks[k][(i, j)] = C64::new(1.0, 0.0);
        e
    }

    /// All matrix units, block by block, each block row-major.
    pub fn matrix_units(algebra: &BlockAlgebra) -> Vec<Self> {
        let mut out = Vec::with_capacity(algebra.dimension());
        for (k, &n) in algebra.block_dims().iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    out.push(Self::matrix_unit(algebra, k, i, j));
                }
            }
        }
        out
    }

    /// Largest singular value (operator norm).
    pub fn operator_norm(&self) -> f64 {
        self.blocks
            .iter()
            .filter_map(|b| matrix::singular_values(b).first().copied())
            .fold(0.0, f64::max)
    }

    /// All singular values of all blocks, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.blocks.iter().flat_map(matrix::singular_values).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

/// Free-function form of [`Element::multiply`].
pub fn multiply(x: &Element, y: &Element) -> Result<Element> {
    x.multiply(y)
}

/// Free-function form of [`Element::canonical_trace`].
pub fn canonical_trace(x: &Element) -> C64 {
    x.canonical_trace()
}

/// Eigen-data of one block.
#[derive(Debug, Clone)]
pub struct BlockSpectrum {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unitary; column `i` belongs to `values[i]`.
    pub vectors: CMatrix,
    pub kernel: Vec<bool>,
}

/// Spectral decomposition of a Hermitian element with its kernel mask.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    algebra: BlockAlgebra,
    blocks: Vec<BlockSpectrum>,
    /// `max_j |λ_j|` over all blocks.
    scale: f64,
    eps_rel: f64,
}

impl HermitianSpectrum {
    pub fn algebra(&self) -> &BlockAlgebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[BlockSpectrum] {
        &self.blocks
    }

    /// Largest eigenvalue magnitude.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn eps_rel(&self) -> f64 {
        self.eps_rel
    }

    /// All eigenvalues of all blocks, in block order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect()
    }

    pub fn kernel_mask(&self) -> Vec<bool> {
        self.blocks.iter().flat_map(|b| b.kernel.iter().copied()).collect()
    }

    pub fn rank(&self) -> usize {
        self.blocks.iter().map(|b| b.kernel.iter().filter(|k| !**k).count()).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `true` iff no eigenvalue lies in the kernel.
    pub fn is_injective(&self) -> bool {
        self.blocks.iter().all(|b| b.kernel.iter().all(|k| !k))
    }

    /// Clips eigenvalues in `[-PSD_CLIP_TOL·λ_max, 0)` to zero (marking them
    /// kernel); anything more negative is an error.
    pub fn into_psd(mut self) -> Result<Self> {
        let floor = -PSD_CLIP_TOL * self.scale;
        for b in &mut self.blocks {
            for (v, k) in b.values.iter_mut().zip(b.kernel.iter_mut()) {
                if *v < 0.0 {
                    if *v < floor {
                        return Err(Error::NotPositive(*v));
                    }
                    *v = 0.0;
                    *k = true;
                }
            }
        }
        Ok(self)
    }

    /// `U f(Λ) U*` with kernel eigenvalues sent to `f`'s declared value at zero.
    pub fn apply(&self, f: &SpectralFn<'_>) -> Result<Element> {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let n = b.values.len();
            let fvals: Vec<C64> = b
                .values
                .iter()
                .zip(&b.kernel)
                .map(|(&v, &k)| if k { Ok(f.at_zero()) } else { f.eval(v) })
                .collect::<Result<_>>()?;
            let u = &b.vectors;
            let out = CMatrix::from_fn(n, n, |i, j| {
                (0..n).map(|l| u[(i, l)] * fvals[l] * u[(j, l)].conj()).sum()
            });
            blocks.push(out);
        }
        Ok(Element {
            algebra: self.algebra.clone(),
            blocks,
        })
    }

    /// Projection onto the span of the non-kernel eigenvectors.
    pub fn support(&self) -> Element {
        self.apply(&SpectralFn::Indicator).expect("indicator is defined everywhere")
    }

    /// Copy with an all-false kernel mask, so every eigenvalue reaches `f`.
    pub fn without_kernel(mut self) -> Self {
        for b in &mut self.blocks {
            b.kernel.iter_mut().for_each(|k| *k = false);
        }
        self
    }

    /// `U Λ U*` (using the possibly clipped eigenvalues).
    pub fn reconstruct(&self) -> Element {
        self.apply(&SpectralFn::Identity).expect("identity is defined everywhere")
    }
}

/// Scalar function for the functional calculus, with its declared value at 0.
#[derive(Clone, Copy)]
pub enum SpectralFn<'a> {
    /// `λ ↦ λ`.
    Identity,
    /// `λ ↦ 1` on the support, `0` on the kernel.
    Indicator,
    /// `λ ↦ λ^r` for `λ > 0`, `0` on the kernel (any real `r`).
    Power(f64),
    /// `f_t(λ) = λ^{it}` for `λ > 0`, `0` on the kernel.
    ImagPower(f64),
    /// Arbitrary function; `None` marks points outside its domain.
    Custom {
        f: &'a dyn Fn(f64) -> Option<C64>,
        at_zero: C64,
    },
}

impl core::fmt::Debug for SpectralFn<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::Identity => f.write_str("Identity"),
            Self::Indicator => f.write_str("Indicator"),
            Self::Power(r) => write!(f, "Power({r})"),
            Self::ImagPower(t) => write!(f, "ImagPower({t})"),
            Self::Custom { at_zero, .. } => write!(f, "Custom {{ at_zero: {at_zero} }}"),
        }
    }
}

impl SpectralFn<'_> {
    pub fn at_zero(&self) -> C64 {
        match self {
            Self::Custom { at_zero, .. } => *at_zero,
            _ => C64::zero(),
        }
    }

    /// Value at a non-kernel eigenvalue.
    pub fn eval(&self, v: f64) -> Result<C64> {
        match *self {
            Self::Identity => Ok(C64::new(v, 0.0)),
            Self::Indicator => Ok(C64::new(1.0, 0.0)),
            Self::Power(r) => {
                if v > 0.0 {
                    Ok(C64::new(v.powf(r), 0.0))
                } else if r.fract() == 0.0 && r > 0.0 {
                    Ok(C64::new(v.powi(r as i32), 0.0))
                } else {
                    Err(Error::Undefined(v))
                }
            }
            Self::ImagPower(t) => {
                if v > 0.0 {
                    let phase = t * v.ln();
                    Ok(C64::new(phase.cos(), phase.sin()))
                } else {
                    Err(Error::Undefined(v))
                }
            }
            Self::Custom { f, .. } => f(v).ok_or(Error::Undefined(v)),
        }
    }
}

/// Eigendecomposition of a Hermitian element.
///
/// With `hermitize = false` the input must be within `HERMITIAN_TOL` of
/// Hermitian; it is symmetrized either way before the solve.
pub fn hermitian_eig(h: &Element, hermitize: bool, cfg: &SpectralConfig) -> Result<HermitianSpectrum> {
    if !hermitize {
        let defect = h.hermitian_defect();
        if defect > HERMITIAN_TOL * h.frobenius_norm().max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
    }
    let mut blocks: Vec<BlockSpectrum> = h
        .blocks
        .iter()
        .map(|b| {
            let (values, vectors) = matrix::eigh(b);
            BlockSpectrum {
                kernel: alloc::vec![false; values.len()],
                values,
                vectors,
            }
        })
        .collect();
    let scale = blocks
        .iter()
        .flat_map(|b| b.values.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = cfg.eps_rel * scale;
    for b in &mut blocks {
        for (v, k) in b.values.iter().zip(b.kernel.iter_mut()) {
            *k = v.abs() <= cut;
        }
    }
    Ok(HermitianSpectrum {
        algebra: h.algebra.clone(),
        blocks,
        scale,
        eps_rel: cfg.eps_rel,
    })
}

/// Spectrum of a PSD-expected element: symmetrized (within tolerance) and clipped.
pub fn psd_spectrum(h: &Element, cfg: &SpectralConfig) -> Result<HermitianSpectrum> {
    hermitian_eig(h, false, cfg)?.into_psd()
}

/// `f(h)` with the kernel convention.
///
/// Powers and imaginary powers read the PSD-clipped spectrum; custom
/// functions see the raw Hermitian spectrum.
pub fn func_calc(h: &Element, f: &SpectralFn<'_>, cfg: &SpectralConfig) -> Result<Element> {
    let spec = hermitian_eig(h, false, cfg)?;
    let spec = match f {
        SpectralFn::Power(_) | SpectralFn::ImagPower(_) => clip_soft(spec),
        _ => spec,
    };
    spec.apply(f)
}

/// Clips only the tolerable negative eigenvalues; larger negative ones stay
/// and make powers fail with [`Error::Undefined`].
fn clip_soft(mut spec: HermitianSpectrum) -> HermitianSpectrum {
    let floor = -PSD_CLIP_TOL * spec.scale;
    for b in &mut spec.blocks {
        for (v, k) in b.values.iter_mut().zip(b.kernel.iter_mut()) {
            if *v < 0.0 && *v >= floor {
                *v = 0.0;
                *k = true;
            }
        }
    }
    spec
}

/// Range projection `s(h)` of a PSD element.
pub fn support_projection(h: &Element, cfg: &SpectralConfig) -> Result<Element> {
    Ok(psd_spectrum(h, cfg)?.support())
}

/// Polar decomposition `x = v·|x|`.
#[derive(Debug, Clone)]
pub struct Polar {
    /// Partial isometry with `v*v = s(|x|)`.
    pub v: Element,
    /// `(x*x)^{1/2}`.
    pub abs: Element,
}

/// Polar decomposition from a blockwise SVD `x = W Σ V*`: `|x| = V Σ V*` and
/// `v = Σ_{σ_j not kernel} w_j v_j*`.
pub fn polar_decompose(x: &Element, cfg: &SpectralConfig) -> Polar {
    let svds: Vec<matrix::Svd> = x.blocks.iter().map(matrix::svd).collect();
    let smax = svds
        .iter()
        .flat_map(|s| s.s.first().copied())
        .fold(0.0, f64::max);
    let cut = cfg.eps_rel * smax;
    let mut v_blocks = Vec::with_capacity(svds.len());
    let mut abs_blocks = Vec::with_capacity(svds.len());
    for (svd, &n) in svds.iter().zip(x.algebra.block_dims()) {
        let mut v = CMatrix::zeros(n, n);
        let mut a = CMatrix::zeros(n, n);
        for (l, &s) in svd.s.iter().enumerate() {
            let keep = s > cut;
            for i in 0..n {
                for j in 0..n {
                    let vv = svd.v[(i, l)] * svd.v[(j, l)].conj();
                    a[(i, j)] += vv * s;
                    if keep {
                        v[(i, j)] += svd.u[(i, l)] * svd.v[(j, l)].conj();
                    }
                }
            }
        }
        v_blocks.push(v);
        abs_blocks.push(a.hermitian_part());
    }
    Polar {
        v: Element {
            algebra: x.algebra.clone(),
            blocks: v_blocks,
        },
        abs: Element {
            algebra: x.algebra.clone(),
            blocks: abs_blocks,
        },
    }
}
