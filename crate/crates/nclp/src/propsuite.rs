//! Seeded random instances, a scalar Rényi oracle and the named invariant suites.
//!
//! Trial `i` of a run with seed `s` draws from ChaCha20 seeded with `s` on
//! stream `i`, so results do not depend on scheduling. Complex Gaussians use
//! the Box–Muller transform with `E|z|² = 1`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use nclp_core::algebra::{BlockAlgebra, Element, SpectralFn};
use nclp_core::divergence::{self, DivergenceParams, DivergenceValue, Reason, UnitalChannel};
use nclp_core::functionals::{self, PositiveFunctional};
use nclp_core::lp::{self, KosakiSpec, LpExponent};
use nclp_core::matrix::CMatrix;
use nclp_core::random::{self, RankProfile};
use nclp_core::tensorprod::{self, PowerKind, TensorAlgebra};
use nclp_core::SpectralConfig;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::format::number;

pub const PRNG_ID: &str = "chacha20 (rand_chacha 0.3), seed_from_u64(seed), stream = trial index";
pub const GAUSSIAN_ID: &str = "box-muller, complex, E|z|^2 = 1";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SuiteError {
    #[error("unknown suite {0:?}; expected one of {names}", names = SuiteName::names())]
    UnknownSuite(String),
    #[error("suite {suite} has no tolerance {key:?}; known: {known}")]
    UnknownTolerance { suite: SuiteName, key: String, known: String },
    #[error("tolerance {key} must be a positive number, got {value}")]
    InvalidTolerance { key: String, value: String },
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("bad dims profile {0:?}: expected e.g. 3, 2+1, 2x2 or 2+3x2")]
    BadDims(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SuiteName {
    Lemma1,
    Lemma3,
    Lemma5,
    Theorem6,
    Corollary7,
    Lemma8,
    Lemma9,
    Prop11,
    AppendixA,
    Dpi,
}

impl SuiteName {
    pub const ALL: [SuiteName; 10] = [
        Self::Lemma1,
        Self::Lemma3,
        Self::Lemma5,
        Self::Theorem6,
        Self::Corollary7,
        Self::Lemma8,
        Self::Lemma9,
        Self::Prop11,
        Self::AppendixA,
        Self::Dpi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lemma1 => "lemma1",
            Self::Lemma3 => "lemma3",
            Self::Lemma5 => "lemma5",
            Self::Theorem6 => "theorem6",
            Self::Corollary7 => "corollary7",
            Self::Lemma8 => "lemma8",
            Self::Lemma9 => "lemma9",
            Self::Prop11 => "prop11",
            Self::AppendixA => "appendixA",
            Self::Dpi => "dpi",
        }
    }

    fn names() -> String {
        Self::ALL.map(Self::as_str).join(", ")
    }

    /// Suites that draw from a pair of algebras `A ⊗ B`.
    pub fn is_bipartite(self) -> bool {
        matches!(self, Self::Lemma5 | Self::Theorem6 | Self::Corollary7 | Self::Prop11 | Self::AppendixA)
    }

    pub fn default_tolerances(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            Self::Lemma1 => &[("cut", 1e-9), ("group_law", 1e-10), ("chain_rule", 1e-10)],
            Self::Lemma3 => &[("interpolation", 1e-10), ("bijectivity_condition", 1e10)],
            Self::Lemma5 => &[("polar", 1e-9), ("power", 1e-9), ("density", 1e-9), ("imaginary_power", 1e-9)],
            Self::Theorem6 => &[("relative_error", 1e-10)],
            Self::Corollary7 => &[("relative_error", 1e-9)],
            Self::Lemma8 => &[("solve_agreement", 1e-8)],
            Self::Lemma9 => &[("relative_difference", 1e-10)],
            Self::Prop11 => &[("q_relative", 1e-9), ("d_absolute", 1e-8), ("classical", 1e-12)],
            Self::AppendixA => &[("spectrum", 1e-9), ("multiplicativity", 1e-9)],
            Self::Dpi => &[("dpi_excess", 1e-9)],
        };
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    pub fn default_dims(self) -> Vec<DimProfile> {
        let s: &[&str] = match self {
            Self::Lemma1 => &["2", "3", "2+1", "2+2"],
            Self::Lemma3 => &["2", "3", "2+1"],
            Self::Lemma5 | Self::Theorem6 | Self::AppendixA => &["2x2", "3x2", "3x3", "2+3x2"],
            Self::Corollary7 => &["2x2", "3x2", "2+1x2"],
            Self::Lemma8 => &["2", "3", "2+2", "3+1"],
            Self::Lemma9 => &["2", "3"],
            Self::Prop11 => &["2x2", "2x3", "3x2", "3x3"],
            Self::Dpi => &["2", "3", "2+1"],
        };
        s.iter().map(|d| d.parse().expect("built-in profile")).collect()
    }

    pub fn default_param_grid(self) -> Vec<DivergenceParams> {
        let sw = |a: &[f64]| a.iter().map(|&a| DivergenceParams::sandwiched(a).expect("grid")).collect();
        match self {
            Self::Lemma9 => sw(&LEMMA9_ALPHAS),
            Self::Dpi => sw(&DPI_ALPHAS),
            Self::Prop11 => PROP11_ALPHAS
                .iter()
                .flat_map(|&a| prop11_zs(a).map(move |z| DivergenceParams::alpha_z(a, z).expect("grid")))
                .collect(),
            Self::Lemma8 => LEMMA8_GRID
                .iter()
                .map(|&(a, z)| DivergenceParams::alpha_z(a, z).expect("grid"))
                .collect(),
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteName {
    type Err = SuiteError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| SuiteError::UnknownSuite(s.to_string()))
    }
}

pub const THEOREM6_P: [f64; 6] = [0.5, 1.0, 1.7, 2.0, 3.0, f64::INFINITY];
pub const COROLLARY7_P: [f64; 4] = [1.0, 1.5, 2.0, 4.0];
pub const COROLLARY7_ETA: [f64; 4] = [0.0, 0.25, 0.5, 1.0];
pub const LEMMA3_P: [f64; 6] = [1.0, 1.5, 2.0, 3.0, 4.0, f64::INFINITY];
pub const LEMMA9_ALPHAS: [f64; 5] = [0.5, 0.7, 1.5, 2.0, 3.0];
pub const PROP11_ALPHAS: [f64; 6] = [0.3, 0.5, 0.7, 1.5, 2.0, 3.0];
pub const DPI_ALPHAS: [f64; 4] = [0.5, 0.7, 1.5, 2.0];
pub const LEMMA8_GRID: [(f64, f64); 8] = [
    (1.5, 1.0),
    (1.5, 1.5),
    (2.0, 1.0),
    (2.0, 2.0),
    (2.0, 4.0),
    (3.0, 1.5),
    (3.0, 3.0),
    (3.0, 6.0),
];
pub const APPENDIX_A_POWERS: [f64; 3] = [0.5, 1.0, 2.0];
pub const APPENDIX_A_TIMES: [f64; 2] = [0.3, 1.0];

pub fn prop11_zs(alpha: f64) -> [f64; 4] {
    [0.5, 1.0, alpha, 2.0 * alpha]
}

/// Block dimensions of one algebra, or of two factors written `AxB`; blocks
/// are joined by `+`, e.g. `2+3x2` is `(M₂ ⊕ M₃) ⊗ M₂`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimProfile {
    pub left: Vec<usize>,
    pub right: Option<Vec<usize>>,
}

impl DimProfile {
    fn algebra_of(dims: &[usize]) -> BlockAlgebra {
        BlockAlgebra::new(dims).expect("validated when parsed")
    }

    /// The algebra for single-algebra suites: the product when two factors are given.
    pub fn algebra(&self) -> BlockAlgebra {
        match &self.right {
            None => Self::algebra_of(&self.left),
            Some(_) => self.tensor().product().clone(),
        }
    }

    /// The factor pair for bipartite suites; a single algebra is paired with itself.
    pub fn tensor(&self) -> TensorAlgebra {
        let left = Self::algebra_of(&self.left);
        let right = self.right.as_deref().map_or_else(|| left.clone(), Self::algebra_of);
        TensorAlgebra::new(&left, &right)
    }
}

impl FromStr for DimProfile {
    type Err = SuiteError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SuiteError::BadDims(s.to_string());
        let blocks = |part: &str| -> Result<Vec<usize>, SuiteError> {
            let dims = part
                .split('+')
                .map(|d| d.trim().parse::<usize>().ok().filter(|&n| n >= 1).ok_or_else(bad))
                .collect::<Result<Vec<_>, _>>()?;
            if dims.iter().sum::<usize>() > 16 {
                return Err(bad());
            }
            Ok(dims)
        };
        let mut parts = s.split('x');
        let left = blocks(parts.next().ok_or_else(bad)?)?;
        let right = parts.next().map(blocks).transpose()?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(Self { left, right })
    }
}

impl fmt::Display for DimProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |d: &[usize]| d.iter().map(usize::to_string).collect::<Vec<_>>().join("+");
        f.write_str(&join(&self.left))?;
        if let Some(r) = &self.right {
            write!(f, "x{}", join(r))?;
        }
        Ok(())
    }
}

/// Parses a comma-separated list of profiles.
pub fn parse_dims(list: &str) -> Result<Vec<DimProfile>, SuiteError> {
    let dims = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse())
        .collect::<Result<Vec<_>, _>>()?;
    if dims.is_empty() {
        return Err(SuiteError::BadDims(list.to_string()));
    }
    Ok(dims)
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub name: SuiteName,
    pub trials: usize,
    pub seed: u64,
    /// Trial `i` uses profile `i mod dims.len()`.
    pub dims: Vec<DimProfile>,
    pub tolerances: BTreeMap<String, f64>,
    pub param_grid: Vec<DivergenceParams>,
    pub spectral: SpectralConfig,
}

impl SuiteConfig {
    pub fn new(name: SuiteName, trials: usize, seed: u64) -> Self {
        Self {
            name,
            trials,
            seed,
            dims: name.default_dims(),
            tolerances: name.default_tolerances(),
            param_grid: name.default_param_grid(),
            spectral: SpectralConfig::default(),
        }
    }

    pub fn with_dims(mut self, dims: Vec<DimProfile>) -> Self {
        self.dims = dims;
        self
    }

    pub fn with_spectral(mut self, spectral: SpectralConfig) -> Self {
        self.spectral = spectral;
        self
    }

    pub fn with_tolerance(mut self, key: &str, value: f64) -> Result<Self, SuiteError> {
        if !self.tolerances.contains_key(key) {
            return Err(SuiteError::UnknownTolerance {
                suite: self.name,
                key: key.to_string(),
                known: self.tolerances.keys().cloned().collect::<Vec<_>>().join(", "),
            });
        }
        if !(value > 0.0 && value.is_finite()) {
            return Err(SuiteError::InvalidTolerance {
                key: key.to_string(),
                value: value.to_string(),
            });
        }
        self.tolerances.insert(key.to_string(), value);
        Ok(self)
    }

    /// Applies a `key=value` override.
    pub fn with_override(self, spec: &str) -> Result<Self, SuiteError> {
        let (k, v) = spec.split_once('=').ok_or_else(|| SuiteError::InvalidTolerance {
            key: spec.to_string(),
            value: String::new(),
        })?;
        let value = v.trim().parse::<f64>().map_err(|_| SuiteError::InvalidTolerance {
            key: k.to_string(),
            value: v.to_string(),
        })?;
        self.with_tolerance(k.trim(), value)
    }

    pub fn validate(&self) -> Result<(), SuiteError> {
        if self.trials == 0 {
            return Err(SuiteError::NoTrials);
        }
        if self.dims.is_empty() {
            return Err(SuiteError::BadDims(String::new()));
        }
        Ok(())
    }

    pub fn to_value(&self) -> Value {
        let tolerances: serde_json::Map<String, Value> =
            self.tolerances.iter().map(|(k, &v)| (k.clone(), number(v))).collect();
        let grid: Vec<Value> = self
            .param_grid
            .iter()
            .map(|p| {
                json!({
                    "kind": if p.is_sandwiched() { "sandwiched" } else { "alpha-z" },
                    "alpha": number(p.alpha()),
                    "z": number(p.z()),
                })
            })
            .collect();
        json!({
            "suite": self.name.as_str(),
            "trials": self.trials,
            "seed": self.seed,
            "dims": self.dims.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "tolerances": tolerances,
            "param_grid": grid,
        })
    }

    fn tolerance(&self, key: &str) -> f64 {
        self.tolerances[key]
    }
}

/// One residual, reduced to its worst value over the trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// Parameter point at which the worst value occurred.
    pub at: String,
}

impl Residual {
    pub fn passes(&self) -> bool {
        self.value <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSummary {
    pub kind: String,
    pub dims: String,
    pub ranks: Vec<usize>,
    pub masses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub trial_index: usize,
    pub generator: String,
    pub instance: InstanceSummary,
    pub residuals: Vec<Residual>,
    /// Reason codes and additivity branches met during the trial.
    pub tags: BTreeSet<String>,
    pub error: Option<String>,
    pub pass: bool,
}

impl TrialReport {
    pub fn residual(&self, name: &str) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.name == name)
    }

    pub fn to_value(&self) -> Value {
        let residuals: serde_json::Map<String, Value> = self
            .residuals
            .iter()
            .map(|r| {
                (
                    r.name.clone(),
                    json!({"value": number(r.value), "tolerance": number(r.tolerance), "at": r.at}),
                )
            })
            .collect();
        json!({
            "trial_index": self.trial_index,
            "generator": self.generator,
            "instance": {
                "kind": self.instance.kind,
                "dims": self.instance.dims,
                "ranks": self.instance.ranks,
                "masses": self.instance.masses.iter().map(|&m| number(m)).collect::<Vec<_>>(),
            },
            "residuals": residuals,
            "tags": self.tags,
            "error": self.error,
            "pass": self.pass,
        })
    }
}

/// Generator for trial `index`.
pub fn trial_rng(seed: u64, index: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn fingerprint(seed: u64, index: usize, rng: &ChaCha20Rng) -> String {
    let word = rng.clone().next_u64();
    format!("chacha20:seed={seed}:stream={index}:word0={word:016x}")
}

/// Draws `G G*` (full), an `r`-column factor (deficient) or zero, normalized to mass 1.
pub fn gen_positive_functional<R: RngCore + ?Sized>(
    rng: &mut R,
    algebra: &BlockAlgebra,
    profile: RankProfile,
) -> PositiveFunctional {
    random::positive_functional(rng, algebra, profile)
}

/// `Σ_i p_i^α q_i^{1−α}` with the divergence module's support rules:
/// terms with `p_i = 0` vanish, `α > 1` with `p_i > 0 = q_i` is `+∞`.
pub fn classical_renyi_oracle(p: &[f64], q: &[f64], alpha: f64) -> DivergenceValue {
    assert_eq!(p.len(), q.len(), "probability vectors differ in length");
    if alpha > 1.0 && p.iter().zip(q).any(|(&a, &b)| a > 0.0 && b == 0.0) {
        return DivergenceValue::infinite(Reason::SupportViolation);
    }
    let s = p
        .iter()
        .zip(q)
        .filter(|(&a, &b)| a > 0.0 && b > 0.0)
        .map(|(&a, &b)| a.powf(alpha) * b.powf(1.0 - alpha))
        .sum();
    DivergenceValue::finite(s)
}

/// `D̃` from [`classical_renyi_oracle`].
pub fn classical_divergence(p: &[f64], q: &[f64], alpha: f64) -> DivergenceValue {
    let mass = p.iter().sum();
    divergence::d_from_q(classical_renyi_oracle(p, q, alpha), alpha, mass, q.iter().all(|&b| b == 0.0))
}

/// How a `(ψ, φ)` pair is planted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    /// Both faithful.
    Faithful,
    /// `φ` not faithful, `s(ψ) ≤ s(φ)`.
    Contained,
    /// `φ` not faithful, `ψ` faithful.
    Outside,
    /// `s(ψ) s(φ) = 0`, `s(ψ) + s(φ) = 1`.
    Orthogonal,
    /// `φ = 0`.
    ZeroReference,
}

impl PairKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Faithful => "faithful",
            Self::Contained => "contained",
            Self::Outside => "outside",
            Self::Orthogonal => "orthogonal",
            Self::ZeroReference => "zero_reference",
        }
    }
}

fn uniform_index<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    ((random::uniform(rng) * n as f64) as usize).min(n - 1)
}

/// Per-block ranks with at least one block rank-deficient and at least one nonzero.
fn deficient_ranks<R: RngCore + ?Sized>(rng: &mut R, algebra: &BlockAlgebra) -> Vec<usize> {
    let dims = algebra.block_dims();
    loop {
        let ranks: Vec<usize> = dims
            .iter()
            .map(|&n| if n >= 2 { 1 + uniform_index(rng, n - 1) } else { uniform_index(rng, 2) })
            .collect();
        let deficient = ranks.iter().zip(dims).any(|(r, n)| r < n);
        if deficient && ranks.iter().any(|&r| r > 0) {
            return ranks;
        }
    }
}

fn normalized(h: Element) -> PositiveFunctional {
    let m = h.canonical_trace().re;
    PositiveFunctional::from_density_unchecked(h.scale_real(1.0 / m))
}

/// `φ = G G*` with `G` of the given per-block column counts and `ψ = G K K* G*`,
/// so that `s(ψ) ≤ s(φ)` holds by construction.
fn contained_pair<R: RngCore + ?Sized>(
    rng: &mut R,
    algebra: &BlockAlgebra,
    ranks: &[usize],
) -> (PositiveFunctional, PositiveFunctional) {
    let mut psi = Vec::new();
    let mut phi = Vec::new();
    for (&n, &r) in algebra.block_dims().iter().zip(ranks) {
        if r == 0 {
            psi.push(CMatrix::zeros(n, n));
            phi.push(CMatrix::zeros(n, n));
            continue;
        }
        let g = random::gaussian_matrix(rng, n, r);
        let k = random::gaussian_matrix(rng, r, r);
        phi.push(g.matmul(&g.adjoint()).hermitian_part());
        let gk = g.matmul(&k);
        psi.push(gk.matmul(&gk.adjoint()).hermitian_part());
    }
    let build = |b| normalized(Element::from_blocks(algebra, b).expect("conforming blocks"));
    (build(psi), build(phi))
}

/// Pair with complementary supports `U diag(d) U*`, `U diag(d′) U*`.
fn orthogonal_pair<R: RngCore + ?Sized>(rng: &mut R, algebra: &BlockAlgebra) -> (PositiveFunctional, PositiveFunctional) {
    let n = algebra.carrier_dim();
    let mut mask: Vec<bool> = (0..n).map(|_| random::uniform(rng) < 0.5).collect();
    mask[0] = true;
    mask[n - 1] = false;
    let weights: Vec<f64> = (0..n).map(|_| random::uniform_in(rng, 0.1, 1.0)).collect();
    let d: Vec<f64> = weights.iter().zip(&mask).map(|(&w, &m)| if m { w } else { 0.0 }).collect();
    let d_prime: Vec<f64> = weights.iter().zip(&mask).map(|(&w, &m)| if m { 0.0 } else { w }).collect();
    let u = random::unitary_element(rng, algebra);
    let conj = |d: &[f64]| {
        let diag = Element::from_real_diag(algebra, d).expect("carrier length");
        normalized(u.multiply(&diag).and_then(|x| x.multiply(&u.adjoint())).expect("same algebra").hermitian_part())
    };
    (conj(&d), conj(&d_prime))
}

/// Needs at least two carrier dimensions for the non-faithful kinds.
pub fn gen_pair<R: RngCore + ?Sized>(
    rng: &mut R,
    algebra: &BlockAlgebra,
    kind: PairKind,
) -> (PositiveFunctional, PositiveFunctional) {
    match kind {
        PairKind::Faithful => (
            gen_positive_functional(rng, algebra, RankProfile::Full),
            gen_positive_functional(rng, algebra, RankProfile::Full),
        ),
        PairKind::Contained => {
            let ranks = deficient_ranks(rng, algebra);
            contained_pair(rng, algebra, &ranks)
        }
        PairKind::Outside => {
            let ranks = deficient_ranks(rng, algebra);
            let (_, phi) = contained_pair(rng, algebra, &ranks);
            (gen_positive_functional(rng, algebra, RankProfile::Full), phi)
        }
        PairKind::Orthogonal => orthogonal_pair(rng, algebra),
        PairKind::ZeroReference => (
            gen_positive_functional(rng, algebra, RankProfile::Full),
            PositiveFunctional::zero(algebra),
        ),
    }
}

fn rank(psi: &PositiveFunctional, cfg: &SpectralConfig) -> usize {
    psi.spectrum(cfg).map(|s| s.rank()).unwrap_or(0)
}

type TrialResult = Result<(), nclp_core::Error>;

struct Trial<'a> {
    config: &'a SuiteConfig,
    rng: ChaCha20Rng,
    kind: String,
    ranks: Vec<usize>,
    masses: Vec<f64>,
    residuals: BTreeMap<String, Residual>,
    tags: BTreeSet<String>,
}

impl<'a> Trial<'a> {
    fn cfg(&self) -> SpectralConfig {
        self.config.spectral
    }

    /// Keeps the worst value per residual name; NaN counts as `+∞`.
    fn record(&mut self, name: &str, value: f64, at: impl FnOnce() -> String) {
        let value = if value.is_nan() { f64::INFINITY } else { value };
        let tolerance = self.config.tolerance(name);
        match self.residuals.get_mut(name) {
            Some(r) if r.value >= value => {}
            Some(r) => {
                r.value = value;
                r.at = at();
            }
            None => {
                self.residuals.insert(
                    name.to_string(),
                    Residual {
                        name: name.to_string(),
                        value,
                        tolerance,
                        at: at(),
                    },
                );
            }
        }
    }

    fn note(&mut self, psis: &[&PositiveFunctional]) {
        let cfg = self.cfg();
        for psi in psis {
            self.ranks.push(rank(psi, &cfg));
            self.masses.push(psi.mass());
        }
    }

    fn tag_reason(&mut self, v: &DivergenceValue) {
        self.tags.insert(format!("reason:{}", v.reason()));
    }
}

fn params_label(p: &DivergenceParams) -> String {
    if p.is_sandwiched() {
        format!("alpha={}", p.alpha())
    } else {
        format!("alpha={},z={}", p.alpha(), p.z())
    }
}

/// Runs every trial of the configured suite, in parallel, in index order.
pub fn run_suite(config: &SuiteConfig) -> Result<Vec<TrialReport>, SuiteError> {
    config.validate()?;
    Ok((0..config.trials).into_par_iter().map(|i| run_trial(config, i)).collect())
}

pub fn run_trial(config: &SuiteConfig, index: usize) -> TrialReport {
    let rng = trial_rng(config.seed, index);
    let generator = fingerprint(config.seed, index, &rng);
    let profile = &config.dims[index % config.dims.len()];
    let mut trial = Trial {
        config,
        rng,
        kind: String::from("random"),
        ranks: Vec::new(),
        masses: Vec::new(),
        residuals: BTreeMap::new(),
        tags: BTreeSet::new(),
    };
    let outcome = match config.name {
        SuiteName::Lemma1 => lemma1(&mut trial, &profile.algebra()),
        SuiteName::Lemma3 => lemma3(&mut trial, &profile.algebra(), index),
        SuiteName::Lemma5 => lemma5(&mut trial, &profile.tensor(), index),
        SuiteName::Theorem6 => theorem6(&mut trial, &profile.tensor()),
        SuiteName::Corollary7 => corollary7(&mut trial, &profile.tensor()),
        SuiteName::Lemma8 => lemma8(&mut trial, &profile.algebra()),
        SuiteName::Lemma9 => lemma9(&mut trial, &profile.algebra(), index),
        SuiteName::Prop11 => prop11(&mut trial, &profile.tensor(), index),
        SuiteName::AppendixA => appendix_a(&mut trial, &profile.tensor(), index),
        SuiteName::Dpi => dpi(&mut trial, &profile.algebra(), index),
    };
    let error = outcome.err().map(|e| e.to_string());
    let residuals: Vec<Residual> = trial.residuals.into_values().collect();
    let pass = error.is_none() && !residuals.is_empty() && residuals.iter().all(Residual::passes);
    TrialReport {
        trial_index: index,
        generator,
        instance: InstanceSummary {
            kind: trial.kind,
            dims: profile.to_string(),
            ranks: trial.ranks,
            masses: trial.masses,
        },
        residuals,
        tags: trial.tags,
        error,
        pass,
    }
}

fn modular(phi: &PositiveFunctional, s: f64, x: &Element, cfg: &SpectralConfig) -> nclp_core::Result<Element> {
    let spec = phi.spectrum(cfg)?;
    let u = spec.apply(&SpectralFn::ImagPower(s))?;
    let v = spec.apply(&SpectralFn::ImagPower(-s))?;
    u.multiply(x)?.multiply(&v)
}

fn lemma1(tr: &mut Trial, alg: &BlockAlgebra) -> TrialResult {
    let cfg = tr.cfg();
    tr.kind = "complementary_supports".into();
    let (psi, psi_prime) = orthogonal_pair(&mut tr.rng, alg);
    let phi = gen_positive_functional(&mut tr.rng, alg, RankProfile::Full);
    tr.note(&[&psi, &psi_prime, &phi]);
    let t = random::uniform_in(&mut tr.rng, -3.0, 3.0);
    let s = random::uniform_in(&mut tr.rng, -3.0, 3.0);

    let cut = functionals::lemma1_cut(&psi, &psi_prime, &phi, t, &cfg)?;
    tr.record("cut", cut.residual(), || format!("t={t}"));

    let u = |x: f64| functionals::connes_cocycle(&psi, &phi, x, &cfg);
    let lhs = u(s + t)?;
    let rhs = u(s)?.multiply(&modular(&phi, s, &u(t)?, &cfg)?)?;
    tr.record("group_law", lhs.distance(&rhs), || format!("s={s},t={t}"));

    let chi = psi.sum(&psi_prime)?;
    let chained = functionals::connes_cocycle(&psi, &chi, t, &cfg)?.multiply(&functionals::connes_cocycle(&chi, &phi, t, &cfg)?)?;
    tr.record("chain_rule", u(t)?.distance(&chained), || format!("t={t}"));
    Ok(())
}

fn lemma3(tr: &mut Trial, alg: &BlockAlgebra, index: usize) -> TrialResult {
    let cfg = tr.cfg();
    let phi = gen_positive_functional(&mut tr.rng, alg, RankProfile::Full);
    tr.note(&[&phi]);
    let p = LpExponent::new(LEMMA3_P[index % LEMMA3_P.len()])?;
    let eta = random::uniform(&mut tr.rng);
    let a = random::gaussian_element(&mut tr.rng, alg);
    let spec = KosakiSpec::new(&phi, p, eta, &cfg)?;
    let bound = lp::interpolation_bound_check(&a, &spec)?;
    tr.record("interpolation", bound.lhs - bound.rhs, || format!("p={},eta={eta}", p.value()));
    let b = lp::lemma3_bijectivity(&phi, p, &cfg)?;
    let condition = if b.is_bijective() { 1.0 / b.ratio() } else { f64::INFINITY };
    tr.record("bijectivity_condition", condition, || format!("p={}", p.value()));
    Ok(())
}

fn lemma5(tr: &mut Trial, t: &TensorAlgebra, index: usize) -> TrialResult {
    let cfg = tr.cfg();
    let x = random::gaussian_element(&mut tr.rng, t.left());
    let y = random::gaussian_element(&mut tr.rng, t.right());
    tr.record("polar", tensorprod::lemma5_polar(t, &x, &y, &cfg)?.max_residual(), String::new);
    let p = random::uniform_in(&mut tr.rng, 0.2, 3.0);
    tr.record("power", tensorprod::lemma5_power(t, &x, &y, PowerKind::Real(p), &cfg)?, || format!("p={p}"));

    let profile = if index.is_multiple_of(2) { RankProfile::Full } else { RankProfile::Deficient(1) };
    tr.kind = if index.is_multiple_of(2) { "full_densities" } else { "rank_one_densities" }.into();
    let psi1 = gen_positive_functional(&mut tr.rng, t.left(), profile);
    let psi2 = gen_positive_functional(&mut tr.rng, t.right(), profile);
    tr.note(&[&psi1, &psi2]);
    let joint = tensorprod::kron_functional(t, &psi1, &psi2)?;
    let dense = tensorprod::kron_element(t, psi1.density(), psi2.density())?;
    let a = random::gaussian_element(&mut tr.rng, t.left());
    let b = random::gaussian_element(&mut tr.rng, t.right());
    let eval = joint.evaluate(&tensorprod::kron_element(t, &a, &b)?)?;
    let split = psi1.evaluate(&a)? * psi2.evaluate(&b)?;
    tr.record("density", joint.density().distance(&dense).max((eval - split).norm()), String::new);

    let s = random::uniform_in(&mut tr.rng, -3.0, 3.0);
    let r = tensorprod::lemma5_power(t, psi1.density(), psi2.density(), PowerKind::Imaginary(s), &cfg)?;
    tr.record("imaginary_power", r, || format!("t={s}"));
    Ok(())
}

fn theorem6(tr: &mut Trial, t: &TensorAlgebra) -> TrialResult {
    let x = random::gaussian_element(&mut tr.rng, t.left());
    let y = random::gaussian_element(&mut tr.rng, t.right());
    for p in THEOREM6_P {
        let pair = tensorprod::theorem6_norm(t, &x, &y, LpExponent::new(p)?)?;
        tr.record("relative_error", pair.relative_error(), || format!("p={p}"));
    }
    Ok(())
}

fn corollary7(tr: &mut Trial, t: &TensorAlgebra) -> TrialResult {
    let cfg = tr.cfg();
    let phi1 = gen_positive_functional(&mut tr.rng, t.left(), RankProfile::Full);
    let phi2 = gen_positive_functional(&mut tr.rng, t.right(), RankProfile::Full);
    tr.note(&[&phi1, &phi2]);
    let x1 = random::gaussian_element(&mut tr.rng, t.left());
    let x2 = random::gaussian_element(&mut tr.rng, t.right());
    for p in COROLLARY7_P {
        for eta in COROLLARY7_ETA {
            let p = LpExponent::new(p)?;
            let s1 = KosakiSpec::new(&phi1, p, eta, &cfg)?;
            let s2 = KosakiSpec::new(&phi2, p, eta, &cfg)?;
            let pair = tensorprod::corollary7_norm(t, &x1, &x2, &s1, &s2, &cfg)?;
            let rel = (pair.lhs - pair.rhs).abs() / pair.rhs.abs().max(f64::MIN_POSITIVE);
            tr.record("relative_error", rel, || format!("p={},eta={eta}", p.value()));
        }
    }
    Ok(())
}

fn lemma8(tr: &mut Trial, alg: &BlockAlgebra) -> TrialResult {
    let cfg = tr.cfg();
    tr.kind = PairKind::Contained.as_str().into();
    let (psi, phi) = gen_pair(&mut tr.rng, alg, PairKind::Contained);
    tr.note(&[&psi, &phi]);
    for params in tr.config.param_grid.clone() {
        let a = divergence::spade_solution(&psi, &phi, &params, &cfg)?;
        let b = divergence::spade_solution_least_squares(&psi, &phi, &params, &cfg)?;
        let r = match (a, b) {
            (Some(a), Some(b)) => a.distance(&b) / (1.0 + a.frobenius_norm()),
            _ => f64::INFINITY,
        };
        tr.record("solve_agreement", r, || params_label(&params));
    }
    Ok(())
}

const LEMMA9_KINDS: [PairKind; 5] = [
    PairKind::Faithful,
    PairKind::Contained,
    PairKind::Outside,
    PairKind::Orthogonal,
    PairKind::ZeroReference,
];

fn lemma9(tr: &mut Trial, alg: &BlockAlgebra, index: usize) -> TrialResult {
    let cfg = tr.cfg();
    let kind = LEMMA9_KINDS[index % LEMMA9_KINDS.len()];
    tr.kind = kind.as_str().into();
    let (psi, phi) = gen_pair(&mut tr.rng, alg, kind);
    tr.note(&[&psi, &phi]);
    for params in tr.config.param_grid.clone() {
        let alpha = params.alpha();
        let r = divergence::lemma9_check(&psi, &phi, alpha, &cfg)?;
        tr.record("relative_difference", r.relative_difference(), || format!("alpha={alpha}"));
        let d = divergence::d_from_q(r.alpha_z, alpha, psi.mass(), phi.is_zero());
        tr.tag_reason(&d);
    }
    Ok(())
}

const PROP11_KINDS: [(PairKind, PairKind); 6] = [
    (PairKind::Faithful, PairKind::Faithful),
    (PairKind::Faithful, PairKind::Faithful),
    (PairKind::Contained, PairKind::Faithful),
    (PairKind::Outside, PairKind::Faithful),
    (PairKind::Orthogonal, PairKind::Contained),
    (PairKind::Faithful, PairKind::Outside),
];

/// Diagonal weights with a zero pattern chosen by `index`.
fn classical_pair<R: RngCore + ?Sized>(rng: &mut R, n: usize, index: usize) -> (Vec<f64>, Vec<f64>) {
    let mut p: Vec<f64> = (0..n).map(|_| random::uniform_in(rng, 0.05, 1.0)).collect();
    let mut q: Vec<f64> = (0..n).map(|_| random::uniform_in(rng, 0.05, 1.0)).collect();
    let k = uniform_index(rng, n);
    match index % 3 {
        1 => q[k] = 0.0,
        2 => p[k] = 0.0,
        _ => {}
    }
    let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
    p.iter_mut().for_each(|v| *v /= sp);
    q.iter_mut().for_each(|v| *v /= sq);
    (p, q)
}

fn value_error(ours: &DivergenceValue, oracle: &DivergenceValue, relative: bool) -> f64 {
    match (ours.is_finite(), oracle.is_finite()) {
        (true, true) => {
            let err = (ours.value() - oracle.value()).abs();
            if !relative || err == 0.0 {
                err
            } else {
                err / oracle.value().abs()
            }
        }
        (false, false) if ours.reason() == oracle.reason() => 0.0,
        _ => f64::INFINITY,
    }
}

fn prop11(tr: &mut Trial, t: &TensorAlgebra, index: usize) -> TrialResult {
    let cfg = tr.cfg();
    let (k1, k2) = PROP11_KINDS[index % PROP11_KINDS.len()];
    tr.kind = format!("{}/{}", k1.as_str(), k2.as_str());
    let (psi1, phi1) = gen_pair(&mut tr.rng, t.left(), k1);
    let (psi2, phi2) = gen_pair(&mut tr.rng, t.right(), k2);
    tr.note(&[&psi1, &phi1, &psi2, &phi2]);
    let (p, q) = classical_pair(&mut tr.rng, t.left().carrier_dim(), index);
    let rho = PositiveFunctional::from_density(Element::from_real_diag(t.left(), &p)?, &cfg)?;
    let sigma = PositiveFunctional::from_density_unchecked(Element::from_real_diag(t.left(), &q)?);

    for params in tr.config.param_grid.clone() {
        let label = || params_label(&params);
        let r = divergence::additivity_check(t, &psi1, &phi1, &psi2, &phi2, &params, &cfg)?;
        for v in [&r.d1, &r.d2, &r.d_product] {
            tr.tag_reason(v);
        }
        let branch = match r.branch {
            divergence::AdditivityBranch::Finite => "finite",
            divergence::AdditivityBranch::InfiniteEqualOrders => "infinite_equal_orders",
            divergence::AdditivityBranch::Uncovered => "uncovered",
        };
        tr.tags.insert(format!("branch:{branch}"));
        let factor_inf = !r.q1.is_finite() || !r.q2.is_finite();
        let q_res = match r.q_relative_error() {
            Some(e) => e,
            None if factor_inf == !r.q_product.is_finite() => 0.0,
            None => f64::INFINITY,
        };
        tr.record("q_relative", q_res, label);
        let d_factor_inf = !r.d1.is_finite() || !r.d2.is_finite();
        let d_res = match r.d_abs_error() {
            Some(e) => e,
            None if d_factor_inf == !r.d_product.is_finite() => 0.0,
            None => f64::INFINITY,
        };
        tr.record("d_absolute", d_res, label);

        let ours = divergence::q_tilde_alpha_z(&rho, &sigma, &params, &cfg)?;
        let oracle = classical_renyi_oracle(&p, &q, params.alpha());
        let d_ours = divergence::d_from_q(ours, params.alpha(), rho.mass(), sigma.is_zero());
        let d_oracle = classical_divergence(&p, &q, params.alpha());
        let err = value_error(&ours, &oracle, true).max(value_error(&d_ours, &d_oracle, false));
        tr.record("classical", err, label);
    }
    Ok(())
}

fn appendix_a(tr: &mut Trial, t: &TensorAlgebra, index: usize) -> TrialResult {
    let cfg = tr.cfg();
    let x = random::gaussian_element(&mut tr.rng, t.left());
    let y = if index.is_multiple_of(2) {
        tr.kind = "gaussian_pair".into();
        random::gaussian_element(&mut tr.rng, t.right())
    } else {
        tr.kind = "gaussian_with_rank_one_density".into();
        random::positive_density(&mut tr.rng, t.right(), RankProfile::Deficient(1), Some(1.0))
    };
    let sp = tensorprod::spectral_product_check(t, &x, &y, &cfg)?;
    tr.record("spectrum", sp.max_deviation / sp.scale.max(f64::MIN_POSITIVE), String::new);
    for p in APPENDIX_A_POWERS {
        let r = tensorprod::multiplicative_fn_check(t, &x, &y, &SpectralFn::Power(p), &cfg)?;
        tr.record("multiplicativity", r, || format!("lambda^{p}"));
    }
    for s in APPENDIX_A_TIMES {
        let r = tensorprod::multiplicative_fn_check(t, &x, &y, &SpectralFn::ImagPower(s), &cfg)?;
        tr.record("multiplicativity", r, || format!("f_t,t={s}"));
    }
    Ok(())
}

const DPI_KINDS: [PairKind; 4] = [PairKind::Faithful, PairKind::Contained, PairKind::Outside, PairKind::Faithful];

fn dpi(tr: &mut Trial, alg: &BlockAlgebra, index: usize) -> TrialResult {
    let cfg = tr.cfg();
    let kind = DPI_KINDS[index % DPI_KINDS.len()];
    tr.kind = kind.as_str().into();
    let ancilla = BlockAlgebra::full(2).expect("nonempty");
    let t = TensorAlgebra::new(alg, &ancilla);
    let random_channel = UnitalChannel::random(&mut tr.rng, alg, alg, 3)?;
    let channels = [
        ("pinching", UnitalChannel::pinching(alg)),
        ("partial_trace", UnitalChannel::embedding(&t)),
        ("random_unital", random_channel),
    ];
    for (name, channel) in &channels {
        let (psi, phi) = gen_pair(&mut tr.rng, channel.codomain(), kind);
        tr.note(&[&psi, &phi]);
        for params in tr.config.param_grid.clone() {
            let r = divergence::dpi_probe(&psi, &phi, channel, &params, &cfg)?;
            tr.tag_reason(&r.before);
            tr.record("dpi_excess", r.excess(), || format!("{name},{}", params_label(&params)));
        }
    }
    Ok(())
}

/// Largest value of each residual over all trials.
pub fn worst_residuals(reports: &[TrialReport]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for r in reports.iter().flat_map(|t| &t.residuals) {
        let e = out.entry(r.name.clone()).or_insert(f64::NEG_INFINITY);
        if r.value > *e {
            *e = r.value;
        }
    }
    out
}

/// Reason codes and branches met anywhere in the run.
pub fn tags_seen(reports: &[TrialReport]) -> BTreeSet<String> {
    reports.iter().flat_map(|t| t.tags.iter().cloned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for n in SuiteName::ALL {
            assert_eq!(n.as_str().parse::<SuiteName>().unwrap(), n);
        }
        assert!(matches!("lemma2".parse::<SuiteName>(), Err(SuiteError::UnknownSuite(_))));
    }

    #[test]
    fn dims_syntax() {
        let d = parse_dims("2x2,3x2, 2+3x2,3").unwrap();
        assert_eq!(d[2].left, vec![2, 3]);
        assert_eq!(d[2].right, Some(vec![2]));
        assert_eq!(d[3].right, None);
        assert_eq!(d[2].to_string(), "2+3x2");
        assert_eq!(d[2].algebra().block_dims(), &[4, 6]);
        assert!(parse_dims("2x0").is_err());
        assert!(parse_dims("2x2x2").is_err());
        assert!(parse_dims("a").is_err());
        assert!(parse_dims("").is_err());
    }

    #[test]
    fn tolerance_overrides() {
        let c = SuiteConfig::new(SuiteName::Theorem6, 1, 0);
        let c = c.with_override("relative_error=1e-6").unwrap();
        assert_eq!(c.tolerances["relative_error"], 1e-6);
        assert!(c.clone().with_override("nope=1").is_err());
        assert!(c.clone().with_override("relative_error=-1").is_err());
        assert!(c.with_override("relative_error").is_err());
    }

    #[test]
    fn oracle_examples() {
        let q = classical_renyi_oracle(&[0.5, 0.5], &[1.0 / 3.0, 2.0 / 3.0], 2.0);
        assert!((q.value() - 1.125).abs() < 1e-15);
        let p = [0.2, 0.3, 0.5];
        assert!((classical_renyi_oracle(&p, &p, 0.7).value() - 1.0).abs() < 1e-15);
        let inf = classical_renyi_oracle(&[1.0, 0.0], &[0.0, 1.0], 2.0);
        assert_eq!(inf.reason(), Reason::SupportViolation);
        assert_eq!(classical_divergence(&[1.0, 0.0], &[0.0, 1.0], 0.5).reason(), Reason::ZeroQAlphaLt1);
        assert_eq!(classical_divergence(&[1.0, 0.0], &[0.0, 0.0], 0.5).reason(), Reason::ZeroReference);
    }

    #[test]
    fn generator_profiles() {
        let cfg = SpectralConfig::default();
        let mut rng = trial_rng(7, 0);
        let m2 = BlockAlgebra::full(2).unwrap();
        let m3 = BlockAlgebra::full(3).unwrap();
        let z = gen_positive_functional(&mut rng, &m2, RankProfile::Zero);
        assert_eq!(z.mass(), 0.0);
        assert_eq!(rank(&z, &cfg), 0);
        let f = gen_positive_functional(&mut rng, &m2, RankProfile::Full);
        assert!(f.spectrum(&cfg).unwrap().min_eigenvalue() > 0.0);
        let d = gen_positive_functional(&mut rng, &m3, RankProfile::Deficient(1));
        assert_eq!(rank(&d, &cfg), 1);
    }

    #[test]
    fn planted_pairs() {
        let cfg = SpectralConfig::default();
        let alg = BlockAlgebra::new(&[2, 1]).unwrap();
        for i in 0..20 {
            let mut rng = trial_rng(3, i);
            let (psi, phi) = gen_pair(&mut rng, &alg, PairKind::Contained);
            assert!(!phi.is_faithful(&cfg).unwrap());
            assert!(!divergence::support_violated(&psi, &phi, &cfg).unwrap());
            let (psi, phi) = gen_pair(&mut rng, &alg, PairKind::Outside);
            assert!(divergence::support_violated(&psi, &phi, &cfg).unwrap());
            let (a, b) = gen_pair(&mut rng, &alg, PairKind::Orthogonal);
            let s = a.support(&cfg).unwrap().add(&b.support(&cfg).unwrap()).unwrap();
            assert!(s.distance(&Element::identity(&alg)) < 1e-10);
        }
    }

    #[test]
    fn trials_are_reproducible() {
        let c = SuiteConfig::new(SuiteName::Lemma9, 3, 11);
        let a = run_suite(&c).unwrap();
        let b = run_suite(&c).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].generator, a[1].generator);
        assert!(run_suite(&SuiteConfig::new(SuiteName::Lemma9, 0, 11)).is_err());
    }
}
