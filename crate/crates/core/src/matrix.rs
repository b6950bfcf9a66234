//! Dense complex matrices and the Jacobi kernels behind every spectral
//! computation in the crate.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::C64;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from row-major data. Panics if the length does not match.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product. Panics on inner-dimension mismatch; callers validate shapes.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul inner dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entrywise `|a_ij - conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                d = d.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        d
    }

    /// `(a + a*) / 2`, with an exactly real diagonal.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        let mut out = Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        });
        for i in 0..self.rows {
            out[(i, i)].im = 0.0;
        }
        out
    }

    /// Kronecker product, `(a⊗b)[(i,k),(j,l)] = a[i,j]·b[k,l]` (left-major).
    pub fn kron(&self, rhs: &Self) -> Self {
        let (r2, c2) = (rhs.rows, rhs.cols);
        Self::from_fn(self.rows * r2, self.cols * c2, |i, j| {
            self[(i / r2, j / c2)] * rhs[(i % r2, j % c2)]
        })
    }

    /// Row-major flattening.
    pub fn vectorize(&self) -> Vec<C64> {
        self.data.clone()
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Self) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn sub_block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

const MAX_SWEEPS: usize = 80;

/// Plane rotation `J` acting on coordinates `(p, q)` that diagonalizes the
/// Hermitian 2×2 `[[app, apq], [conj(apq), aqq]]` via `J* A J`.
#[derive(Debug, Clone, Copy)]
struct Rotation {
    jpp: C64,
    jpq: C64,
    jqp: C64,
    jqq: C64,
}

impl Rotation {
    fn diagonalizing(app: f64, aqq: f64, apq: C64) -> Self {
        let r = apq.norm();
        let phase = apq / r;
        let tau = (aqq - app) / (2.0 * r);
        let t = if tau == 0.0 {
            1.0
        } else {
            tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
        };
        let c = 1.0 / (1.0 + t * t).sqrt();
        let s = t * c;
        let conj_phase = phase.conj();
        Self {
            jpp: C64::new(c, 0.0),
            jpq: C64::new(s, 0.0),
            jqp: conj_phase * (-s),
            jqq: conj_phase * c,
        }
    }

    /// `m ← m J` on columns `p, q`.
    fn apply_right(&self, m: &mut CMatrix, p: usize, q: usize) {
        for k in 0..m.rows {
            let (mp, mq) = (m[(k, p)], m[(k, q)]);
            m[(k, p)] = mp * self.jpp + mq * self.jqp;
            m[(k, q)] = mp * self.jpq + mq * self.jqq;
        }
    }

    /// `m ← J* m` on rows `p, q`.
    fn apply_left_adjoint(&self, m: &mut CMatrix, p: usize, q: usize) {
        for k in 0..m.cols {
            let (mp, mq) = (m[(p, k)], m[(q, k)]);
            m[(p, k)] = self.jpp.conj() * mp + self.jqp.conj() * mq;
            m[(q, k)] = self.jpq.conj() * mp + self.jqq.conj() * mq;
        }
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Only the Hermitian part of `a` is read. Returns eigenvalues in ascending
/// order and the unitary whose columns are the matching eigenvectors.
pub fn eigh(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    assert!(a.is_square(), "eigh needs a square matrix");
    let n = a.rows;
    let mut m = a.hermitian_part();
    let mut v = CMatrix::identity(n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let (app, aqq) = (m[(p, p)].re, m[(q, q)].re);
                if r <= f64::EPSILON * 0.5 * (app.abs() * aqq.abs()).sqrt() || r < f64::MIN_POSITIVE
                {
                    m[(p, q)] = C64::zero();
                    m[(q, p)] = C64::zero();
                    continue;
                }
                rotated = true;
                let rot = Rotation::diagonalizing(app, aqq, apq);
                rot.apply_right(&mut m, p, q);
                rot.apply_left_adjoint(&mut m, p, q);
                m[(p, q)] = C64::zero();
                m[(q, p)] = C64::zero();
                m[(p, p)].im = 0.0;
                m[(q, q)].im = 0.0;
                rot.apply_right(&mut v, p, q);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    (values, vectors)
}

/// Thin singular value decomposition `a = u · diag(s) · v*`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows × k` with orthonormal columns wherever `s > 0`.
    pub u: CMatrix,
    /// Singular values in descending order, `k = min(rows, cols)`.
    pub s: Vec<f64>,
    /// `cols × k` with orthonormal columns.
    pub v: CMatrix,
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(a: &CMatrix) -> Svd {
    if a.rows < a.cols {
        let t = svd(&a.adjoint());
        return Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        };
    }
    let (m, n) = (a.rows, a.cols);
    let mut g = a.clone();
    let mut v = CMatrix::identity(n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = C64::zero();
                for k in 0..m {
                    let (gp, gq) = (g[(k, p)], g[(k, q)]);
                    alpha += gp.norm_sqr();
                    beta += gq.norm_sqr();
                    gamma += gp.conj() * gq;
                }
                let r = gamma.norm();
                if r == 0.0 || r <= f64::EPSILON * (alpha * beta).sqrt() || r < f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let rot = Rotation::diagonalizing(alpha, beta, gamma);
                rot.apply_right(&mut g, p, q);
                rot.apply_right(&mut v, p, q);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|k| g[(k, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let u = CMatrix::from_fn(m, n, |i, j| {
        let sj = norms[order[j]];
        if sj > 0.0 {
            g[(i, order[j])] / sj
        } else {
            C64::zero()
        }
    });
    let v = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Svd { u, s, v }
}

/// Singular values in descending order.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    svd(a).s
}

/// Orthonormal basis of the column space of `a` by Gram–Schmidt with column
/// pivoting and one reorthogonalization pass. Columns whose residual norm
/// drops to `rel_tol · max column norm` are discarded.
pub fn range_basis(a: &CMatrix, rel_tol: f64) -> CMatrix {
    let m = a.rows;
    let mut cols: Vec<Vec<C64>> = (0..a.cols).map(|j| a.column(j)).collect();
    let scale = cols.iter().map(|c| norm(c)).fold(0.0, f64::max);
    let mut basis: Vec<Vec<C64>> = Vec::new();
    while !cols.is_empty() {
        let (best, best_norm) = cols
            .iter()
            .enumerate()
            .map(|(i, c)| (i, norm(c)))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if scale == 0.0 || best_norm <= rel_tol * scale || basis.len() == m {
            break;
        }
        let mut w = cols.swap_remove(best);
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= *bi * proj;
                }
            }
        }
        let nw = norm(&w);
        if nw <= rel_tol * scale {
            continue;
        }
        for wi in w.iter_mut() {
            *wi /= nw;
        }
        for c in cols.iter_mut() {
            let proj = dot(&w, c);
            for (ci, wi) in c.iter_mut().zip(&w) {
                *ci -= *wi * proj;
            }
        }
        basis.push(w);
    }
    CMatrix::from_fn(m, basis.len(), |i, j| basis[j][i])
}

/// Orthonormalizes the columns of a full-column-rank `a` (thin Q factor).
pub fn orthonormalize_columns(a: &CMatrix) -> CMatrix {
    let q = range_basis(a, 1e-13);
    assert_eq!(q.cols, a.cols, "columns are numerically dependent");
    q
}

/// Least-squares solution of `a x ≈ b` via a Gram–Schmidt QR factorization
/// with reorthogonalization. `a` must have full column rank.
pub fn least_squares(a: &CMatrix, b: &[C64]) -> Option<Vec<C64>> {
    assert_eq!(a.rows, b.len());
    let (m, n) = (a.rows, a.cols);
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut r = CMatrix::zeros(n, n);
    let scale = a.frobenius_norm();
    for j in 0..n {
        let mut w = a.column(j);
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let proj = dot(qi, &w);
                r[(i, j)] += proj;
                for (wk, qk) in w.iter_mut().zip(qi) {
                    *wk -= *qk * proj;
                }
            }
        }
        let nw = norm(&w);
        if nw <= 1e-14 * scale || nw == 0.0 {
            return None;
        }
        r[(j, j)] = C64::new(nw, 0.0);
        for wk in w.iter_mut() {
            *wk /= nw;
        }
        q.push(w);
    }
    debug_assert_eq!(q.first().map_or(m, |c| c.len()), m);
    let qtb: Vec<C64> = q.iter().map(|qi| dot(qi, b)).collect();
    let mut x = vec![C64::zero(); n];
    for i in (0..n).rev() {
        let mut acc = qtb[i];
        for k in i + 1..n {
            acc -= r[(i, k)] * x[k];
        }
        x[i] = acc / r[(i, i)];
    }
    Some(x)
}

/// `Σ conj(a_i) b_i`.
fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
