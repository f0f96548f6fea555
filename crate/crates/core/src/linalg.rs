//! Small dense linear algebra for ambient dimension `d ≤ 4`.
//!
//! Two conventions differ from the usual library defaults and are load
//! bearing for everything downstream:
//!
//! * Singular values are reported in **ascending** order `σ_1 ≤ … ≤ σ_d`,
//!   so `σ_1` is the conorm (minimal expansion) and `σ_d` the operator
//!   norm. Slow directions come first because the objects of interest
//!   (kernels, slow subspaces E) live at the bottom of the spectrum.
//! * Long chain products are kept in a **log-factored** form
//!   `W · diag(exp ℓ) · Vᵀ` so that ratios `σ_i/σ_j` stay meaningful even
//!   when the raw product spans hundreds of orders of magnitude or
//!   contains exact zeros (ℓ = −∞).
//!
//! The SVD is a one-sided Jacobi iteration, which at these sizes is
//! simple, robust, and — crucially for graded chain factors — accurate in
//! a *relative* sense for small singular values.

use alloc::vec::Vec;
use core::fmt;

use crate::math;

/// Maximum supported ambient dimension. Matrices store a fixed 4×4
/// backing array regardless of their logical dimension.
pub const MAX_DIM: usize = 4;

/// Tolerance used by the Jacobi sweep to decide that two columns are
/// numerically orthogonal (squared-cosine threshold).
const JACOBI_TOL2: f64 = 1e-30;

/// Maximum number of Jacobi sweeps; at d ≤ 4 convergence takes ≤ 10.
const JACOBI_MAX_SWEEPS: usize = 60;

/// Errors produced by the chain-product operations.
#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// A raw chain product overflowed to non-finite entries; the payload
    /// is the index of the factor at which the overflow appeared.
    Overflow { index: usize },
    /// Operands have mismatched dimensions.
    DimensionMismatch { left: usize, right: usize },
    /// A restricted conorm was requested on a subspace that the matrix
    /// annihilates entirely (restriction has no expansion to measure).
    DegenerateRestriction,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::Overflow { index } => {
                write!(f, "chain product overflowed at factor {index}")
            }
            LinalgError::DimensionMismatch { left, right } => {
                write!(f, "dimension mismatch: {left} vs {right}")
            }
            LinalgError::DegenerateRestriction => {
                write!(f, "restriction of the map to the subspace is zero")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LinalgError {}

// ───────────────────────── vectors (ad-hoc helpers) ─────────────────────────

/// Fixed-size vector backing; entries at positions ≥ `d` must stay zero.
pub type Vec4 = [f64; 4];

/// Dot product of the first `d` entries.
pub fn dot(d: usize, a: &Vec4, b: &Vec4) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        s += a[i] * b[i];
    }
    s
}

/// Euclidean norm of the first `d` entries.
pub fn norm(d: usize, a: &Vec4) -> f64 {
    math::sqrt(dot(d, a, a))
}

/// `a ← a/‖a‖`; returns the norm. Leaves `a` untouched when it is zero.
pub fn normalize(d: usize, a: &mut Vec4) -> f64 {
    let n = norm(d, a);
    if n > 0.0 {
        for i in 0..d {
            a[i] /= n;
        }
    }
    n
}

/// `a + s·b`.
pub fn axpy(d: usize, a: &Vec4, s: f64, b: &Vec4) -> Vec4 {
    let mut out = [0.0; 4];
    for i in 0..d {
        out[i] = a[i] + s * b[i];
    }
    out
}

// ───────────────────────────────── matrices ─────────────────────────────────

/// Dense square matrix of logical dimension `dim ≤ 4`, row major with a
/// fixed stride of 4. Entries outside the logical block are zero.
#[derive(Clone, Copy, PartialEq)]
pub struct Matrix {
    dim: usize,
    a: [f64; 16],
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix{}x{}[", self.dim, self.dim)?;
        for r in 0..self.dim {
            if r > 0 {
                write!(f, "; ")?;
            }
            for c in 0..self.dim {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(r, c))?;
            }
        }
        write!(f, "]")
    }
}

impl Matrix {
    /// Zero matrix of dimension `dim`.
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension must be 1..=4");
        Matrix { dim, a: [0.0; 16] }
    }

    /// Identity matrix of dimension `dim`.
    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from rows, e.g. `Matrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.5]])`.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        let mut m = Matrix::zeros(dim);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "rows must form a square matrix");
            for (c, &x) in row.iter().enumerate() {
                m.set(r, c, x);
            }
        }
        m
    }

    /// Diagonal matrix from the given entries.
    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m.set(i, i, x);
        }
        m
    }

    /// Logical dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.a[r * 4 + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, x: f64) {
        self.a[r * 4 + c] = x;
    }

    /// Column `c` as a vector.
    pub fn col(&self, c: usize) -> Vec4 {
        let mut v = [0.0; 4];
        for r in 0..self.dim {
            v[r] = self.get(r, c);
        }
        v
    }

    /// Overwrite column `c`.
    pub fn set_col(&mut self, c: usize, v: &Vec4) {
        for r in 0..self.dim {
            self.set(r, c, v[r]);
        }
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|x| x.is_finite())
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &Vec4) -> Vec4 {
        let mut out = [0.0; 4];
        for r in 0..self.dim {
            let mut s = 0.0;
            for c in 0..self.dim {
                s += self.get(r, c) * v[c];
            }
            out[r] = s;
        }
        out
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions must agree");
        let mut out = Matrix::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                let mut s = 0.0;
                for k in 0..self.dim {
                    s += self.get(r, k) * rhs.get(k, c);
                }
                out.set(r, c, s);
            }
        }
        out
    }

    /// Transpose.
    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// Entry-wise scale.
    pub fn scale(&self, s: f64) -> Matrix {
        let mut out = *self;
        for x in out.a.iter_mut() {
            *x *= s;
        }
        out
    }

    /// `self - rhs`.
    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions must agree");
        let mut out = Matrix::zeros(self.dim);
        for i in 0..16 {
            out.a[i] = self.a[i] - rhs.a[i];
        }
        out
    }

    /// Operator norm (largest singular value).
    pub fn op_norm(&self) -> f64 {
        let sv = singular_values_of_columns(self.dim, &columns(self));
        sv.last().copied().unwrap_or(0.0)
    }

    /// Conorm (smallest singular value, the minimal expansion factor).
    pub fn conorm(&self) -> f64 {
        let sv = singular_values_of_columns(self.dim, &columns(self));
        sv.first().copied().unwrap_or(0.0)
    }

    /// Frobenius norm.
    pub fn frob_norm(&self) -> f64 {
        math::sqrt(self.a.iter().map(|x| x * x).sum())
    }

    /// Inverse via the SVD; `None` when the conorm is ≤ `tol · σ_max`.
    pub fn inverse(&self, tol: f64) -> Option<Matrix> {
        let svd = svd_ascending(self);
        let smax = svd.sigmas[self.dim - 1];
        if svd.sigmas[0] <= tol * smax || smax == 0.0 {
            return None;
        }
        // A⁻¹ = V · diag(1/σ) · Wᵀ
        let mut out = Matrix::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                let mut s = 0.0;
                for k in 0..self.dim {
                    s += svd.domain.get(r, k) * svd.codomain.get(c, k) / svd.sigmas[k];
                }
                out.set(r, c, s);
            }
        }
        Some(out)
    }
}

fn columns(m: &Matrix) -> Vec<Vec4> {
    (0..m.dim).map(|c| m.col(c)).collect()
}

// ──────────────────────────── one-sided Jacobi SVD ───────────────────────────

/// Result of [`svd_ascending`]: `A = codomain · diag(sigmas) · domainᵀ`
/// with `sigmas[0] ≤ … ≤ sigmas[d-1]`, and `A · domain.col(i) =
/// sigmas[i] · codomain.col(i)`. Both bases are orthonormal.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub sigmas: Vec<f64>,
    /// Orthonormal domain basis (right singular vectors), as columns.
    pub domain: Matrix,
    /// Orthonormal codomain basis (left singular vectors), as columns.
    pub codomain: Matrix,
}

/// One-sided Jacobi sweep on a set of columns: returns `(sigmas_asc,
/// perm-applied unit columns, accumulated right rotations)` for the
/// `d × k` matrix whose columns are given (`k ≤ d`).
///
/// Only the singular values are returned here; the full decomposition
/// lives in [`svd_ascending`]. Zero columns produce zero singular values.
fn jacobi_columns(d: usize, cols: &[Vec4]) -> (Vec<f64>, Vec<Vec4>, Vec<Vec4>) {
    let k = cols.len();
    let mut u: Vec<Vec4> = cols.to_vec();
    // Right-rotation accumulator: starts as the identity on ℝᵏ.
    let mut v: Vec<Vec4> = (0..k)
        .map(|i| {
            let mut e = [0.0; 4];
            e[i] = 1.0;
            e
        })
        .collect();

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut converged = true;
        for p in 0..k {
            for q in (p + 1)..k {
                let a = dot(d, &u[p], &u[p]);
                let b = dot(d, &u[q], &u[q]);
                let g = dot(d, &u[p], &u[q]);
                if g * g <= JACOBI_TOL2 * a * b || g == 0.0 {
                    continue;
                }
                converged = false;
                let zeta = (b - a) / (2.0 * g);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + math::sqrt(1.0 + zeta * zeta))
                } else {
                    -1.0 / (-zeta + math::sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = c * t;
                let (up, uq) = (u[p], u[q]);
                u[p] = axpy(d, &up.map(|x| x * c), -s, &uq);
                u[q] = axpy(d, &up.map(|x| x * s), c, &uq);
                let (vp, vq) = (v[p], v[q]);
                v[p] = axpy(k, &vp.map(|x| x * c), -s, &vq);
                v[q] = axpy(k, &vp.map(|x| x * s), c, &vq);
            }
        }
        if converged {
            break;
        }
    }

    // Extract norms (= singular values) and sort ascending.
    let mut order: Vec<usize> = (0..k).collect();
    let norms: Vec<f64> = u.iter().map(|c| norm(d, c)).collect();
    order.sort_by(|&i, &j| norms[i].partial_cmp(&norms[j]).expect("finite norms"));

    let sigmas: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let left: Vec<Vec4> = order
        .iter()
        .map(|&i| {
            let mut c = u[i];
            normalize(d, &mut c);
            c
        })
        .collect();
    let right: Vec<Vec4> = order.iter().map(|&i| v[i]).collect();
    (sigmas, left, right)
}

/// Full SVD with ascending singular values.
///
/// Postconditions (all checked by tests): the reconstruction
/// `codomain·diag(σ)·domainᵀ` matches `A` to `1e-9 · max(1, ‖A‖)`, both
/// bases are orthonormal to `1e-12`, and σ is ascending. Codomain columns
/// paired with zero singular values are completed to an orthonormal basis.
pub fn svd_ascending(m: &Matrix) -> SvdResult {
    let d = m.dim;
    let (sigmas, mut left, right) = jacobi_columns(d, &columns(m));

    // Complete codomain columns that correspond to σ = 0 (the Jacobi
    // iteration leaves them as zero vectors).
    complete_orthonormal(d, &mut left, &sigmas);

    let mut domain = Matrix::zeros(d);
    let mut codomain = Matrix::zeros(d);
    for i in 0..d {
        domain.set_col(i, &right[i]);
        codomain.set_col(i, &left[i]);
    }
    SvdResult { sigmas, domain, codomain }
}

/// Replace zero columns of `left` (flagged by `σ_i = 0`) with unit
/// vectors orthogonal to all the others.
fn complete_orthonormal(d: usize, left: &mut [Vec4], sigmas: &[f64]) {
    for i in 0..left.len() {
        if sigmas[i] > 0.0 {
            continue;
        }
        // Try coordinate vectors, Gram-Schmidt against current columns.
        for e in 0..d {
            let mut cand = [0.0; 4];
            cand[e] = 1.0;
            for (j, col) in left.iter().enumerate() {
                if j != i && norm(d, col) > 0.5 {
                    let proj = dot(d, &cand, col);
                    cand = axpy(d, &cand, -proj, col);
                }
            }
            if normalize(d, &mut cand) > 1e-6 {
                left[i] = cand;
                break;
            }
        }
    }
}

/// Singular values (ascending) of the `d × k` matrix with the given
/// columns, `k ≤ d`. Used for restricted norms/conorms.
pub fn singular_values_of_columns(d: usize, cols: &[Vec4]) -> Vec<f64> {
    if cols.is_empty() {
        return Vec::new();
    }
    jacobi_columns(d, cols).0
}

// ───────────────────── kernel / image with tolerance ranks ───────────────────

/// Orthonormal basis of the numerical kernel: span of domain singular
/// vectors with `σ_i ≤ tol · σ_max`. When `σ_max ≤ tol` the whole space
/// is returned (A is numerically zero).
pub fn kernel(m: &Matrix, tol: f64) -> Vec<Vec4> {
    let svd = svd_ascending(m);
    let smax = svd.sigmas[m.dim - 1];
    if smax <= tol {
        return (0..m.dim).map(|i| svd.domain.col(i)).collect();
    }
    svd.sigmas
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol * smax)
        .map(|(i, _)| svd.domain.col(i))
        .collect()
}

/// Orthonormal basis of the numerical image: span of codomain singular
/// vectors with `σ_i > tol · σ_max`. Dimension is `d - dim kernel`.
pub fn image(m: &Matrix, tol: f64) -> Vec<Vec4> {
    let svd = svd_ascending(m);
    let smax = svd.sigmas[m.dim - 1];
    if smax <= tol {
        return Vec::new();
    }
    svd.sigmas
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tol * smax)
        .map(|(i, _)| svd.codomain.col(i))
        .collect()
}

/// Norm of the restriction `‖A|_V‖ = max {‖Av‖ : v ∈ V, ‖v‖ = 1}`, i.e.
/// the top singular value of `A · B_V` for an orthonormal basis `B_V`.
pub fn norm_restricted(m: &Matrix, basis: &[Vec4]) -> f64 {
    assert!(!basis.is_empty(), "restriction to the zero subspace");
    let cols: Vec<Vec4> = basis.iter().map(|v| m.apply(v)).collect();
    let sv = singular_values_of_columns(m.dim, &cols);
    sv.last().copied().unwrap_or(0.0)
}

/// Conorm of the restriction `m(A|_V) = min {‖Av‖ : v ∈ V, ‖v‖ = 1}`,
/// i.e. the bottom singular value of `A · B_V`.
pub fn conorm_restricted(m: &Matrix, basis: &[Vec4]) -> f64 {
    assert!(!basis.is_empty(), "restriction to the zero subspace");
    let cols: Vec<Vec4> = basis.iter().map(|v| m.apply(v)).collect();
    let sv = singular_values_of_columns(m.dim, &cols);
    sv.first().copied().unwrap_or(0.0)
}

// ─────────────────────────── chain products ────────────────────────────

/// Raw ordered product `A_n ⋯ A_2 · A_1` (chain index 0 acts first).
///
/// Fails with [`LinalgError::Overflow`] if any intermediate entry leaves
/// the finite range. For chains longer than ~30 factors, or whenever
/// intermediate norms pass ~1e12, query singular data through
/// [`svd_of_chain`] instead: the raw product loses the small singular
/// values to roundoff long before it overflows.
pub fn product_chain(chain: &[Matrix]) -> Result<Matrix, LinalgError> {
    let first = chain.first().expect("chain must be nonempty");
    let mut acc = Matrix::identity(first.dim());
    for (i, m) in chain.iter().enumerate() {
        if m.dim() != first.dim() {
            return Err(LinalgError::DimensionMismatch { left: first.dim(), right: m.dim() });
        }
        acc = m.mul(&acc);
        if !acc.is_finite() {
            return Err(LinalgError::Overflow { index: i });
        }
    }
    Ok(acc)
}

/// SVD of a long chain product, kept in log-factored form
/// `W · diag(exp ℓ) · Vᵀ` with ℓ ascending. Exact zeros are stored as
/// `ℓ = -∞`, so ratios like `σ_1/σ_2 = exp(ℓ_1 - ℓ_2)` stay meaningful
/// across arbitrarily many orders of magnitude.
#[derive(Debug, Clone)]
pub struct ChainSvd {
    dim: usize,
    /// Natural logs of the singular values, ascending (−∞ for exact 0).
    pub log_sigmas: Vec<f64>,
    /// Orthonormal domain basis of the product (columns).
    pub domain: Matrix,
    /// Orthonormal codomain basis of the product (columns).
    pub codomain: Matrix,
}

impl ChainSvd {
    /// Identity state (empty chain).
    pub fn identity(dim: usize) -> Self {
        ChainSvd {
            dim,
            log_sigmas: alloc::vec![0.0; dim],
            domain: Matrix::identity(dim),
            codomain: Matrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Push one more factor onto the chain: state ← svd(A · state).
    ///
    /// The update forms `M = (A · W) · diag(exp(ℓ − ℓ_max))`, runs the
    /// small SVD on `M`, and re-absorbs `ℓ_max`; relative gaps between
    /// the ℓ's are preserved to machine precision per step.
    pub fn push(&mut self, a: &Matrix) {
        assert_eq!(a.dim(), self.dim, "chain factors must share the dimension");
        let lmax = self.log_sigmas[self.dim - 1];
        if lmax == f64::NEG_INFINITY {
            // The product is exactly zero already and stays zero.
            return;
        }
        let aw = a.mul(&self.codomain);
        let mut m = Matrix::zeros(self.dim);
        for c in 0..self.dim {
            let f = math::exp(self.log_sigmas[c] - lmax);
            for r in 0..self.dim {
                m.set(r, c, aw.get(r, c) * f);
            }
        }
        let svd = svd_ascending(&m);
        self.codomain = svd.codomain;
        // New domain basis: (V'ᵀ · Vᵀ)ᵀ = V · V', columns stay orthonormal.
        self.domain = self.domain.mul(&svd.domain);
        for i in 0..self.dim {
            self.log_sigmas[i] = if svd.sigmas[i] == 0.0 {
                f64::NEG_INFINITY
            } else {
                math::ln(svd.sigmas[i]) + lmax
            };
        }
    }

    /// Singular values as plain floats (may underflow to 0 / overflow to
    /// ∞; prefer `log_sigmas` or [`ChainSvd::sigma_ratio`] for analysis).
    pub fn sigmas(&self) -> Vec<f64> {
        self.log_sigmas.iter().map(|&l| math::exp(l)).collect()
    }

    /// `σ_i / σ_j` computed in log space (0 when ℓ_i = −∞).
    pub fn sigma_ratio(&self, i: usize, j: usize) -> f64 {
        let (li, lj) = (self.log_sigmas[i], self.log_sigmas[j]);
        if li == f64::NEG_INFINITY {
            return 0.0;
        }
        math::exp(li - lj)
    }

    /// Dimension of the numerical kernel measured against an external
    /// log-scale (e.g. the summed log-norms of the chain): counts the
    /// `ℓ_i ≤ log_scale + ln(tol)`.
    pub fn kernel_dim_vs_scale(&self, log_scale: f64, tol: f64) -> usize {
        let cut = log_scale + math::ln(tol);
        self.log_sigmas.iter().filter(|&&l| l <= cut).count()
    }

    /// Domain singular vectors with index in `range` (ascending order).
    pub fn domain_cols(&self, lo: usize, hi: usize) -> Vec<Vec4> {
        (lo..hi).map(|i| self.domain.col(i)).collect()
    }
}

/// SVD of the ordered product `A_n ⋯ A_1` via sequential log-factored
/// accumulation. Agrees with `svd_ascending(product_chain(…))` on short,
/// well-conditioned chains, and keeps relative accuracy of the ratios on
/// chains where the raw product would over- or underflow.
pub fn svd_of_chain(chain: &[Matrix]) -> ChainSvd {
    let first = chain.first().expect("chain must be nonempty");
    let mut acc = ChainSvd::identity(first.dim());
    for m in chain {
        acc.push(m);
    }
    acc
}
