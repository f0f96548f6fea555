//! Singular-value analysis along finite matrix chains.
//!
//! A [`CocycleSegment`] is a window of step matrices `A_i` indexed by
//! `i64`, usually the Jacobians of an orbit segment but also synthetic
//! chains built directly from matrices. The analyses here all live in
//! log-singular-value space so that long expanding or collapsing chains
//! neither overflow nor lose the relative gaps:
//!
//! * [`gap_report`] — does `σ_κ / σ_{κ+1}` of the window products decay
//!   geometrically? (The numerical evidence for a dominated index κ.)
//! * [`en_subspace`] / [`e_limit`] — the κ weakest domain singular
//!   directions of a window, and their Cauchy limit as the window grows.
//! * [`f_backward`] — the strong complement, reached by pushing a cone
//!   center forward from deeper and deeper in the past.
//! * [`singular_splitting_vw`] — the one-matrix weak/strong splitting
//!   whose images are automatically orthogonal.
//! * [`kone_contraction_probe`] — how many steps a chain needs to
//!   squeeze a cone of half-angle δ inside a cone of half-angle ε.

use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{self, ChainSvd, Matrix, Vec4};
use crate::math;
use crate::subspace::{self, CauchyReport, Subspace, SubspaceError};
use crate::cone::Cone;
use crate::torus::OrbitSegment;

/// Relative tolerance deciding that two singular values are "equal" and
/// a requested splitting index has no gap.
pub const GAP_EQUALITY_TOL: f64 = 1e-10;

/// Geometric decay slack: a fitted rate passes only when λ̂ ≤ 1 − this.
pub const DECAY_MARGIN: f64 = 1e-3;

/// Relative threshold for numerical kernels of window products,
/// measured against the summed log-norms of the window.
pub const KERNEL_SCALE_TOL: f64 = 1e-8;

/// Errors from chain analyses.
#[derive(Debug, Clone, PartialEq)]
pub enum CocycleError {
    /// The requested window `[index, index + len)` leaves the segment.
    WindowOutOfRange { index: i64, len: usize },
    /// `σ_κ` and `σ_{κ+1}` coincide to relative 1e-10 — the requested
    /// index has no singular gap here.
    NoGap { ratio: f64 },
    /// The subspace sequence did not settle below the tolerance.
    NotConverged { last_distance: f64 },
    /// A pushed-forward subspace left the verification cone.
    ConeEscape { depth: usize, angle: f64 },
    /// The chain annihilated a direction of the pushed subspace.
    RankCollapse { depth: usize },
    /// Not enough usable windows to say anything.
    TooShort,
    Subspace(SubspaceError),
}

impl fmt::Display for CocycleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CocycleError::WindowOutOfRange { index, len } => {
                write!(f, "window [{index}, {index}+{len}) outside the segment")
            }
            CocycleError::NoGap { ratio } => {
                write!(f, "no singular gap at the requested index (ratio {ratio})")
            }
            CocycleError::NotConverged { last_distance } => {
                write!(f, "subspace sequence still moving (last distance {last_distance:e})")
            }
            CocycleError::ConeEscape { depth, angle } => {
                write!(f, "pushed subspace left the cone at depth {depth} (angle {angle})")
            }
            CocycleError::RankCollapse { depth } => {
                write!(f, "chain annihilated a pushed direction at depth {depth}")
            }
            CocycleError::TooShort => write!(f, "not enough usable windows"),
            CocycleError::Subspace(e) => write!(f, "subspace failure: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CocycleError {}

impl From<SubspaceError> for CocycleError {
    fn from(e: SubspaceError) -> Self {
        CocycleError::Subspace(e)
    }
}

// ───────────────────────────── segments ─────────────────────────────

/// A finite chain of step matrices `A_i`, `lo ≤ i < lo + len`, where
/// `A_i` maps the fiber at time `i` to the fiber at time `i + 1`.
#[derive(Debug, Clone)]
pub struct CocycleSegment {
    lo: i64,
    matrices: Vec<Matrix>,
    dim: usize,
}

impl CocycleSegment {
    pub fn from_matrices(lo: i64, matrices: Vec<Matrix>) -> Self {
        let dim = matrices.first().expect("empty chain").dim();
        assert!(matrices.iter().all(|m| m.dim() == dim), "mixed dimensions");
        CocycleSegment { lo, matrices, dim }
    }

    /// The Jacobian chain of an orbit segment.
    pub fn from_orbit(orbit: &OrbitSegment) -> Self {
        let matrices: Vec<Matrix> =
            (orbit.lo()..orbit.hi()).map(|i| *orbit.jacobian(i)).collect();
        CocycleSegment { lo: orbit.lo(), matrices, dim: orbit.dim() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Smallest step index.
    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// One past the largest step index.
    pub fn hi(&self) -> i64 {
        self.lo + self.matrices.len() as i64
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrix(&self, i: i64) -> &Matrix {
        &self.matrices[(i - self.lo) as usize]
    }

    pub fn has_window(&self, i: i64, len: usize) -> bool {
        i >= self.lo && i + len as i64 <= self.hi()
    }

    /// The factors of the window `[i, i + len)` in application order.
    pub fn window(&self, i: i64, len: usize) -> Result<Vec<Matrix>, CocycleError> {
        if !self.has_window(i, len) {
            return Err(CocycleError::WindowOutOfRange { index: i, len });
        }
        Ok((0..len).map(|j| *self.matrix(i + j as i64)).collect())
    }

    /// Log-factored SVD of the window product `A_{i+len-1} ⋯ A_i`.
    pub fn window_svd(&self, i: i64, len: usize) -> Result<ChainSvd, CocycleError> {
        Ok(linalg::svd_of_chain(&self.window(i, len)?))
    }

    /// `Σ ln ‖A_j‖` over the window — the natural scale against which a
    /// numerical kernel of the product is measured.
    pub fn window_log_scale(&self, i: i64, len: usize) -> Result<f64, CocycleError> {
        let mut s = 0.0;
        for m in self.window(i, len)? {
            let n = m.op_norm();
            if n == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            s += math::ln(n);
        }
        Ok(s)
    }
}

/// Synthetic chain `A_n = [[0, 1], [0, 1/(n+1)]]` for `n = 0 … len-1`:
/// every factor kills the first axis and shears the second onto it with
/// harmonically decaying strength. The exact invariant family is
/// `E_n = span{(1, 0)}`, `F_n = span{(1, 1/n)}` (for `n ≥ 1`), with the
/// angle between them closing like `arctan(1/n)` — the standard witness
/// that domination alone cannot keep a splitting away from collapse.
pub fn harmonic_shear_chain(len: usize) -> CocycleSegment {
    let matrices: Vec<Matrix> = (0..len)
        .map(|n| Matrix::from_rows(&[&[0.0, 1.0], &[0.0, 1.0 / (n as f64 + 1.0)]]))
        .collect();
    CocycleSegment::from_matrices(0, matrices)
}

// ───────────────────────────── gap decay ─────────────────────────────

/// Decay evidence for the singular gap `r_n = σ_κ(n) / σ_{κ+1}(n)` of
/// the growing window products at a fixed base index.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GapReport {
    /// `r_n` for `n = 1 ..= n_max`; exactly 0 when the product has a
    /// true kernel at the index.
    pub ratios: Vec<f64>,
    /// How many ratios are exactly zero (those certify their windows
    /// outright and are excluded from the geometric fit).
    pub zero_count: usize,
    /// Fitted rate of `r_n ≈ c · λ̂ⁿ` over the nonzero ratios.
    pub lambda_hat: Option<f64>,
    pub c_hat: Option<f64>,
    /// True when every ratio is exactly zero, or the fitted rate
    /// satisfies `λ̂ ≤ 1 − 1e-3`.
    pub passes: bool,
}

/// Ratios `σ_κ/σ_{κ+1}` of `A_{i+n-1}⋯A_i` for `n = 1 ..= n_max`, with a
/// geometric fit. Computed by one running log-factored SVD, so chains
/// far beyond f64 range stay exact in the ratio.
pub fn gap_report(
    seg: &CocycleSegment,
    i: i64,
    kappa: usize,
    n_max: usize,
) -> Result<GapReport, CocycleError> {
    assert!(kappa >= 1 && kappa < seg.dim(), "index must split the dimension");
    if !seg.has_window(i, n_max) {
        return Err(CocycleError::WindowOutOfRange { index: i, len: n_max });
    }
    let mut acc = ChainSvd::identity(seg.dim());
    let mut ratios = Vec::with_capacity(n_max);
    for n in 0..n_max {
        acc.push(seg.matrix(i + n as i64));
        ratios.push(acc.sigma_ratio(kappa - 1, kappa));
    }
    let zero_count = ratios.iter().filter(|&&r| r == 0.0).count();
    let pts: Vec<(f64, f64)> = ratios
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > 0.0)
        .map(|(n, &r)| ((n + 1) as f64, math::ln(r)))
        .collect();
    let (lambda_hat, c_hat) = subspace::fit_log_line(&pts);
    let passes = if zero_count == ratios.len() {
        true
    } else {
        matches!(lambda_hat, Some(l) if l <= 1.0 - DECAY_MARGIN)
    };
    Ok(GapReport { ratios, zero_count, lambda_hat, c_hat, passes })
}

// ───────────────────────────── weak directions ─────────────────────────────

/// The span of the κ weakest domain singular directions of a window
/// product, provided the gap at κ is unambiguous: `σ_κ < σ_{κ+1}` with
/// relative separation at least 1e-10.
pub fn en_subspace(svd: &ChainSvd, kappa: usize) -> Result<Subspace, CocycleError> {
    let d = svd.dim();
    assert!(kappa >= 1 && kappa < d, "index must split the dimension");
    let lo = svd.log_sigmas[kappa - 1];
    let hi = svd.log_sigmas[kappa];
    let separated = if hi == f64::NEG_INFINITY {
        false // both zero: no gap
    } else {
        lo == f64::NEG_INFINITY || lo < hi + math::ln(1.0 - GAP_EQUALITY_TOL)
    };
    if !separated {
        return Err(CocycleError::NoGap { ratio: svd.sigma_ratio(kappa - 1, kappa) });
    }
    Ok(Subspace::from_orthonormal(d, svd.domain_cols(0, kappa)))
}

/// Convergence record for the weak-family limit `E(x) = lim E_n(x)`.
#[derive(Debug, Clone)]
pub struct ELimitReport {
    /// First window length with an unambiguous gap.
    pub n0: usize,
    /// The last (deepest) weak subspace — the numerical limit.
    pub limit: Subspace,
    /// Cauchy analysis of the sequence `E_{n0}, E_{n0+1}, …`.
    pub cauchy: CauchyReport,
    /// True when every numerical kernel of a window product lay inside
    /// the limit (within residual 1e-6). Kernels are detected against
    /// the window's own log-scale.
    pub kernel_contained: bool,
    /// How many windows actually exhibited a numerical kernel.
    pub kernel_checks: usize,
}

/// Follow `E_n` (κ weakest directions of `A_{i+n-1}⋯A_i`) for
/// `n = 1 ..= n_max` and certify its Cauchy convergence at tolerance
/// `tol`. Windows without a usable gap are skipped before the first
/// success; the first usable window defines `n0`.
pub fn e_limit(
    seg: &CocycleSegment,
    i: i64,
    kappa: usize,
    n_max: usize,
    tol: f64,
) -> Result<ELimitReport, CocycleError> {
    if !seg.has_window(i, n_max) {
        return Err(CocycleError::WindowOutOfRange { index: i, len: n_max });
    }
    let mut acc = ChainSvd::identity(seg.dim());
    let mut log_scale = 0.0f64;
    let mut n0 = None;
    let mut subspaces = Vec::new();
    let mut kernel_contained = true;
    let mut kernel_checks = 0usize;
    let mut kernel_witnesses: Vec<Vec<Vec4>> = Vec::new();
    let mut last_gap_error = CocycleError::TooShort;

    for n in 1..=n_max {
        let a = seg.matrix(i + (n - 1) as i64);
        let norm = a.op_norm();
        log_scale = if norm == 0.0 { f64::NEG_INFINITY } else { log_scale + math::ln(norm) };
        acc.push(a);
        match en_subspace(&acc, kappa) {
            Ok(s) => {
                if n0.is_none() {
                    n0 = Some(n);
                }
                subspaces.push(s);
            }
            Err(e) => {
                if n0.is_none() {
                    last_gap_error = e;
                } else {
                    // Gap closed again after opening — give up on this base.
                    return Err(e);
                }
            }
        }
        let kdim = acc.kernel_dim_vs_scale(log_scale, KERNEL_SCALE_TOL);
        if kdim > 0 {
            kernel_checks += 1;
            kernel_witnesses.push(acc.domain_cols(0, kdim));
        }
    }

    let Some(n0) = n0 else { return Err(last_gap_error) };
    if subspaces.len() < 2 {
        return Err(CocycleError::TooShort);
    }
    let cauchy = subspace::subspace_limit(&subspaces, tol)?;
    if !cauchy.converged {
        let last = *cauchy.distances.last().expect("len ≥ 2 gives ≥ 1 distance");
        return Err(CocycleError::NotConverged { last_distance: last });
    }
    let limit = subspaces.pop().expect("nonempty");
    for witness in &kernel_witnesses {
        for v in witness {
            if limit.residual_norm(v) > 1e-6 {
                kernel_contained = false;
            }
        }
    }
    Ok(ELimitReport { n0, limit, cauchy, kernel_contained, kernel_checks })
}

// ───────────────────────────── strong directions ─────────────────────────────

/// Convergence record for the push-forward limit of the strong family.
#[derive(Debug, Clone)]
pub struct FBackwardReport {
    /// The deepest push-forward — the numerical strong subspace.
    pub subspace: Subspace,
    /// How many depth levels `k` (chains of length `k·ℓ`) were used.
    pub depth_used: usize,
    /// Grassmannian distances between successive depth approximations.
    pub distances: Vec<f64>,
    /// Largest tilt (largest principal angle to the cone center) seen
    /// over all depths.
    pub max_tilt: f64,
    /// True when the final distance fell below the tolerance.
    pub converged: bool,
}

/// Approximate the strong subspace at index `i` by pushing the cone
/// center forward from `i − k·ℓ` for `k = 1, 2, …, max_depth`, checking
/// at every depth that the image stays inside the cone. The push
/// re-orthonormalizes after every factor, so only directions — never
/// magnitudes — accumulate.
pub fn f_backward(
    seg: &CocycleSegment,
    i: i64,
    cone: &Cone,
    ell: usize,
    max_depth: usize,
    tol: f64,
) -> Result<FBackwardReport, CocycleError> {
    assert!(ell >= 1 && max_depth >= 1);
    let r = cone.center().dim();
    let mut approximations: Vec<Subspace> = Vec::new();
    let mut max_tilt = 0.0f64;

    for k in 1..=max_depth {
        let len = k * ell;
        let start = i - len as i64;
        if !seg.has_window(start, len) {
            if k == 1 {
                return Err(CocycleError::WindowOutOfRange { index: start, len });
            }
            break;
        }
        let mut s = cone.center().clone();
        for j in 0..len {
            s = s.map_through(seg.matrix(start + j as i64), 1e-12);
            if s.dim() < r {
                return Err(CocycleError::RankCollapse { depth: k });
            }
        }
        let tilt = cone.max_angle_of_subspace(&s);
        if tilt > cone.half_angle() {
            return Err(CocycleError::ConeEscape { depth: k, angle: tilt });
        }
        if tilt > max_tilt {
            max_tilt = tilt;
        }
        approximations.push(s);
    }

    let depth_used = approximations.len();
    let mut distances = Vec::new();
    for pair in approximations.windows(2) {
        distances.push(subspace::grassmann_distance(&pair[0], &pair[1])?);
    }
    let converged = match distances.last() {
        Some(&d) => d <= tol,
        None => false,
    };
    let subspace = approximations.pop().expect("depth ≥ 1");
    Ok(FBackwardReport { subspace, depth_used, distances, max_tilt, converged })
}

// ───────────────────────── one-matrix weak/strong split ─────────────────────────

/// The weak/strong domain splitting of a single matrix: `V` spans the κ
/// weakest singular directions, `W` the rest. The images `J(V)` and
/// `J(W)` are orthogonal by construction.
#[derive(Debug, Clone)]
pub struct VwSplit {
    pub v: Subspace,
    pub w: Subspace,
    /// `1 − σ_κ/σ_{κ+1}` — how decisively the two groups separate.
    pub relative_gap: f64,
}

pub fn singular_splitting_vw(j: &Matrix, kappa: usize) -> Result<VwSplit, CocycleError> {
    let d = j.dim();
    assert!(kappa >= 1 && kappa < d, "index must split the dimension");
    let svd = linalg::svd_ascending(j);
    let (lo, hi) = (svd.sigmas[kappa - 1], svd.sigmas[kappa]);
    if hi == 0.0 || lo >= hi * (1.0 - GAP_EQUALITY_TOL) {
        let ratio = if hi == 0.0 { 1.0 } else { lo / hi };
        return Err(CocycleError::NoGap { ratio });
    }
    let v = Subspace::from_orthonormal(d, (0..kappa).map(|c| svd.domain.col(c)).collect());
    let w = Subspace::from_orthonormal(d, (kappa..d).map(|c| svd.domain.col(c)).collect());
    Ok(VwSplit { v, w, relative_gap: 1.0 - lo / hi })
}

// ───────────────────────────── cone squeezing ─────────────────────────────

/// Step-by-step record of a chain squeezing one axial cone into another.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KoneProbe {
    /// Per-step tangent contraction bounds `a_t / b_t` where `a_t` is
    /// the norm off the (pushed) center and `b_t` the conorm on it.
    pub factors: Vec<f64>,
    /// `ln tan` of the guaranteed half-angle after each step.
    pub log_tan_by_step: Vec<f64>,
    /// First step count at which the half-angle is ≤ the target ε.
    pub steps_to_target: Option<usize>,
}

/// Drive an axial cone of half-angle `delta` through the chain and
/// bound, per step, the tangent of the image half-angle: factor
/// `‖A|off-center‖ / m(A|center)` with the center itself pushed forward.
/// Everything is tracked in log space, so arbitrarily long squeezes
/// never underflow.
pub fn kone_contraction_probe(
    chain: &[Matrix],
    center: &Subspace,
    delta: f64,
    epsilon: f64,
) -> Result<KoneProbe, CocycleError> {
    assert!(delta > 0.0 && delta < core::f64::consts::FRAC_PI_2);
    assert!(epsilon > 0.0 && epsilon < delta, "target must tighten the cone");
    let r = center.dim();
    let mut s = center.clone();
    let mut log_tan = math::ln(math::tan(delta));
    let target = math::ln(math::tan(epsilon));
    let mut factors = Vec::with_capacity(chain.len());
    let mut log_tan_by_step = Vec::with_capacity(chain.len());
    let mut steps_to_target = None;

    for (t, a) in chain.iter().enumerate() {
        let off = s.orthogonal_complement();
        let grow = linalg::norm_restricted(a, off.basis());
        let shrink = linalg::conorm_restricted(a, s.basis());
        if shrink <= 1e-300 {
            return Err(CocycleError::RankCollapse { depth: t + 1 });
        }
        factors.push(grow / shrink);
        log_tan += math::ln(grow) - math::ln(shrink);
        log_tan_by_step.push(log_tan);
        if steps_to_target.is_none() && log_tan <= target {
            steps_to_target = Some(t + 1);
        }
        s = s.map_through(a, 1e-12);
        if s.dim() < r {
            return Err(CocycleError::RankCollapse { depth: t + 1 });
        }
    }
    Ok(KoneProbe { factors, log_tan_by_step, steps_to_target })
}
