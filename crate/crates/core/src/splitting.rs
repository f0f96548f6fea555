//! Candidate splittings along orbit segments and the checks that turn
//! them into a domination certificate.
//!
//! The construction is the return-time recipe: at an index `i` whose
//! orbit has a critical hit `τ⁺` steps ahead and another at least `m_f`
//! steps behind,
//!
//! * `E_i` = numerical kernel of the forward window `[i, i + m_f + τ⁺)`,
//! * `F_i` = numerical image of the backward window `[i + τ⁻, i)`,
//!
//! each required to have the expected dimension (κ and d − κ). The
//! family then faces three independent checks — invariance defects under
//! the step matrices, transversality angles, and the ℓ-step norm/conorm
//! ratio `‖Dfℓ|E‖ ≤ factor · m(Dfℓ|F)` — and the combined verdict is a
//! [`DominationCertificate`]. Linear models with no critical points get
//! their families from [`axes_splitting`], [`eigen_splitting_2d`], or
//! the cone-limit construction instead.

use alloc::vec::Vec;
use core::fmt;

use crate::cocycle::{self, CocycleError, CocycleSegment, ELimitReport, FBackwardReport};
use crate::cone::{Cone, ConeError};
use crate::linalg::{self, Vec4};
use crate::math;
use crate::subspace::{self, Subspace, SubspaceError};

/// Errors from splitting construction and certification.
#[derive(Debug, Clone, PartialEq)]
pub enum SplittingError {
    /// No critical hit on the required side of the index.
    NoReturn { index: i64 },
    /// The forward-window kernel did not have dimension κ.
    KernelDimension { index: i64, expected: usize, got: usize },
    /// The backward-window image did not have dimension d − κ.
    ImageDimension { index: i64, expected: usize, got: usize },
    /// No index of the family admits the requested check window.
    EmptyFamily,
    Chain(CocycleError),
    Subspace(SubspaceError),
    Cone(ConeError),
}

impl fmt::Display for SplittingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplittingError::NoReturn { index } => {
                write!(f, "no critical return on the required side of index {index}")
            }
            SplittingError::KernelDimension { index, expected, got } => {
                write!(f, "kernel at index {index}: expected dim {expected}, got {got}")
            }
            SplittingError::ImageDimension { index, expected, got } => {
                write!(f, "image at index {index}: expected dim {expected}, got {got}")
            }
            SplittingError::EmptyFamily => write!(f, "no usable indices in the family"),
            SplittingError::Chain(e) => write!(f, "chain analysis failure: {e}"),
            SplittingError::Subspace(e) => write!(f, "subspace failure: {e}"),
            SplittingError::Cone(e) => write!(f, "cone failure: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SplittingError {}

impl From<CocycleError> for SplittingError {
    fn from(e: CocycleError) -> Self {
        SplittingError::Chain(e)
    }
}

impl From<SubspaceError> for SplittingError {
    fn from(e: SubspaceError) -> Self {
        SplittingError::Subspace(e)
    }
}

impl From<ConeError> for SplittingError {
    fn from(e: ConeError) -> Self {
        SplittingError::Cone(e)
    }
}

// ───────────────────────────── return times ─────────────────────────────

/// Forward and backward critical return times at one index: the hit at
/// `i + tau_plus` (with `tau_plus ≥ 0`) and the hit at `i + tau_minus`
/// (with `tau_minus ≤ −m_f`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReturnTimes {
    pub tau_plus: i64,
    pub tau_minus: i64,
}

/// Return times of index `i` against a sorted list of hit indices;
/// `None` when either side has no qualifying hit.
pub fn return_times(hits: &[i64], m_f: usize, i: i64) -> Option<ReturnTimes> {
    let tau_plus = hits.iter().filter(|&&h| h >= i).map(|&h| h - i).min()?;
    let tau_minus = hits
        .iter()
        .filter(|&&h| h - i <= -(m_f as i64))
        .map(|&h| h - i)
        .max()?;
    Some(ReturnTimes { tau_plus, tau_minus })
}

// ───────────────────────────── candidates ─────────────────────────────

/// The candidate pair at one index.
#[derive(Debug, Clone)]
pub struct CandidateSplit {
    pub e: Subspace,
    pub f: Subspace,
    pub tau: ReturnTimes,
    /// Smallest angle between `E` and `F` (zero would mean overlap).
    pub angle: f64,
}

/// Build the return-time candidate at index `i`: kernel of the forward
/// window through the next hit, image of the backward window from the
/// previous hit. `kernel_tol` is the relative threshold (against the
/// window's norm scale) that decides numerical rank; near-critical
/// passages crush directions without annihilating them exactly, so this
/// is deliberately a configuration knob rather than machine epsilon.
pub fn candidate_splitting(
    seg: &CocycleSegment,
    i: i64,
    hits: &[i64],
    m_f: usize,
    kappa: usize,
    kernel_tol: f64,
) -> Result<CandidateSplit, SplittingError> {
    let d = seg.dim();
    assert!(kappa >= 1 && kappa < d, "index must split the dimension");
    let tau = return_times(hits, m_f, i).ok_or(SplittingError::NoReturn { index: i })?;

    // E: numerical kernel of the forward window [i, i + m_f + τ⁺).
    let fwd_len = (m_f as i64 + tau.tau_plus) as usize;
    let fwd = seg.window_svd(i, fwd_len)?;
    let fwd_scale = seg.window_log_scale(i, fwd_len)?;
    let kdim = fwd.kernel_dim_vs_scale(fwd_scale, kernel_tol);
    if kdim != kappa {
        return Err(SplittingError::KernelDimension { index: i, expected: kappa, got: kdim });
    }
    let e = Subspace::from_orthonormal(d, fwd.domain_cols(0, kappa));

    // F: numerical image of the backward window [i + τ⁻, i).
    let bwd_len = (-tau.tau_minus) as usize;
    let bwd = seg.window_svd(i + tau.tau_minus, bwd_len)?;
    let bwd_scale = seg.window_log_scale(i + tau.tau_minus, bwd_len)?;
    let dead = bwd.kernel_dim_vs_scale(bwd_scale, kernel_tol);
    let rank = d - dead;
    if rank != d - kappa {
        return Err(SplittingError::ImageDimension { index: i, expected: d - kappa, got: rank });
    }
    let f = Subspace::from_orthonormal(d, (dead..d).map(|c| bwd.codomain.col(c)).collect());

    let angle = subspace::angle_between(&e, &f)?;
    Ok(CandidateSplit { e, f, tau, angle })
}

/// A family of candidate pairs over a set of certified indices.
#[derive(Debug, Clone)]
pub struct SplittingFamily {
    pub indices: Vec<i64>,
    pub e: Vec<Subspace>,
    pub f: Vec<Subspace>,
}

impl SplittingFamily {
    pub fn new() -> Self {
        SplittingFamily { indices: Vec::new(), e: Vec::new(), f: Vec::new() }
    }

    pub fn push(&mut self, index: i64, e: Subspace, f: Subspace) {
        debug_assert!(self.indices.last().is_none_or(|&last| last < index));
        self.indices.push(index);
        self.e.push(e);
        self.f.push(f);
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Position of an index inside the family.
    fn slot(&self, index: i64) -> Option<usize> {
        self.indices.binary_search(&index).ok()
    }

    pub fn get(&self, index: i64) -> Option<(&Subspace, &Subspace)> {
        let s = self.slot(index)?;
        Some((&self.e[s], &self.f[s]))
    }
}

impl Default for SplittingFamily {
    fn default() -> Self {
        Self::new()
    }
}

/// Run [`candidate_splitting`] over every index where both windows fit
/// inside the segment, collecting the successes as a family and the
/// failures verbatim (an index with no qualifying return is skipped
/// silently — that is the expected boundary behavior, not a failure).
pub fn build_family(
    seg: &CocycleSegment,
    hits: &[i64],
    m_f: usize,
    kappa: usize,
    kernel_tol: f64,
) -> (SplittingFamily, Vec<(i64, SplittingError)>) {
    let mut family = SplittingFamily::new();
    let mut failures = Vec::new();
    for i in seg.lo()..=seg.hi() {
        let Some(tau) = return_times(hits, m_f, i) else { continue };
        let fwd_len = (m_f as i64 + tau.tau_plus) as usize;
        let bwd_len = (-tau.tau_minus) as usize;
        if !seg.has_window(i, fwd_len) || !seg.has_window(i + tau.tau_minus, bwd_len) {
            continue;
        }
        match candidate_splitting(seg, i, hits, m_f, kappa, kernel_tol) {
            Ok(c) => family.push(i, c.e, c.f),
            Err(e) => failures.push((i, e)),
        }
    }
    (family, failures)
}

// ───────────────────────────── the three checks ─────────────────────────────

/// Worst-case invariance defects of a family under the step matrices.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct InvarianceReport {
    /// Largest sine of the angle between `A_i(E_i)` and `E_{i+1}`
    /// (directions annihilated by `A_i` count as perfectly invariant).
    pub e_defect: f64,
    /// Largest Grassmann distance between `A_i(F_i)` and `F_{i+1}`.
    pub f_defect: f64,
    /// How many consecutive index pairs were available to check.
    pub pairs: usize,
}

/// Check `Df(E_i) ⊆ E_{i+1}` and `Df(F_i) = F_{i+1}` over every pair of
/// consecutive certified indices.
pub fn check_invariance(
    seg: &CocycleSegment,
    family: &SplittingFamily,
) -> Result<InvarianceReport, SplittingError> {
    let mut e_defect = 0.0f64;
    let mut f_defect = 0.0f64;
    let mut pairs = 0usize;
    for w in family.indices.windows(2) {
        let (i, j) = (w[0], w[1]);
        if j != i + 1 || !seg.has_window(i, 1) {
            continue;
        }
        let a = seg.matrix(i);
        let (e_i, f_i) = family.get(i).expect("index from the family");
        let (e_j, f_j) = family.get(j).expect("index from the family");
        // E: image direction of every basis vector must lie in E_{i+1}.
        let dead_scale = 1e-14 * a.op_norm();
        for v in e_i.basis() {
            let img = a.apply(v);
            let n = linalg::norm(seg.dim(), &img);
            if n <= dead_scale {
                continue; // annihilated ⇒ trivially inside
            }
            let defect = e_j.residual_norm(&img) / n;
            if defect > e_defect {
                e_defect = defect;
            }
        }
        // F: the pushed subspace must coincide with F_{i+1}.
        let pushed = f_i.map_through(a, 1e-12);
        let dist = if pushed.dim() == f_j.dim() {
            subspace::grassmann_distance(&pushed, f_j)?
        } else {
            1.0 // rank collapse on the strong side is a full defect
        };
        if dist > f_defect {
            f_defect = dist;
        }
        pairs += 1;
    }
    Ok(InvarianceReport { e_defect, f_defect, pairs })
}

/// Transversality angles of a family.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AngleReport {
    /// `min_i ∠(E_i, F_i)`.
    pub min_angle: f64,
    pub angles: Vec<f64>,
}

pub fn check_angle(family: &SplittingFamily) -> Result<AngleReport, SplittingError> {
    if family.is_empty() {
        return Err(SplittingError::EmptyFamily);
    }
    let mut angles = Vec::with_capacity(family.len());
    for s in 0..family.len() {
        angles.push(subspace::angle_between(&family.e[s], &family.f[s])?);
    }
    let min_angle = angles.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(AngleReport { min_angle, angles })
}

/// ℓ-step norm/conorm ratios of a family.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DominationReport {
    pub ell: usize,
    pub factor: f64,
    /// `(index, ‖Dfℓ|E_i‖ / m(Dfℓ|F_i))` for every index whose window
    /// fits the segment.
    pub ratios: Vec<(i64, f64)>,
    pub max_ratio: f64,
    /// True when at least one window was available and every ratio is
    /// ≤ `factor`.
    pub passes: bool,
}

/// The ℓ-step restricted norm over `E` against the restricted conorm
/// over `F`, computed by pushing both bases jointly with per-step
/// normalization: only the direction data accumulates, so the ratio is
/// exact even when the raw window product would overflow.
fn restricted_ratio(
    seg: &CocycleSegment,
    i: i64,
    ell: usize,
    e: &Subspace,
    f: &Subspace,
) -> Result<f64, SplittingError> {
    let d = seg.dim();
    let ne = e.dim();
    let mut cols: Vec<Vec4> = e.basis().iter().chain(f.basis().iter()).copied().collect();
    for j in 0..ell {
        let a = seg.matrix(i + j as i64);
        let mut peak = 0.0f64;
        for c in cols.iter_mut() {
            *c = a.apply(c);
            peak = peak.max(linalg::norm(d, c));
        }
        if peak == 0.0 {
            // The window annihilated everything, including F: treat as
            // an unbounded ratio so the check fails loudly.
            return Ok(f64::INFINITY);
        }
        for c in cols.iter_mut() {
            for k in 0..d {
                c[k] /= peak;
            }
        }
    }
    let e_sigmas = linalg::singular_values_of_columns(d, &cols[..ne]);
    let f_sigmas = linalg::singular_values_of_columns(d, &cols[ne..]);
    let e_top = e_sigmas.last().copied().unwrap_or(0.0);
    let f_bottom = f_sigmas.first().copied().unwrap_or(0.0);
    if f_bottom == 0.0 {
        // A collapsed strong side can never dominate anything.
        return Ok(f64::INFINITY);
    }
    Ok(e_top / f_bottom)
}

/// Check `‖Dfℓ|E_i‖ ≤ factor · m(Dfℓ|F_i)` over every certified index
/// whose ℓ-window fits inside the segment.
pub fn check_domination(
    seg: &CocycleSegment,
    family: &SplittingFamily,
    ell: usize,
    factor: f64,
) -> Result<DominationReport, SplittingError> {
    let mut ratios = Vec::new();
    for s in 0..family.len() {
        let i = family.indices[s];
        if !seg.has_window(i, ell) {
            continue;
        }
        let ratio = restricted_ratio(seg, i, ell, &family.e[s], &family.f[s])?;
        ratios.push((i, ratio));
    }
    let max_ratio = ratios.iter().map(|&(_, r)| r).fold(0.0f64, f64::max);
    let passes = !ratios.is_empty() && max_ratio <= factor;
    Ok(DominationReport { ell, factor, ratios, max_ratio, passes })
}

/// Smallest window length `ℓ ≤ ell_max` at which the whole family
/// passes the domination check, or `None` when no length works.
pub fn find_domination_time(
    seg: &CocycleSegment,
    family: &SplittingFamily,
    ell_max: usize,
    factor: f64,
) -> Result<Option<usize>, SplittingError> {
    for ell in 1..=ell_max {
        let report = check_domination(seg, family, ell, factor)?;
        if report.ratios.is_empty() {
            // Longer windows only lose more indices; stop searching.
            break;
        }
        if report.passes {
            return Ok(Some(ell));
        }
    }
    Ok(None)
}

/// Telescope a base window length: with a one-window overhead constant
/// `c0`, concatenating `n + 1` windows certifies the strict factor as
/// soon as `c0 · factorⁿ ≤ factor`. Returns `ell0 · (n + 1)` for the
/// smallest such `n ≥ 0`; `c0 ≤ factor` needs no telescoping at all.
pub fn telescoped_ell(ell0: usize, c0: f64, factor: f64) -> usize {
    assert!(ell0 >= 1);
    assert!(c0 > 0.0 && factor > 0.0 && factor < 1.0);
    let mut n = 0usize;
    let mut bound = c0;
    while bound > factor && n < 10_000 {
        bound *= factor;
        n += 1;
    }
    ell0 * (n + 1)
}

// ───────────────────────────── uniqueness probe ─────────────────────────────

/// Numerical evidence that the dominated splitting is unique: seeded
/// random strong-side candidates forget their start under forward
/// pushing, and the weak side is stable across window lengths.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct UniquenessProbe {
    /// Largest pairwise Grassmann distance among the pushed strong
    /// candidates at the final index.
    pub f_spread: f64,
    /// Largest pairwise distance among the weak subspaces taken from
    /// the longer half of the window range.
    pub e_spread: f64,
    /// How many random strong candidates survived the push.
    pub trials: usize,
    pub passes: bool,
}

/// Push `trials` seeded random (d−κ)-dimensional subspaces through
/// `[i_from, i_to)` and compare; study `E_n` stability over
/// `n = n_max/2 … n_max` windows at `i_from`. Both spreads must fall
/// below `tol`.
pub fn uniqueness_probe(
    seg: &CocycleSegment,
    i_from: i64,
    i_to: i64,
    kappa: usize,
    seed: u64,
    trials: usize,
    tol: f64,
) -> Result<UniquenessProbe, SplittingError> {
    let d = seg.dim();
    let r = d - kappa;
    assert!(i_to > i_from);
    let len = (i_to - i_from) as usize;
    if !seg.has_window(i_from, len) {
        return Err(SplittingError::Chain(CocycleError::WindowOutOfRange {
            index: i_from,
            len,
        }));
    }

    // Strong side: random starts, same chain, compare the ends.
    let mut survivors: Vec<Subspace> = Vec::new();
    let draws = crate::sampling::unit_vectors(seed, d, trials * r * 2);
    let mut cursor = 0usize;
    while survivors.len() < trials && cursor + r <= draws.len() {
        let mut spanning = Vec::with_capacity(r);
        for k in 0..r {
            let mut v = [0.0; 4];
            v[..d].copy_from_slice(&draws[cursor + k][..d]);
            spanning.push(v);
        }
        cursor += r;
        let s = Subspace::from_spanning(d, &spanning, 1e-8);
        if s.dim() != r {
            continue; // degenerate draw
        }
        let mut pushed = s;
        let mut ok = true;
        for j in 0..len {
            pushed = pushed.map_through(seg.matrix(i_from + j as i64), 1e-12);
            if pushed.dim() != r {
                ok = false;
                break;
            }
        }
        if ok {
            survivors.push(pushed);
        }
    }
    let mut f_spread = 0.0f64;
    for a in 0..survivors.len() {
        for b in (a + 1)..survivors.len() {
            f_spread = f_spread.max(subspace::grassmann_distance(&survivors[a], &survivors[b])?);
        }
    }

    // Weak side: E_n across the longer half of the window lengths.
    let mut weak: Vec<Subspace> = Vec::new();
    let mut acc = linalg::ChainSvd::identity(d);
    for n in 1..=len {
        acc.push(seg.matrix(i_from + (n - 1) as i64));
        if n >= len / 2 + 1 {
            if let Ok(s) = cocycle::en_subspace(&acc, kappa) {
                weak.push(s);
            }
        }
    }
    let mut e_spread = 0.0f64;
    for a in 0..weak.len() {
        for b in (a + 1)..weak.len() {
            e_spread = e_spread.max(subspace::grassmann_distance(&weak[a], &weak[b])?);
        }
    }

    let passes = survivors.len() >= 2 && !weak.is_empty() && f_spread <= tol && e_spread <= tol;
    Ok(UniquenessProbe { f_spread, e_spread, trials: survivors.len(), passes })
}

// ───────────────────────── families for linear models ─────────────────────────

/// Coordinate-axes family: `E` = first κ axes, `F` = the rest. The
/// right family for diagonal models.
pub fn axes_splitting(dim: usize, kappa: usize) -> (Subspace, Subspace) {
    assert!(kappa >= 1 && kappa < dim);
    let mut e_basis = Vec::new();
    let mut f_basis = Vec::new();
    for k in 0..dim {
        let mut v = [0.0; 4];
        v[k] = 1.0;
        if k < kappa {
            e_basis.push(v);
        } else {
            f_basis.push(v);
        }
    }
    (Subspace::from_orthonormal(dim, e_basis), Subspace::from_orthonormal(dim, f_basis))
}

/// Eigendirection family of a 2×2 matrix with real distinct
/// eigenvalues: `E` along the eigenvalue of smaller magnitude, `F`
/// along the larger. `None` for complex or repeated spectra.
pub fn eigen_splitting_2d(m: &linalg::Matrix) -> Option<(Subspace, Subspace)> {
    assert_eq!(m.dim(), 2);
    let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    let tr = a + d;
    let det = a * d - b * c;
    let disc = tr * tr - 4.0 * det;
    if disc <= 1e-14 * (tr * tr + 4.0 * math::abs(det)) {
        return None;
    }
    let root = math::sqrt(disc);
    let l1 = 0.5 * (tr + root);
    let l2 = 0.5 * (tr - root);
    let eigvec = |l: f64| -> Vec4 {
        // Rows of (M − λI) are both orthogonal complements of the
        // eigenvector; pick the better-conditioned one.
        let r1 = [a - l, b, 0.0, 0.0];
        let r2 = [c, d - l, 0.0, 0.0];
        let (row, n) = if linalg::norm(2, &r1) >= linalg::norm(2, &r2) {
            (r1, linalg::norm(2, &r1))
        } else {
            (r2, linalg::norm(2, &r2))
        };
        if n == 0.0 {
            return [1.0, 0.0, 0.0, 0.0]; // scalar matrix: any direction
        }
        [-row[1] / n, row[0] / n, 0.0, 0.0]
    };
    let (weak, strong) =
        if math::abs(l1) <= math::abs(l2) { (l1, l2) } else { (l2, l1) };
    Some((
        Subspace::line(2, &eigvec(weak)),
        Subspace::line(2, &eigvec(strong)),
    ))
}

// ───────────────────────── cones around the strong family ─────────────────────────

/// Axial cones centered on each `F_i`, with half-angle half the local
/// transversality angle — wide enough to contain `F`, narrow enough to
/// exclude `E`.
pub fn splitting_to_cone(family: &SplittingFamily) -> Result<Vec<(i64, Cone)>, SplittingError> {
    let mut cones = Vec::with_capacity(family.len());
    for s in 0..family.len() {
        let angle = subspace::angle_between(&family.e[s], &family.f[s])?;
        let cone = Cone::new(family.f[s].clone(), 0.5 * angle)?;
        cones.push((family.indices[s], cone));
    }
    Ok(cones)
}

/// Splitting at one index via limits instead of return times: the weak
/// side from growing-window singular directions, the strong side by
/// pushing a cone center forward from depth. This is the construction
/// of choice for linear models, where no critical hits exist.
pub fn cone_limit_splitting(
    seg: &CocycleSegment,
    i: i64,
    kappa: usize,
    cone: &Cone,
    ell: usize,
    max_depth: usize,
    n_max: usize,
    tol: f64,
) -> Result<(CandidateSplit, ELimitReport, FBackwardReport), SplittingError> {
    let e_report = cocycle::e_limit(seg, i, kappa, n_max, tol)?;
    let f_report = cocycle::f_backward(seg, i, cone, ell, max_depth, tol)?;
    let e = e_report.limit.clone();
    let f = f_report.subspace.clone();
    let angle = subspace::angle_between(&e, &f)?;
    let split = CandidateSplit { e, f, tau: ReturnTimes { tau_plus: 0, tau_minus: 0 }, angle };
    Ok((split, e_report, f_report))
}

// ───────────────────────────── the certificate ─────────────────────────────

/// Combined verdict over a family: the three checks with their worst
/// numbers and the pass/fail gates actually applied.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DominationCertificate {
    pub kappa: usize,
    pub ell: usize,
    pub factor: f64,
    pub indices: Vec<i64>,
    pub min_angle: f64,
    pub e_defect: f64,
    pub f_defect: f64,
    pub max_ratio: f64,
    /// Number of ℓ-windows actually checked.
    pub windows: usize,
    pub domination_passes: bool,
    pub angle_ok: bool,
    pub invariance_ok: bool,
    /// All three gates together.
    pub passes: bool,
}

/// Run all three checks and gate them: ratios ≤ factor, minimum angle ≥
/// `min_angle_required`, defects ≤ `defect_tol`.
pub fn certify(
    seg: &CocycleSegment,
    family: &SplittingFamily,
    kappa: usize,
    ell: usize,
    factor: f64,
    min_angle_required: f64,
    defect_tol: f64,
) -> Result<DominationCertificate, SplittingError> {
    if family.is_empty() {
        return Err(SplittingError::EmptyFamily);
    }
    let invariance = check_invariance(seg, family)?;
    let angle = check_angle(family)?;
    let domination = check_domination(seg, family, ell, factor)?;
    let angle_ok = angle.min_angle >= min_angle_required;
    let invariance_ok =
        invariance.e_defect <= defect_tol && invariance.f_defect <= defect_tol;
    let passes = domination.passes && angle_ok && invariance_ok;
    Ok(DominationCertificate {
        kappa,
        ell,
        factor,
        indices: family.indices.clone(),
        min_angle: angle.min_angle,
        e_defect: invariance.e_defect,
        f_defect: invariance.f_defect,
        max_ratio: domination.max_ratio,
        windows: domination.ratios.len(),
        domination_passes: domination.passes,
        angle_ok,
        invariance_ok,
        passes,
    })
}
