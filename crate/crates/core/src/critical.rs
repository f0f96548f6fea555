//! Behavior of splittings near the critical region.
//!
//! Close to a rank-dropping point the singular structure of a single
//! Jacobian pins the splitting: the weak singular directions `V` trap
//! the contracted bundle on the domain side while the strong image
//! directions trap its complement on the image side. This module
//! measures that sandwich ([`vw_cone_sandwich`]), extracts the largest
//! contraction threshold the trap certifies ([`near_critical_bounds`]),
//! and verifies the contrapositive — orbits whose weak restriction is
//! never dominated must stay clear of the critical neighborhood
//! ([`nondomination_avoids_u`]).

use alloc::vec::Vec;
use core::fmt;

use crate::cocycle::{singular_splitting_vw, CocycleError};
use crate::cone::Cone;
use crate::linalg::{self, Matrix};
use crate::subspace::{largest_principal_angle, Subspace, SubspaceError};
use crate::torus::{CriticalScan, OrbitSegment};

/// Errors from near-critical measurements.
#[derive(Debug, Clone, PartialEq)]
pub enum CriticalError {
    /// The non-domination hypothesis `‖Df^j|E‖ ≥ ½·m(Df^j|F)` failed,
    /// first at this window length.
    PreconditionFailed { first_j: usize, ratio: f64 },
    /// A pushed subspace lost rank, so an image angle is undefined.
    RankCollapse,
    /// The requested window leaves the recorded orbit.
    WindowOutOfRange,
    Chain(CocycleError),
    Subspace(SubspaceError),
}

impl fmt::Display for CriticalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriticalError::PreconditionFailed { first_j, ratio } => {
                write!(f, "weak restriction dominated at window length {first_j}: ratio {ratio}")
            }
            CriticalError::RankCollapse => write!(f, "image subspace lost rank"),
            CriticalError::WindowOutOfRange => write!(f, "window leaves the recorded orbit"),
            CriticalError::Chain(e) => write!(f, "singular split failure: {e}"),
            CriticalError::Subspace(e) => write!(f, "subspace failure: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CriticalError {}

impl From<CocycleError> for CriticalError {
    fn from(e: CocycleError) -> Self {
        CriticalError::Chain(e)
    }
}

impl From<SubspaceError> for CriticalError {
    fn from(e: SubspaceError) -> Self {
        CriticalError::Subspace(e)
    }
}

// ───────────────────────────── sandwich ─────────────────────────────

/// How tightly a candidate pair `(E, F)` is pinned by the singular
/// structure of one Jacobian.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SandwichReport {
    /// Largest principal angle between `E` and the weak singular
    /// subspace `V`.
    pub e_to_v_angle: f64,
    /// Largest principal angle between `Df·F` and `Df·W` — the image
    /// side of the trap.
    pub f_image_angle: f64,
    /// Relative singular gap of the Jacobian at the splitting index.
    pub relative_gap: f64,
    /// `e_to_v_angle ≤ η`.
    pub e_inside: bool,
    /// `f_image_angle ≤ η`.
    pub f_inside: bool,
}

/// Measure the two-sided trap at one Jacobian: `E` against the weak
/// singular directions on the domain side, `Df·F` against the strong
/// singular images on the image side, both at tolerance `eta`.
///
/// Near a rank drop the image-side angle collapses like the weak
/// singular value itself: whatever tilt `F` carries, its image is
/// squeezed onto the strong image directions.
pub fn vw_cone_sandwich(
    df: &Matrix,
    kappa: usize,
    e: &Subspace,
    f: &Subspace,
    eta: f64,
) -> Result<SandwichReport, CriticalError> {
    let split = singular_splitting_vw(df, kappa)?;
    let e_to_v_angle = largest_principal_angle(e, &split.v)?;

    let df_f = f.map_through(df, 1e-12);
    let df_w = split.w.map_through(df, 1e-12);
    if df_f.dim() < f.dim() || df_w.dim() < split.w.dim() {
        return Err(CriticalError::RankCollapse);
    }
    let f_image_angle = largest_principal_angle(&df_f, &df_w)?;

    Ok(SandwichReport {
        e_to_v_angle,
        f_image_angle,
        relative_gap: split.relative_gap,
        e_inside: e_to_v_angle <= eta + 1e-12,
        f_inside: f_image_angle <= eta + 1e-12,
    })
}

// ───────────────────────── contraction threshold ─────────────────────────

/// The contraction threshold a near-critical Jacobian certifies.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct NearCriticalReport {
    /// `a = ‖Df|E‖` — how hard the weak bundle is squeezed.
    pub weak_norm: f64,
    /// `b = min ‖Df v‖` over sampled unit directions of the dual cone.
    pub dual_floor: f64,
    /// Largest ρ with `a < ρ ≤ b/2`; zero when no such ρ exists.
    pub rho_star: f64,
    /// True when the threshold interval is nonempty.
    pub feasible: bool,
    /// Number of dual-cone directions sampled for the floor.
    pub samples: usize,
}

/// Largest contraction threshold separating the weak restriction from
/// everything transversal: directions in the dual of the weak cone
/// retain at least `b = min ‖Df v‖`, so any ρ in `(a, b/2]` certifies
/// that `E` contracts strictly below half the transversal floor.
///
/// The feasible set is the interval `(a, b/2]`; its top end is the
/// answer whenever the interval is nonempty, so no search is needed.
/// The dual-cone sample set includes exact boundary tilts, where the
/// floor is attained.
pub fn near_critical_bounds(
    df: &Matrix,
    e: &Subspace,
    weak_cone: &Cone,
    seed: u64,
    samples: usize,
) -> NearCriticalReport {
    let d = df.dim();
    let weak_norm = linalg::norm_restricted(df, e.basis());
    let dual = weak_cone.dual();
    let mut dual_floor = f64::INFINITY;
    for v in dual.sample_directions(seed, samples) {
        dual_floor = dual_floor.min(linalg::norm(d, &df.apply(&v)));
    }
    let feasible = weak_norm < 0.5 * dual_floor;
    NearCriticalReport {
        weak_norm,
        dual_floor,
        rho_star: if feasible { 0.5 * dual_floor } else { 0.0 },
        feasible,
        samples,
    }
}

// ───────────────────────── avoidance of the region ─────────────────────────

/// Verdict of the non-domination ⇒ avoidance check along one orbit
/// window.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AvoidanceReport {
    /// `‖Df^j|E‖ / m(Df^j|F)` for `j = 1..=l` (∞ when `F` collapses).
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
    /// Distance of each window point to the scanned critical samples.
    pub distances: Vec<f64>,
    pub min_distance: f64,
    /// All window points stayed further than the radius from the
    /// critical samples.
    pub avoided: bool,
    /// First orbit index inside the critical neighborhood, if any.
    pub first_violation: Option<i64>,
}

/// Check the contrapositive of the near-critical trap: when the weak
/// restriction along `E` is never dominated by the transversal floor
/// along `F` (ratio stays ≥ ½ for every window length up to `l`), the
/// orbit points `x_i, …, x_{i+l−1}` must keep their distance from the
/// critical region.
///
/// The hypothesis is checked first and a failure is an error, not a
/// finding — without it the avoidance claim says nothing. The distance
/// side is an honest measurement either way: a configuration that
/// passes the hypothesis vacuously (say, with the roles of the bundles
/// swapped) can still enter the region, and the report will say so.
pub fn nondomination_avoids_u(
    orbit: &OrbitSegment,
    i: i64,
    l: usize,
    e: &Subspace,
    f: &Subspace,
    scan: &CriticalScan,
    radius: f64,
) -> Result<AvoidanceReport, CriticalError> {
    assert!(l >= 1, "empty window");
    if !orbit.has_chain(i, l) {
        return Err(CriticalError::WindowOutOfRange);
    }
    let d = orbit.dim();

    let mut product = Matrix::identity(d);
    let mut ratios = Vec::with_capacity(l);
    for j in 1..=l {
        product = orbit.jacobian(i + j as i64 - 1).mul(&product);
        let a = linalg::norm_restricted(&product, e.basis());
        let b = linalg::conorm_restricted(&product, f.basis());
        let ratio = if b == 0.0 { f64::INFINITY } else { a / b };
        if ratio < 0.5 * (1.0 - 1e-12) {
            return Err(CriticalError::PreconditionFailed { first_j: j, ratio });
        }
        ratios.push(ratio);
    }
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);

    let mut distances = Vec::with_capacity(l);
    let mut first_violation = None;
    for j in 0..l {
        let idx = i + j as i64;
        let dist = scan.distance_to_samples(d, orbit.point(idx));
        if dist <= radius && first_violation.is_none() {
            first_violation = Some(idx);
        }
        distances.push(dist);
    }
    let min_distance = distances.iter().copied().fold(f64::INFINITY, f64::min);

    Ok(AvoidanceReport {
        ratios,
        min_ratio,
        distances,
        min_distance,
        avoided: first_violation.is_none(),
        first_violation,
    })
}
