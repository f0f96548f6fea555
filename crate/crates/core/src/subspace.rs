//! Subspaces of ℝᵈ and the angle/distance geometry used by splitting
//! certificates.
//!
//! The *angle* between two subspaces is the minimum angle over nonzero
//! vector pairs, `∠(V, W) ∈ [0, π/2]`; it vanishes exactly when the
//! subspaces intersect nontrivially, which is why it is the right gauge
//! for transversality. The *distance* between equal-dimensional
//! subspaces is `dist(V, W) = cos ∠(V⊥, W)` — equivalently the sine of
//! the largest principal angle — a genuine metric on each Grassmannian.

use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{self, Vec4};
use crate::math;

/// Errors from subspace construction and comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum SubspaceError {
    /// Spanning set collapsed to a lower dimension than requested.
    RankDeficient { requested: usize, got: usize },
    /// Operation needs equal dimensions (e.g. the Grassmannian metric).
    DimensionMismatch { left: usize, right: usize },
    /// Operation on the trivial (zero) subspace.
    Trivial,
}

impl fmt::Display for SubspaceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubspaceError::RankDeficient { requested, got } => {
                write!(f, "spanning set has rank {got}, expected {requested}")
            }
            SubspaceError::DimensionMismatch { left, right } => {
                write!(f, "subspace dimensions differ: {left} vs {right}")
            }
            SubspaceError::Trivial => write!(f, "operation undefined on the zero subspace"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SubspaceError {}

/// A linear subspace of ℝ^`ambient`, stored as an orthonormal basis.
#[derive(Clone, PartialEq)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<Vec4>,
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subspace(dim {} in R^{})[", self.dim(), self.ambient)?;
        for (i, b) in self.basis.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            for c in 0..self.ambient {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:.6}", b[c])?;
            }
        }
        write!(f, "]")
    }
}

impl Subspace {
    /// Build from a spanning set via Gram–Schmidt; vectors contributing
    /// less than `tol` of independent mass are dropped.
    pub fn from_spanning(ambient: usize, spanning: &[Vec4], tol: f64) -> Self {
        let mut basis: Vec<Vec4> = Vec::new();
        for v in spanning {
            let mut w = *v;
            for b in &basis {
                let p = linalg::dot(ambient, &w, b);
                w = linalg::axpy(ambient, &w, -p, b);
            }
            // Second orthogonalization pass for numerical hygiene.
            for b in &basis {
                let p = linalg::dot(ambient, &w, b);
                w = linalg::axpy(ambient, &w, -p, b);
            }
            if linalg::normalize(ambient, &mut w) > tol {
                basis.push(w);
            }
        }
        Subspace { ambient, basis }
    }

    /// Build from a single direction (a line).
    pub fn line(ambient: usize, v: &Vec4) -> Self {
        Subspace::from_spanning(ambient, core::slice::from_ref(v), 1e-300)
    }

    /// Build from vectors that are already orthonormal (debug-checked).
    pub fn from_orthonormal(ambient: usize, basis: Vec<Vec4>) -> Self {
        #[cfg(debug_assertions)]
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                debug_assert!(
                    math::abs(linalg::dot(ambient, a, b) - expect) < 1e-8,
                    "basis is not orthonormal"
                );
            }
        }
        Subspace { ambient, basis }
    }

    /// The full space ℝᵈ.
    pub fn full(ambient: usize) -> Self {
        let basis = (0..ambient)
            .map(|i| {
                let mut e = [0.0; 4];
                e[i] = 1.0;
                e
            })
            .collect();
        Subspace { ambient, basis }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec4] {
        &self.basis
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &Vec4) -> Vec4 {
        let mut out = [0.0; 4];
        for b in &self.basis {
            let p = linalg::dot(self.ambient, v, b);
            out = linalg::axpy(self.ambient, &out, p, b);
        }
        out
    }

    /// Distance from a unit vector to the subspace (norm of the
    /// projection residual).
    pub fn residual_norm(&self, v: &Vec4) -> f64 {
        let p = self.project(v);
        let mut r = [0.0; 4];
        for i in 0..self.ambient {
            r[i] = v[i] - p[i];
        }
        linalg::norm(self.ambient, &r)
    }

    /// Orthogonal complement, via completion of the basis.
    pub fn orthogonal_complement(&self) -> Subspace {
        let mut ext: Vec<Vec4> = Vec::new();
        for e in 0..self.ambient {
            let mut cand = [0.0; 4];
            cand[e] = 1.0;
            for b in self.basis.iter().chain(ext.iter()) {
                let p = linalg::dot(self.ambient, &cand, b);
                cand = linalg::axpy(self.ambient, &cand, -p, b);
            }
            for b in self.basis.iter().chain(ext.iter()) {
                let p = linalg::dot(self.ambient, &cand, b);
                cand = linalg::axpy(self.ambient, &cand, -p, b);
            }
            if linalg::normalize(self.ambient, &mut cand) > 1e-8 {
                ext.push(cand);
            }
        }
        debug_assert_eq!(ext.len(), self.ambient - self.dim());
        Subspace { ambient: self.ambient, basis: ext }
    }

    /// Image under a matrix, re-orthonormalized; directions whose image
    /// norm falls below `tol` (relative to the largest) are dropped.
    pub fn map_through(&self, m: &linalg::Matrix, tol: f64) -> Subspace {
        let imgs: Vec<Vec4> = self.basis.iter().map(|b| m.apply(b)).collect();
        let scale = imgs.iter().map(|v| linalg::norm(self.ambient, v)).fold(0.0, f64::max);
        if scale == 0.0 {
            return Subspace { ambient: self.ambient, basis: Vec::new() };
        }
        let scaled: Vec<Vec4> = imgs.iter().map(|v| v.map(|x| x / scale)).collect();
        Subspace::from_spanning(self.ambient, &scaled, tol)
    }
}

/// Cosines of the principal angles between `V` and `W`, descending
/// (these are the singular values of `B_Vᵀ B_W`).
fn principal_cosines(v: &Subspace, w: &Subspace) -> Vec<f64> {
    // Gram matrix of cross inner products, embedded as a square matrix
    // of size max(dim V, dim W) padded with zero rows/columns; the
    // nonzero singular values are unaffected by the padding.
    let r = v.dim().max(w.dim());
    let mut cols: Vec<Vec4> = alloc::vec![[0.0; 4]; w.dim()];
    for (c, bw) in w.basis().iter().enumerate() {
        for (rr, bv) in v.basis().iter().enumerate() {
            cols[c][rr] = linalg::dot(v.ambient(), bv, bw);
        }
    }
    let mut sv = linalg::singular_values_of_columns(r, &cols);
    sv.reverse(); // descending: largest cosine (smallest angle) first
    sv.iter().map(|&s| s.clamp(0.0, 1.0)).collect()
}

/// Minimal angle between two nonzero subspaces, in `[0, π/2]`:
/// the min over nonzero `v ∈ V`, `w ∈ W` of the angle between vectors.
/// Zero iff the subspaces intersect nontrivially.
pub fn angle_between(v: &Subspace, w: &Subspace) -> Result<f64, SubspaceError> {
    if v.dim() == 0 || w.dim() == 0 {
        return Err(SubspaceError::Trivial);
    }
    if v.ambient() != w.ambient() {
        return Err(SubspaceError::DimensionMismatch { left: v.ambient(), right: w.ambient() });
    }
    let cos_max = principal_cosines(v, w)[0];
    Ok(math::acos(cos_max))
}

/// Largest principal angle between two subspaces of equal dimension
/// (how far W tilts from V in the worst direction).
pub fn largest_principal_angle(v: &Subspace, w: &Subspace) -> Result<f64, SubspaceError> {
    if v.dim() == 0 || w.dim() == 0 {
        return Err(SubspaceError::Trivial);
    }
    if v.dim() != w.dim() {
        return Err(SubspaceError::DimensionMismatch { left: v.dim(), right: w.dim() });
    }
    let cosines = principal_cosines(v, w);
    let cos_min = cosines[v.dim() - 1];
    Ok(math::acos(cos_min))
}

/// Grassmannian distance `dist(V, W) = cos ∠(V⊥, W)` between subspaces
/// of the same dimension. Symmetric, satisfies the triangle inequality,
/// and equals the sine of the largest principal angle.
pub fn grassmann_distance(v: &Subspace, w: &Subspace) -> Result<f64, SubspaceError> {
    if v.ambient() != w.ambient() {
        return Err(SubspaceError::DimensionMismatch { left: v.ambient(), right: w.ambient() });
    }
    if v.dim() != w.dim() {
        return Err(SubspaceError::DimensionMismatch { left: v.dim(), right: w.dim() });
    }
    if v.dim() == 0 {
        return Err(SubspaceError::Trivial);
    }
    if v.dim() == v.ambient() {
        // Both are the full space; the complement is trivial and the
        // distance is zero.
        return Ok(0.0);
    }
    let vperp = v.orthogonal_complement();
    let cos_max = principal_cosines(&vperp, w)[0];
    Ok(cos_max)
}

/// Convergence report for a subspace sequence: consecutive Grassmannian
/// distances, a least-squares geometric-rate fit on the nonzero tail,
/// and decay-shape flags.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CauchyReport {
    /// `d_n = dist(S_n, S_{n+1})` for consecutive members.
    pub distances: Vec<f64>,
    /// Fitted rate λ̂ of `d_n ≈ c · λ̂ⁿ` (None when every distance is
    /// below the fit floor — already converged — or fewer than two
    /// usable points exist).
    pub lambda_hat: Option<f64>,
    /// Fitted prefactor c of the geometric model.
    pub c_hat: Option<f64>,
    /// True when the final distance is below the caller's tolerance.
    pub converged: bool,
    /// True when the sequence decays but at a rate fitted ≥ 0.9 —
    /// sub-geometric behavior such as `d_n ~ 1/n`.
    pub sub_geometric: bool,
    /// Fraction of distances violating `d_n ≤ (1 + tol_frac) · c·λ̂ⁿ`
    /// at 10% tolerance (0 when no fit was possible).
    pub outlier_fraction: f64,
}

/// Distances below this floor are treated as "already converged" and
/// excluded from the geometric fit.
pub const FIT_FLOOR: f64 = 1e-14;

/// Analyze a sequence of subspaces for Cauchy behavior: consecutive
/// Grassmannian distances plus a geometric fit `d_n ≈ c·λ̂ⁿ` via least
/// squares on `log d_n`. `tol` is the convergence gauge applied to the
/// final distance.
pub fn subspace_limit(seq: &[Subspace], tol: f64) -> Result<CauchyReport, SubspaceError> {
    if seq.len() < 2 {
        return Err(SubspaceError::Trivial);
    }
    let mut distances = Vec::with_capacity(seq.len() - 1);
    for pair in seq.windows(2) {
        distances.push(grassmann_distance(&pair[0], &pair[1])?);
    }

    // Least squares on (n, log d_n) over usable entries.
    let pts: Vec<(f64, f64)> = distances
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > FIT_FLOOR)
        .map(|(n, &d)| (n as f64, math::ln(d)))
        .collect();
    let (lambda_hat, c_hat) = fit_log_line(&pts);

    let converged = *distances.last().expect("nonempty") <= tol;
    let sub_geometric = match lambda_hat {
        Some(l) => l >= 0.9 && !distances.is_empty(),
        None => false,
    };
    let outlier_fraction = match (lambda_hat, c_hat) {
        (Some(l), Some(c)) if l > 0.0 => {
            let mut bad = 0usize;
            for (n, &d) in distances.iter().enumerate() {
                let model = c * math::powi(l, n as i32);
                if d > model * 1.10 + FIT_FLOOR {
                    bad += 1;
                }
            }
            bad as f64 / distances.len() as f64
        }
        _ => 0.0,
    };

    Ok(CauchyReport { distances, lambda_hat, c_hat, converged, sub_geometric, outlier_fraction })
}

/// Least-squares fit of `y = ln c + x · ln λ`; returns `(λ, c)`.
/// `None` with fewer than two points.
pub(crate) fn fit_log_line(pts: &[(f64, f64)]) -> (Option<f64>, Option<f64>) {
    if pts.len() < 2 {
        return (None, None);
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if math::abs(denom) < 1e-30 {
        return (None, None);
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    (Some(math::exp(slope)), Some(math::exp(intercept)))
}
