//! Axially symmetric cones: a center subspace `C` plus a half angle `η`.
//!
//! The cone is `{u ≠ 0 : ∠(ℝu, C) ≤ η} ∪ {0}`. This single shape covers
//! both cone styles used by splitting arguments: a graph cone
//! `{‖u₂‖ ≤ δ‖u₁‖}` over a subspace equals the axial cone with that
//! subspace as center and half angle `arctan δ`, and the dual of the
//! axial cone `(C, η)` is the axial cone `(C⊥, π/2 − η)` — the closure
//! of the complement of the open cone.

use core::fmt;

use alloc::vec::Vec;

use crate::linalg::{self, Matrix, Vec4};
use crate::math;
use crate::sampling;
use crate::subspace::{self, Subspace};

/// Slack applied to boundary membership: `∠ ≤ η + BOUNDARY_TOL` counts
/// as inside, so exact-boundary vectors are members.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Errors from cone operations.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeError {
    /// Half angle must lie in (0, π/2).
    BadHalfAngle(f64),
    /// Cone center must be a proper nonzero subspace.
    BadCenter,
}

impl fmt::Display for ConeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeError::BadHalfAngle(h) => write!(f, "half angle {h} outside (0, pi/2)"),
            ConeError::BadCenter => write!(f, "cone center must be proper and nonzero"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ConeError {}

/// An axially symmetric cone around a center subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    center: Subspace,
    half_angle: f64,
}

impl Cone {
    /// New cone; the center must be a proper nonzero subspace and the
    /// half angle must lie strictly inside `(0, π/2)`.
    pub fn new(center: Subspace, half_angle: f64) -> Result<Self, ConeError> {
        if !(half_angle > 0.0 && half_angle < core::f64::consts::FRAC_PI_2) {
            return Err(ConeError::BadHalfAngle(half_angle));
        }
        if center.dim() == 0 || center.dim() == center.ambient() {
            return Err(ConeError::BadCenter);
        }
        Ok(Cone { center, half_angle })
    }

    pub fn center(&self) -> &Subspace {
        &self.center
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    /// Graph-form constructor: `{‖u_offaxis‖ ≤ δ · ‖u_axis‖}` becomes the
    /// axial cone with half angle `arctan δ`.
    pub fn from_graph_bound(center: Subspace, delta: f64) -> Result<Self, ConeError> {
        Cone::new(center, math::atan(delta))
    }

    /// Membership: angle from the line through `u` to the center is at
    /// most the half angle (boundary included up to [`BOUNDARY_TOL`]).
    pub fn contains(&self, u: &Vec4) -> bool {
        let d = self.center.ambient();
        let n = linalg::norm(d, u);
        if n == 0.0 {
            return true; // the tip belongs to every cone
        }
        let angle = self.angle_to_axis(u);
        angle <= self.half_angle + BOUNDARY_TOL
    }

    /// Angle between the line through `u` and the center subspace.
    pub fn angle_to_axis(&self, u: &Vec4) -> f64 {
        let d = self.center.ambient();
        let p = self.center.project(u);
        let cos = linalg::norm(d, &p) / linalg::norm(d, u);
        math::acos(cos.clamp(0.0, 1.0))
    }

    /// Dual cone: closure of the complement, `(C⊥, π/2 − η)`.
    pub fn dual(&self) -> Cone {
        Cone {
            center: self.center.orthogonal_complement(),
            half_angle: core::f64::consts::FRAC_PI_2 - self.half_angle,
        }
    }

    /// Whole-subspace membership: every direction of `s` lies in the
    /// cone, i.e. the largest tilt of `s` from the center stays ≤ η.
    pub fn contains_subspace(&self, s: &Subspace) -> bool {
        let worst = self.max_angle_of_subspace(s);
        worst <= self.half_angle + 1e-9
    }

    /// Largest angle between a direction of `s` and the center.
    pub fn max_angle_of_subspace(&self, s: &Subspace) -> f64 {
        // max over unit u ∈ s of ∠(ℝu, C) has cosine equal to the
        // smallest singular value of B_Cᵀ B_s.
        if s.dim() == 0 {
            return 0.0;
        }
        // When dim s exceeds dim C the cross-Gram is wide, its smallest
        // singular value is 0, and the angle is π/2 — correct, since s
        // must then meet C⊥.
        let amb = s.ambient();
        let mut cols: Vec<Vec4> = alloc::vec![[0.0; 4]; s.dim()];
        for (c, bs) in s.basis().iter().enumerate() {
            for (r, bc) in self.center.basis().iter().enumerate() {
                cols[c][r] = linalg::dot(amb, bc, bs);
            }
        }
        let k = s.dim().max(self.center.dim());
        let sv = linalg::singular_values_of_columns(k, &cols);
        let cos_min = sv.first().copied().unwrap_or(0.0).clamp(0.0, 1.0);
        math::acos(cos_min)
    }

    /// Deterministic sample of unit directions in the cone: a
    /// low-discrepancy lattice over (axis direction, off-axis direction,
    /// tilt), including exact-boundary tilts on every other sample.
    ///
    /// Samples are keyed by `seed`; identical seeds give identical sets.
    pub fn sample_directions(&self, seed: u64, count: usize) -> Vec<Vec4> {
        let d = self.center.ambient();
        let ax = self.center.basis();
        let off = self.center.orthogonal_complement();
        let axial = sampling::unit_vectors(seed ^ 0x51ed, ax.len(), count);
        let offax = sampling::unit_vectors(seed ^ 0xc0de, off.dim(), count);
        let tilts = sampling::kronecker(seed ^ 0x7117, count);
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            // Half the samples sit exactly on the boundary tilt; the rest
            // fill the interior.
            let tilt = if i % 2 == 0 { self.half_angle } else { self.half_angle * tilts[i] };
            let mut a = [0.0; 4];
            for (k, c) in axial[i].iter().enumerate() {
                a = linalg::axpy(d, &a, *c, &ax[k]);
            }
            let mut b = [0.0; 4];
            for (k, c) in offax[i].iter().enumerate() {
                b = linalg::axpy(d, &b, *c, &off.basis()[k]);
            }
            let mut u = [0.0; 4];
            let (ct, st) = (math::cos(tilt), math::sin(tilt));
            for j in 0..d {
                u[j] = ct * a[j] + st * b[j];
            }
            out.push(u);
        }
        out
    }
}

/// Report from a sampled cone-invariance check.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConeImageReport {
    /// All sampled images landed at least `margin` inside the target.
    pub ok: bool,
    /// `min over samples of (target half angle − image angle)`; positive
    /// means strict containment, ≥ margin means `ok`.
    pub worst_slack: f64,
    /// Number of sampled directions annihilated by the map (skipped).
    pub annihilated: usize,
}

/// Check `A(src) ⊆ target` with angular margin, by sampling directions
/// of `src` (boundary and interior) and measuring their images' angles
/// to the target axis. Directions sent to ~0 are skipped but counted.
pub fn cone_image_contained(
    a: &Matrix,
    src: &Cone,
    target: &Cone,
    margin: f64,
    seed: u64,
    count: usize,
) -> ConeImageReport {
    let d = a.dim();
    let mut worst_slack = f64::INFINITY;
    let mut annihilated = 0usize;
    for u in src.sample_directions(seed, count) {
        let img = a.apply(&u);
        if linalg::norm(d, &img) <= 1e-14 {
            annihilated += 1;
            continue;
        }
        let slack = target.half_angle() - target.angle_to_axis(&img);
        worst_slack = worst_slack.min(slack);
    }
    if worst_slack == f64::INFINITY {
        // Every sample died; nothing contradicts containment (the tip is
        // in every cone) but there is no positive margin to report.
        worst_slack = 0.0;
    }
    ConeImageReport { ok: worst_slack >= margin, worst_slack, annihilated }
}

/// Transversality of a subspace to a cone: the subspace meets the cone
/// only at 0, i.e. its closest direction stays outside the half angle.
pub fn subspace_transversal_to_cone(s: &Subspace, c: &Cone) -> bool {
    match subspace::angle_between(s, c.center()) {
        Ok(angle) => angle > c.half_angle() + BOUNDARY_TOL,
        Err(_) => true, // trivial subspace is transversal to everything
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn e1_cone(half: f64) -> Cone {
        Cone::new(Subspace::line(2, &[1.0, 0.0, 0.0, 0.0]), half).unwrap()
    }

    #[test]
    fn boundary_direction_is_inside() {
        // Diagonal (1,1) sits exactly on the boundary of the π/4 cone
        // around the first axis.
        let c = e1_cone(core::f64::consts::FRAC_PI_4);
        assert!(c.contains(&[1.0, 1.0, 0.0, 0.0]));
        assert!(c.contains(&[1.0, 0.0, 0.0, 0.0]));
        assert!(!c.contains(&[0.0, 1.0, 0.0, 0.0]));
        assert!(c.contains(&[0.0, 0.0, 0.0, 0.0])); // the tip
    }

    #[test]
    fn dual_swaps_center_and_complements_angle() {
        let c = e1_cone(0.3);
        let dual = c.dual();
        assert_abs_diff_eq!(
            dual.half_angle(),
            core::f64::consts::FRAC_PI_2 - 0.3,
            epsilon = 1e-15
        );
        // Dual center is the orthogonal complement.
        assert_abs_diff_eq!(dual.center().basis()[0][0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dual.center().basis()[0][1].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn every_direction_is_in_cone_or_dual() {
        let c = e1_cone(0.7);
        let dual = c.dual();
        for u in crate::sampling::unit_vectors(97, 2, 500) {
            let v = [u[0], u[1], 0.0, 0.0];
            assert!(c.contains(&v) || dual.contains(&v), "direction {v:?} escaped both");
        }
    }

    #[test]
    fn graph_bound_matches_arctan_reparameterization() {
        let delta = 0.75;
        let c = Cone::from_graph_bound(Subspace::line(2, &[1.0, 0.0, 0.0, 0.0]), delta).unwrap();
        assert_abs_diff_eq!(c.half_angle(), delta.atan(), epsilon = 1e-15);
        // Graph characterization: |u2| ≤ δ|u1| iff inside.
        assert!(c.contains(&[1.0, 0.74, 0.0, 0.0]));
        assert!(!c.contains(&[1.0, 0.76, 0.0, 0.0]));
    }

    #[test]
    fn hyperbolic_diagonal_map_contracts_the_expanding_cone() {
        // diag(1/2, 2) maps the cone around e₂ strictly inside itself:
        // tan(angle) shrinks by a factor 4.
        let a = Matrix::from_diag(&[0.5, 2.0]);
        let c = Cone::new(Subspace::line(2, &[0.0, 1.0, 0.0, 0.0]), 0.3).unwrap();
        let rep = cone_image_contained(&a, &c, &c, 0.05, 13, 256);
        assert!(rep.ok, "expected strict containment, got {rep:?}");
        assert!(rep.worst_slack > 0.05);
        assert_eq!(rep.annihilated, 0);
    }

    #[test]
    fn identity_map_never_strictly_contains() {
        // α·Id maps the cone exactly onto itself; boundary samples make
        // the worst slack ≈ 0, so no positive margin can pass.
        let a = Matrix::from_diag(&[3.0, 3.0]);
        let c = e1_cone(0.5);
        let rep = cone_image_contained(&a, &c, &c, 1e-6, 17, 256);
        assert!(!rep.ok);
        assert!(rep.worst_slack.abs() < 1e-9);
    }

    #[test]
    fn subspace_membership_uses_largest_tilt() {
        let center =
            Subspace::from_spanning(3, &[[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]], 1e-12);
        let c = Cone::new(center, 0.4).unwrap();
        // A plane tilted by 0.3 in one principal direction fits; tilted
        // by 0.5 it does not.
        let tilted = |t: f64| {
            Subspace::from_spanning(
                3,
                &[
                    [1.0, 0.0, 0.0, 0.0],
                    [0.0, math::cos(t), math::sin(t), 0.0],
                ],
                1e-12,
            )
        };
        assert!(c.contains_subspace(&tilted(0.3)));
        assert!(!c.contains_subspace(&tilted(0.5)));
    }

    #[test]
    fn kernel_transversality_check() {
        let c = Cone::new(Subspace::line(2, &[0.0, 1.0, 0.0, 0.0]), 0.3).unwrap();
        let kernel_line = Subspace::line(2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(subspace_transversal_to_cone(&kernel_line, &c));
        let inside_line = Subspace::line(2, &[0.1, 1.0, 0.0, 0.0]);
        assert!(!subspace_transversal_to_cone(&inside_line, &c));
    }
}
