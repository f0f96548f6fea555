//! Small rotation perturbations: budgets, mixing, and kernel raising.
//!
//! Everything here perturbs a chain by composing selected factors with
//! rotations `R` of angle at most δ. The operator cost of such a step
//! is `‖RA − A‖ ≤ ‖R − I‖·‖A‖ = 2 sin(δ/2)·‖A‖`, which is what
//! [`franks_budget`] measures and [`alpha_for_epsilon`] inverts.
//!
//! The centerpiece is the mixing construction: given a 2-plane worth of
//! directions `v` (the reference) and `w` (the mover) with the growth
//! hypothesis `‖P_i v‖ ≥ ½‖P_i w‖` along partial products, per-step
//! rotations of angle ≤ δ steer the mover onto the reference stream.
//! [`minimal_mixing_length`] measures how long a chain this needs over
//! a seeded corpus, and [`build_kernel_raiser`] applies the mix between
//! two critical passages so the composed window kills one dimension
//! more than either passage alone.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::cocycle::{CocycleError, CocycleSegment};
use crate::linalg::{self, Matrix, Vec4};
use crate::math;
use crate::sampling;

/// Alignment is declared once the sine of the residual line angle drops
/// below this.
pub const MIX_ALIGN_TOL: f64 = 1e-9;

/// Slack on the growth hypothesis check: ratios are accepted down to
/// `½·(1 − MIX_HYPOTHESIS_SLACK)` so exact-boundary corpora are not
/// rejected over the last bit.
pub const MIX_HYPOTHESIS_SLACK: f64 = 1e-12;

/// Errors from perturbation construction.
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbError {
    /// δ must lie in (0, π/2).
    BadDelta(f64),
    /// The growth hypothesis `‖P_i v‖ ≥ ½‖P_i w‖` failed first at this
    /// (1-based) partial product.
    PreconditionFailed { index: usize, ratio: f64 },
    /// A chain factor was numerically singular.
    NotInvertible { index: usize },
    /// The mover and reference collapsed onto one line prematurely, or
    /// a pushed direction died.
    PlaneCollapse { index: usize },
    /// The window between the two critical passages is malformed.
    BadWindow,
    /// The block at a claimed critical passage shows no near-kernel.
    NoCrush { index: i64 },
    Chain(CocycleError),
}

impl fmt::Display for PerturbError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerturbError::BadDelta(d) => write!(f, "rotation bound {d} outside (0, π/2)"),
            PerturbError::PreconditionFailed { index, ratio } => {
                write!(f, "growth hypothesis failed at partial product {index}: ratio {ratio}")
            }
            PerturbError::NotInvertible { index } => {
                write!(f, "chain factor {index} is numerically singular")
            }
            PerturbError::PlaneCollapse { index } => {
                write!(f, "mixing plane degenerated at step {index}")
            }
            PerturbError::BadWindow => write!(f, "malformed raise window"),
            PerturbError::NoCrush { index } => {
                write!(f, "no near-kernel in the critical block at index {index}")
            }
            PerturbError::Chain(e) => write!(f, "chain analysis failure: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PerturbError {}

impl From<CocycleError> for PerturbError {
    fn from(e: CocycleError) -> Self {
        PerturbError::Chain(e)
    }
}

// ───────────────────────────── rotations ─────────────────────────────

/// Rotation by `theta` in the oriented plane spanned by the orthonormal
/// pair `(u, v)`; the orthogonal complement is fixed pointwise.
pub fn rotation_in_plane(dim: usize, u: &Vec4, v: &Vec4, theta: f64) -> Matrix {
    debug_assert!(math::abs(linalg::norm(dim, u) - 1.0) < 1e-9);
    debug_assert!(math::abs(linalg::norm(dim, v) - 1.0) < 1e-9);
    debug_assert!(math::abs(linalg::dot(dim, u, v)) < 1e-9);
    let (c, s) = (math::cos(theta), math::sin(theta));
    let mut r = Matrix::identity(dim);
    for row in 0..dim {
        for col in 0..dim {
            let delta = (c - 1.0) * (u[row] * u[col] + v[row] * v[col])
                + s * (v[row] * u[col] - u[row] * v[col]);
            r.set(row, col, r.get(row, col) + delta);
        }
    }
    r
}

/// Operator-norm cost of composing `a` with the rotation `r`:
/// `‖r·a − a‖`. For `a = I` this is `‖r − I‖ = 2 sin(θ/2)`.
pub fn franks_budget(a: &Matrix, r: &Matrix) -> f64 {
    r.mul(a).sub(a).op_norm()
}

/// Largest rotation angle whose composition cost stays within `eps0`
/// against operators of norm ≤ `max_norm`: the biggest α with
/// `2 sin(α/2) · max_norm ≤ eps0`, found by bisection (α = π when even
/// a half-turn fits). The result always satisfies the coarse bound
/// `α ≥ eps0 / (2·max_norm)` whenever that bound is ≤ π.
pub fn alpha_for_epsilon(max_norm: f64, eps0: f64) -> f64 {
    assert!(max_norm > 0.0 && eps0 > 0.0);
    let cost = |alpha: f64| 2.0 * math::sin(0.5 * alpha) * max_norm;
    if cost(core::f64::consts::PI) <= eps0 {
        return core::f64::consts::PI;
    }
    let mut lo = 0.0f64;
    let mut hi = core::f64::consts::PI;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cost(mid) <= eps0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

// ───────────────────────────── mixing ─────────────────────────────

/// Outcome of steering a mover direction onto a reference stream with
/// per-step rotations of angle ≤ δ.
#[derive(Debug, Clone)]
pub struct MixPlan {
    /// Rotation angles actually spent, one per chain step. Angles are
    /// nonnegative; the orientation lives in the rotation plane.
    pub thetas: Vec<f64>,
    /// The rotation matrices, one per step (`R_i · A_i` is the
    /// perturbed step).
    pub rotations: Vec<Matrix>,
    /// `|sin|` of the line angle between mover and reference after the
    /// last step.
    pub final_sin: f64,
    /// True when the final gap is below [`MIX_ALIGN_TOL`].
    pub success: bool,
    /// `max_i max(‖A_i‖, ‖A_i⁻¹‖)` over the chain (∞ when a factor is
    /// only invertible on the working plane).
    pub n_bound: f64,
    /// Log-norms of the reference and mover streams at the end (growth
    /// bookkeeping; directions are renormalized every step).
    pub log_norm_ref: f64,
    pub log_norm_mover: f64,
}

fn unit(dim: usize, v: &Vec4) -> Option<Vec4> {
    let mut out = *v;
    let n = linalg::normalize(dim, &mut out);
    if n == 0.0 {
        None
    } else {
        Some(out)
    }
}

/// Steer `w` onto the forward stream of `v` through the chain: the
/// reference `v` evolves through the plain factors, the mover `w`
/// through the rotated ones, and each step spends at most `delta` of
/// rotation closing the line angle between them. Works in any ambient
/// dimension ≤ 4: the rotation acts in the plane spanned by the two
/// current directions.
///
/// Fails fast when the growth hypothesis `‖P_i v‖ ≥ ½‖P_i w‖` is
/// violated on the *unrotated* partial products — without that much
/// headroom the mover can outrun every per-step budget.
pub fn mix_rotations_in_plane(
    chain: &[Matrix],
    v: &Vec4,
    w: &Vec4,
    delta: f64,
) -> Result<MixPlan, PerturbError> {
    if !(delta > 0.0 && delta < core::f64::consts::FRAC_PI_2) {
        return Err(PerturbError::BadDelta(delta));
    }
    let Some(first) = chain.first() else {
        return Err(PerturbError::BadWindow);
    };
    let dim = first.dim();

    // Hypothesis check on the unrotated chain, in running form.
    let mut pv = *v;
    let mut pw = *w;
    let vn0 = linalg::norm(dim, &pv);
    let wn0 = linalg::norm(dim, &pw);
    assert!(vn0 > 0.0 && wn0 > 0.0, "directions must be nonzero");
    for i in 0..dim {
        pv[i] /= vn0;
        pw[i] /= wn0;
    }
    let mut n_bound = 0.0f64;
    {
        let mut rv = pv;
        let mut rw = pw;
        for (idx, a) in chain.iter().enumerate() {
            rv = a.apply(&rv);
            rw = a.apply(&rw);
            let (nv, nw) = (linalg::norm(dim, &rv), linalg::norm(dim, &rw));
            if nv < 0.5 * nw * (1.0 - MIX_HYPOTHESIS_SLACK) {
                return Err(PerturbError::PreconditionFailed {
                    index: idx + 1,
                    ratio: if nw == 0.0 { f64::INFINITY } else { nv / nw },
                });
            }
            if nw == 0.0 {
                return Err(PerturbError::PlaneCollapse { index: idx + 1 });
            }
            // Renormalize jointly to keep the running products bounded.
            let scale = nv.max(nw);
            for k in 0..dim {
                rv[k] /= scale;
                rw[k] /= scale;
            }
            let fwd_norm = a.op_norm();
            let inv_norm = match a.inverse(1e-14) {
                Some(inv) => inv.op_norm(),
                None => {
                    return Err(PerturbError::NotInvertible { index: idx + 1 });
                }
            };
            n_bound = n_bound.max(fwd_norm).max(inv_norm);
        }
    }

    // Greedy steering.
    let cap = delta * (1.0 - 1e-9);
    let mut a_dir = pv; // reference, unrotated factors
    let mut b_dir = pw; // mover, rotated factors
    let mut thetas = Vec::with_capacity(chain.len());
    let mut rotations = Vec::with_capacity(chain.len());
    let mut log_ref = 0.0f64;
    let mut log_mover = 0.0f64;
    for (idx, a) in chain.iter().enumerate() {
        let av = a.apply(&a_dir);
        let aw = a.apply(&b_dir);
        let nv = linalg::norm(dim, &av);
        let nw = linalg::norm(dim, &aw);
        if nv == 0.0 || nw == 0.0 {
            return Err(PerturbError::PlaneCollapse { index: idx + 1 });
        }
        log_ref += math::ln(nv);
        log_mover += math::ln(nw);
        a_dir = unit(dim, &av).expect("norm checked");
        let b_raw = unit(dim, &aw).expect("norm checked");

        // Representative of the reference line on the mover's side.
        let mut target = a_dir;
        if linalg::dot(dim, &b_raw, &target) < 0.0 {
            for k in 0..dim {
                target[k] = -target[k];
            }
        }
        // Gram–Schmidt the target against the mover to get the oriented
        // rotation plane. Two passes: one is not enough to keep the
        // plane orthonormal once the residual is tiny.
        let mut ortho = target;
        let overlap = linalg::dot(dim, &target, &b_raw);
        for k in 0..dim {
            ortho[k] -= overlap * b_raw[k];
        }
        let residual = linalg::norm(dim, &ortho);
        let gap = if residual < 1e-13 {
            None // already on the line
        } else {
            let mut u = ortho;
            linalg::normalize(dim, &mut u);
            let second = linalg::dot(dim, &u, &b_raw);
            for k in 0..dim {
                u[k] -= second * b_raw[k];
            }
            linalg::normalize(dim, &mut u);
            Some((u, math::atan2(residual, overlap)))
        };
        let (theta, rot) = match gap {
            Some((plane_v, angle)) => {
                let theta = angle.min(cap);
                (theta, rotation_in_plane(dim, &b_raw, &plane_v, theta))
            }
            None => (0.0, Matrix::identity(dim)),
        };
        b_dir = rot.apply(&b_raw);
        thetas.push(theta);
        rotations.push(rot);
    }

    // Residual norm, not √(1 − ⟨a,b⟩²): the latter loses half the
    // mantissa near alignment and cannot resolve gaps below ~1e-8.
    let overlap = linalg::dot(dim, &a_dir, &b_dir);
    let mut resid = b_dir;
    for k in 0..dim {
        resid[k] -= overlap * a_dir[k];
    }
    let final_sin = linalg::norm(dim, &resid).min(1.0);
    let success = final_sin <= MIX_ALIGN_TOL;
    Ok(MixPlan {
        thetas,
        rotations,
        final_sin,
        success,
        n_bound,
        log_norm_ref: log_ref,
        log_norm_mover: log_mover,
    })
}

/// The 2×2 entry point of the mixing construction.
pub fn mix_rotations_2d(
    chain: &[Matrix],
    v: &Vec4,
    w: &Vec4,
    delta: f64,
) -> Result<MixPlan, PerturbError> {
    assert!(chain.iter().all(|m| m.dim() == 2), "use the in-plane version beyond 2×2");
    mix_rotations_in_plane(chain, v, w, delta)
}

// ───────────────────────── minimal mixing length ─────────────────────────

/// Smallest chain length at which the mixing construction succeeds on
/// every instance of a seeded corpus of norm-bounded chains.
///
/// Corpus: per instance, factors `R(α)·diag(eˢ, e⁻ˢ)·R(β)` with
/// `|s| ≤ ln n_bound` (so `max(‖A‖, ‖A⁻¹‖) ≤ n_bound`), resampled per
/// step until the growth hypothesis survives. Instance 0 starts from
/// the worst case — mover and reference exactly perpendicular.
///
/// The greedy schedule is causal and alignment is absorbing, so running
/// a prefix of length `l` is the truncation of the full-length run: an
/// instance succeeds at `l` exactly when its last visible rotation sits
/// at step `l` or earlier. One full-length mix per instance therefore
/// answers every candidate length at once; the result is the largest
/// per-instance alignment time. Returns `None` when even `l_cap` steps
/// never succeed everywhere.
pub fn minimal_mixing_length(
    delta: f64,
    n_bound: f64,
    seed: u64,
    instances: usize,
    l_cap: usize,
) -> Option<usize> {
    let corpora = mixing_corpus(n_bound, seed, instances, l_cap)?;
    let mut needed = 1usize;
    for (chain, v, w) in &corpora {
        let plan = match mix_rotations_2d(chain, v, w, delta) {
            Ok(plan) if plan.success => plan,
            _ => return None,
        };
        // Last step that spent a visible angle; earlier prefixes end
        // before alignment, later ones only polish roundoff.
        let aligned_at = plan
            .thetas
            .iter()
            .rposition(|&t| t > MIX_ALIGN_TOL)
            .map_or(1, |i| i + 1);
        needed = needed.max(aligned_at);
    }
    Some(needed)
}

/// The seeded corpus behind [`minimal_mixing_length`], exposed so that
/// callers can rerun the mixing construction on truncated chains and
/// audit per-instance outcomes. Returns `None` when some instance
/// cannot be built within the restart budget.
pub fn mixing_corpus(
    n_bound: f64,
    seed: u64,
    instances: usize,
    l_cap: usize,
) -> Option<Vec<(Vec<Matrix>, Vec4, Vec4)>> {
    assert!(n_bound >= 1.0 && instances >= 1 && l_cap >= 1);
    let s_max = math::ln(n_bound);
    let mut corpora: Vec<(Vec<Matrix>, Vec4, Vec4)> = Vec::with_capacity(instances);

    'instance: for j in 0..instances {
        let mut restart = 0u64;
        loop {
            let mut rng = sampling::rng(seed ^ (j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (restart << 56));
            let (v, w): (Vec4, Vec4) = if j == 0 {
                ([1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0])
            } else {
                let phi_v = rng.gen::<f64>() * core::f64::consts::TAU;
                let phi_w = rng.gen::<f64>() * core::f64::consts::TAU;
                (
                    [math::cos(phi_v), math::sin(phi_v), 0.0, 0.0],
                    [math::cos(phi_w), math::sin(phi_w), 0.0, 0.0],
                )
            };
            let mut chain = Vec::with_capacity(l_cap);
            let mut pv = v;
            let mut pw = w;
            let mut dead_end = false;
            while chain.len() < l_cap {
                let mut placed = false;
                for _try in 0..50 {
                    let alpha = rng.gen::<f64>() * core::f64::consts::TAU;
                    let beta = rng.gen::<f64>() * core::f64::consts::TAU;
                    let s = if s_max == 0.0 { 0.0 } else { (2.0 * rng.gen::<f64>() - 1.0) * s_max };
                    let rot = |t: f64| {
                        Matrix::from_rows(&[
                            &[math::cos(t), -math::sin(t)],
                            &[math::sin(t), math::cos(t)],
                        ])
                    };
                    let a = rot(alpha).mul(&Matrix::from_diag(&[math::exp(s), math::exp(-s)])).mul(&rot(beta));
                    let nv = linalg::norm(2, &a.apply(&pv));
                    let nw = linalg::norm(2, &a.apply(&pw));
                    if nv >= 0.5 * nw && nw > 0.0 {
                        pv = a.apply(&pv);
                        pw = a.apply(&pw);
                        let scale = linalg::norm(2, &pv).max(linalg::norm(2, &pw));
                        for k in 0..2 {
                            pv[k] /= scale;
                            pw[k] /= scale;
                        }
                        chain.push(a);
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    dead_end = true;
                    break;
                }
            }
            if !dead_end {
                corpora.push((chain, v, w));
                continue 'instance;
            }
            restart += 1;
            if restart > 32 {
                return None; // corpus unbuildable at these parameters
            }
        }
    }
    Some(corpora)
}

// ───────────────────────────── kernel raising ─────────────────────────────

/// Outcome of the between-passages kernel raise.
#[derive(Debug, Clone)]
pub struct KernelRaiseReport {
    /// Numerical kernel dimension of the unperturbed full window.
    pub kernel_dim_before: usize,
    /// … and of the rotated window.
    pub kernel_dim_after: usize,
    /// The full perturbed factor list over `[lo, lo + len)`.
    pub factors: Vec<Matrix>,
    /// First index of the window.
    pub lo: i64,
    /// Rotation angles spent on the mixed middle stretch.
    pub thetas: Vec<f64>,
    /// Largest per-step operator cost `‖R·A − A‖`.
    pub max_budget: f64,
    /// Sum of the per-step costs — the whole perturbation spent.
    pub total_budget: f64,
    /// Largest rotation angle used.
    pub max_theta: f64,
    /// True when the mix aligned and the kernel grew past κ.
    pub success: bool,
}

/// Raise the kernel dimension of the window spanning two consecutive
/// critical passages: the block at `h_back` already kills κ directions;
/// rotations on the stretch between the passages steer one surviving
/// direction into the stream that the block at `h_next` kills.
///
/// Layout of the window `[h_back, h_next + m_f)`:
///
/// ```text
///   [h_back, h_back+m_f)   crush block, unperturbed
///   [h_back+m_f, h_next)   mixed stretch, factors become R_i·A_i
///   [h_next, h_next+m_f)   crush block, unperturbed
/// ```
///
/// The reference direction is the pull-back (through the unperturbed
/// mixed stretch) of the weakest direction of the final block; the
/// mover is the dominant image direction of the first block. Kernel
/// dimensions are measured against the window's norm scale at
/// `kernel_tol`.
pub fn build_kernel_raiser(
    seg: &CocycleSegment,
    h_back: i64,
    h_next: i64,
    m_f: usize,
    kappa: usize,
    delta: f64,
    kernel_tol: f64,
) -> Result<KernelRaiseReport, PerturbError> {
    let d = seg.dim();
    if h_next - h_back <= m_f as i64 {
        return Err(PerturbError::BadWindow);
    }
    let total_len = (h_next - h_back) as usize + m_f;
    if !seg.has_window(h_back, total_len) {
        return Err(PerturbError::BadWindow);
    }
    let mid_len = (h_next - h_back) as usize - m_f;

    // Final crush block: its weakest domain direction is the target.
    let final_block = seg.window_svd(h_next, m_f)?;
    let final_scale = seg.window_log_scale(h_next, m_f)?;
    if final_block.kernel_dim_vs_scale(final_scale, kernel_tol) < kappa {
        return Err(PerturbError::NoCrush { index: h_next });
    }
    let e_dead = final_block.domain.col(0);

    // Reference start: pull the target back through the mixed stretch.
    let mid = seg
        .window(h_back + m_f as i64, mid_len)
        .map_err(PerturbError::Chain)?;
    let mid_product = match linalg::product_chain(&mid) {
        Ok(p) => p,
        Err(_) => return Err(PerturbError::BadWindow),
    };
    let Some(mid_inverse) = mid_product.inverse(1e-12) else {
        return Err(PerturbError::NotInvertible { index: 0 });
    };
    let v0 = match unit(d, &mid_inverse.apply(&e_dead)) {
        Some(u) => u,
        None => return Err(PerturbError::PlaneCollapse { index: 0 }),
    };

    // Mover: the dominant image direction of the first crush block.
    let first_block = seg.window_svd(h_back, m_f)?;
    let first_scale = seg.window_log_scale(h_back, m_f)?;
    if first_block.kernel_dim_vs_scale(first_scale, kernel_tol) < kappa {
        return Err(PerturbError::NoCrush { index: h_back });
    }
    let w0 = first_block.codomain.col(d - 1);

    let plan = mix_rotations_in_plane(&mid, &v0, &w0, delta)?;

    // Assemble the perturbed window and measure both kernels.
    let mut factors = Vec::with_capacity(total_len);
    let mut plain = Vec::with_capacity(total_len);
    let mut max_budget = 0.0f64;
    let mut total_budget = 0.0f64;
    for j in 0..total_len {
        let a = *seg.matrix(h_back + j as i64);
        plain.push(a);
        let in_mid = j >= m_f && j < m_f + mid_len;
        if in_mid {
            let r = &plan.rotations[j - m_f];
            let cost = franks_budget(&a, r);
            max_budget = max_budget.max(cost);
            total_budget += cost;
            factors.push(r.mul(&a));
        } else {
            factors.push(a);
        }
    }
    let log_scale = seg.window_log_scale(h_back, total_len)?;
    let before = linalg::svd_of_chain(&plain).kernel_dim_vs_scale(log_scale, kernel_tol);
    let after = linalg::svd_of_chain(&factors).kernel_dim_vs_scale(log_scale, kernel_tol);
    let max_theta = plan.thetas.iter().fold(0.0f64, |m, &t| m.max(math::abs(t)));

    Ok(KernelRaiseReport {
        kernel_dim_before: before,
        kernel_dim_after: after,
        factors,
        lo: h_back,
        thetas: plan.thetas,
        max_budget,
        total_budget,
        max_theta,
        success: plan.success && after > kappa,
    })
}

// ───────────────────────────── rank witness ─────────────────────────────

/// Rank of a chain product measured against its norm scale — the
/// witness that a composed window annihilates everything it claims to.
#[derive(Debug, Clone)]
pub struct FullKernelReport {
    pub rank: usize,
    pub log_sigmas: Vec<f64>,
    /// `Σ ln ‖A_i‖` (−∞ when some factor is exactly zero).
    pub log_scale: f64,
}

/// Count singular values above `1e-12 ×` the chain's norm scale.
pub fn full_kernel_demo(chain: &[Matrix]) -> FullKernelReport {
    let svd = linalg::svd_of_chain(chain);
    let mut log_scale = 0.0f64;
    for m in chain {
        let n = m.op_norm();
        log_scale = if n == 0.0 { f64::NEG_INFINITY } else { log_scale + math::ln(n) };
    }
    let dead = svd.kernel_dim_vs_scale(log_scale, 1e-12);
    FullKernelReport { rank: svd.dim() - dead, log_sigmas: svd.log_sigmas.clone(), log_scale }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rot2(t: f64) -> Matrix {
        Matrix::from_rows(&[&[math::cos(t), -math::sin(t)], &[math::sin(t), math::cos(t)]])
    }

    #[test]
    fn plane_rotation_has_the_half_angle_norm() {
        for theta in [0.2, 1.0, 2.5] {
            let r = rotation_in_plane(2, &[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], theta);
            let dist = r.sub(&Matrix::identity(2)).op_norm();
            assert_abs_diff_eq!(dist, 2.0 * math::sin(0.5 * theta), epsilon = 1e-12);
        }
    }

    #[test]
    fn plane_rotation_fixes_the_complement() {
        let r = rotation_in_plane(
            3,
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            0.7,
        );
        let e3 = r.apply(&[0.0, 0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(e3[2], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e3[0], 0.0, epsilon = 1e-15);
        // And it is orthogonal.
        let rtr = r.transpose().mul(&r);
        assert!(rtr.sub(&Matrix::identity(3)).op_norm() < 1e-14);
    }

    #[test]
    fn budget_of_rotating_identity_is_the_chord_length() {
        let r = rot2(0.6);
        assert_abs_diff_eq!(
            franks_budget(&Matrix::identity(2), &r),
            2.0 * math::sin(0.3),
            epsilon = 1e-12
        );
        // Against a general operator the cost is bounded by chord × norm.
        let a = Matrix::from_rows(&[&[1.5, 0.3], &[-0.7, 2.2]]);
        assert!(franks_budget(&a, &r) <= 2.0 * math::sin(0.3) * a.op_norm() + 1e-12);
    }

    #[test]
    fn alpha_inversion_matches_the_arcsine_and_the_coarse_bound() {
        let alpha = alpha_for_epsilon(1.0, 0.2);
        assert_abs_diff_eq!(alpha, 2.0 * math::asin(0.1), epsilon = 1e-12);
        let mut rng = sampling::rng(77);
        for _ in 0..50 {
            let norm = 0.5 + 9.5 * rng.gen::<f64>();
            let eps = 0.05 + rng.gen::<f64>();
            let a = alpha_for_epsilon(norm, eps);
            assert!(2.0 * math::sin(0.5 * a) * norm <= eps * (1.0 + 1e-12));
            let coarse = eps / (2.0 * norm);
            if coarse <= core::f64::consts::PI {
                assert!(a >= coarse * (1.0 - 1e-9), "α {a} under coarse bound {coarse}");
            }
        }
    }

    #[test]
    fn mixing_through_isometries_closes_a_right_angle_in_sixteen_steps() {
        // Isometries add no differential twist, so a π/2 gap closes at
        // exactly δ per step: ⌈(π/2)/0.1⌉ = 16.
        let chain = alloc::vec![rot2(2.39996); 16];
        let plan = mix_rotations_2d(&chain, &[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], 0.1)
            .unwrap();
        assert!(plan.success, "final sin {}", plan.final_sin);
        assert_abs_diff_eq!(plan.n_bound, 1.0, epsilon = 1e-12);
        assert!(plan.thetas[..15].iter().all(|&t| (t - 0.1).abs() < 1e-6));
        // One step fewer cannot close the gap.
        let short = mix_rotations_2d(&chain[..15], &[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], 0.1)
            .unwrap();
        assert!(!short.success);
    }

    #[test]
    fn mixing_rejects_chains_where_the_mover_outruns_the_reference() {
        let chain = alloc::vec![Matrix::from_diag(&[0.25, 1.0]); 4];
        match mix_rotations_2d(&chain, &[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], 0.3) {
            Err(PerturbError::PreconditionFailed { index: 1, ratio }) => {
                assert_abs_diff_eq!(ratio, 0.25, epsilon = 1e-12);
            }
            other => panic!("expected hypothesis failure, got {other:?}"),
        }
    }

    #[test]
    fn mixing_in_three_dimensions_leaves_the_complement_alone() {
        // Rotation ⊕ 1 isometries: the construction works in the
        // (e1, e2)-plane and every rotation it emits fixes e3.
        let mut m = Matrix::identity(3);
        let r = rot2(2.39996);
        for row in 0..2 {
            for col in 0..2 {
                m.set(row, col, r.get(row, col));
            }
        }
        let chain = alloc::vec![m; 16];
        let plan = mix_rotations_in_plane(
            &chain,
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            0.1,
        )
        .unwrap();
        assert!(plan.success);
        for rot in &plan.rotations {
            let e3 = rot.apply(&[0.0, 0.0, 1.0, 0.0]);
            assert_abs_diff_eq!(e3[2], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn minimal_length_frozen_values_for_isometry_corpora() {
        assert_eq!(minimal_mixing_length(0.1, 1.0, 7, 20, 64), Some(16));
        assert_eq!(
            minimal_mixing_length(core::f64::consts::FRAC_PI_2 - 0.01, 1.0, 7, 20, 64),
            Some(2)
        );
    }

    #[test]
    fn minimal_length_shrinks_as_the_budget_grows() {
        let l_small = minimal_mixing_length(0.05, 1.0, 7, 12, 128).unwrap();
        let l_mid = minimal_mixing_length(0.1, 1.0, 7, 12, 128).unwrap();
        let l_big = minimal_mixing_length(0.2, 1.0, 7, 12, 128).unwrap();
        assert!(l_small >= l_mid && l_mid >= l_big, "{l_small} {l_mid} {l_big}");
    }

    #[test]
    fn minimal_length_with_norm_bound_two_is_deterministic_and_finite() {
        let a = minimal_mixing_length(0.15, 2.0, 13, 12, 192);
        let b = minimal_mixing_length(0.15, 2.0, 13, 12, 192);
        assert_eq!(a, b, "same seed, same corpus, same answer");
        assert!(a.is_some(), "budget 0.15 must succeed within 192 steps");
    }

    #[test]
    fn kernel_raiser_on_the_synthetic_two_crush_window() {
        // Crush blocks [[0,1],[0,1]] at both ends kill the first axis;
        // golden-rotation isometries in between leave the mix a clean
        // right angle to close. The rotated window kills both axes.
        let crush = Matrix::from_rows(&[&[0.0, 1.0], &[0.0, 1.0]]);
        let mut matrices = alloc::vec![crush];
        for _ in 0..16 {
            matrices.push(rot2(2.39996));
        }
        matrices.push(crush);
        let seg = CocycleSegment::from_matrices(0, matrices);
        let report = build_kernel_raiser(&seg, 0, 17, 1, 1, 0.12, 1e-8).unwrap();
        assert_eq!(report.kernel_dim_before, 1);
        assert_eq!(report.kernel_dim_after, 2, "the raise must gain a dimension");
        assert!(report.success);
        assert!(report.max_theta <= 0.12);
        // Budget on isometries: ‖R·A − A‖ = 2 sin(θ/2) ≤ θ.
        assert!(report.max_budget <= 0.12 + 1e-9);
        // The raised window truly annihilates two directions at scale.
        let demo = full_kernel_demo(&report.factors);
        assert_eq!(demo.rank, 0);
    }

    #[test]
    fn kernel_raiser_refuses_windows_without_crushes() {
        let seg = CocycleSegment::from_matrices(
            0,
            alloc::vec![Matrix::from_diag(&[4.0, 2.0]); 12],
        );
        assert!(matches!(
            build_kernel_raiser(&seg, 0, 10, 1, 1, 0.1, 1e-8),
            Err(PerturbError::NoCrush { index: 10 })
        ));
    }






    #[test]
    fn rank_witness_handles_exact_nilpotents() {
        let n = Matrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let single = full_kernel_demo(&[n]);
        assert_eq!(single.rank, 1);
        let squared = full_kernel_demo(&[n, n]);
        assert_eq!(squared.rank, 0, "the square of the nilpotent is exactly zero");
        assert!(squared.log_sigmas.iter().all(|&l| l == f64::NEG_INFINITY));
    }
}
