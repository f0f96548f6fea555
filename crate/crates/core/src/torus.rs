//! The catalog of torus endomorphisms and their finite orbit data.
//!
//! Catalog members (all maps of 𝕋ᵈ = ℝᵈ/ℤᵈ):
//!
//! * **Linear**: `x ↦ Mx mod 1` for an integer matrix `M`. Hyperbolic,
//!   expanding, and expanding-with-complex-eigenvalues instances are all
//!   obtained this way; none has critical points.
//! * **Fold**: `f(x, y) = (g(x) mod 1, k·y mod 1)` with
//!   `g(x) = 2x + sin(2πx)/π` and `k ∈ {2, 3}`. The first coordinate is
//!   a degree-2 circle covering whose derivative `g'(x) = 2 + 2cos(2πx)`
//!   vanishes exactly on the line `x = 1/2` — the critical locus.
//! * **FoldFoldExpand**: `(g(x), g(y), e·z)` on 𝕋³; the kernel dimension
//!   reaches 2 on the line `x = y = 1/2`.
//!
//! Orbit segments carry points and step Jacobians indexed by `i64` so a
//! segment can extend to negative times (backward branches). At "desk
//! scale" the critical locus is represented by a sampled cloud from
//! [`critical_scan`], and membership means distance-to-cloud below a
//! configured radius.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::linalg::{self, Matrix, Vec4};
use crate::math;
use crate::sampling;

/// Default Newton iteration cap for preimage searches.
const NEWTON_MAX_ITER: usize = 50;

/// Residual (torus metric) below which a Newton root is accepted.
const NEWTON_RESIDUAL_TOL: f64 = 1e-10;

/// Torus-metric radius used to deduplicate preimage roots.
const PREIMAGE_DEDUPE_RADIUS: f64 = 1e-6;

/// Errors from catalog construction and orbit sampling.
#[derive(Debug, Clone, PartialEq)]
pub enum TorusError {
    /// Linear catalog matrices must have integer entries to descend to
    /// the torus.
    NonIntegerMatrix,
    /// Fold multiplier must be 2 or 3.
    BadFoldMultiplier(u32),
    /// No orbit through the critical neighborhood was found within the
    /// restart/search budget.
    OrbitNotFound { restarts: usize },
    /// A backward branch ran out of preimages (numerically none found).
    NoPreimage { index: i64 },
}

impl fmt::Display for TorusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TorusError::NonIntegerMatrix => {
                write!(f, "linear torus maps need integer matrix entries")
            }
            TorusError::BadFoldMultiplier(k) => write!(f, "fold multiplier {k} not in {{2, 3}}"),
            TorusError::OrbitNotFound { restarts } => {
                write!(f, "no orbit revisiting the critical neighborhood after {restarts} restarts")
            }
            TorusError::NoPreimage { index } => {
                write!(f, "no numerical preimage found at backward index {index}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TorusError {}

/// Wrap a coordinate to `[0, 1)`.
pub fn wrap(x: f64) -> f64 {
    let w = x - math::floor(x);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Wrap a displacement to `[-1/2, 1/2)`.
pub fn wrap_half(x: f64) -> f64 {
    let w = wrap(x);
    if w >= 0.5 {
        w - 1.0
    } else {
        w
    }
}

/// Distance on 𝕋ᵈ (shortest representative).
pub fn torus_distance(d: usize, a: &Vec4, b: &Vec4) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        let w = wrap_half(a[i] - b[i]);
        s += w * w;
    }
    math::sqrt(s)
}

/// First coordinate of the fold map and its derivative.
fn fold_g(x: f64) -> f64 {
    2.0 * x + math::sin(2.0 * core::f64::consts::PI * x) / core::f64::consts::PI
}

fn fold_g_prime(x: f64) -> f64 {
    2.0 + 2.0 * math::cos(2.0 * core::f64::consts::PI * x)
}

/// A catalog torus endomorphism.
#[derive(Debug, Clone, PartialEq)]
pub enum TorusMap {
    /// `x ↦ Mx mod 1`, integer `M`.
    Linear(Matrix),
    /// `(x, y) ↦ (g(x), k·y)` with the degree-2 fold `g` in the first
    /// coordinate.
    Fold { k: u32 },
    /// `(x, y, z) ↦ (g(x), g(y), e·z)` on 𝕋³.
    FoldFoldExpand { expand: u32 },
}

impl TorusMap {
    /// Linear catalog map; rejects non-integer entries.
    pub fn linear(m: Matrix) -> Result<Self, TorusError> {
        for r in 0..m.dim() {
            for c in 0..m.dim() {
                if math::abs(m.get(r, c) - math::round(m.get(r, c))) > 1e-12 {
                    return Err(TorusError::NonIntegerMatrix);
                }
            }
        }
        Ok(TorusMap::Linear(m))
    }

    /// Fold map with second-coordinate multiplier `k ∈ {2, 3}`.
    pub fn fold(k: u32) -> Result<Self, TorusError> {
        if k == 2 || k == 3 {
            Ok(TorusMap::Fold { k })
        } else {
            Err(TorusError::BadFoldMultiplier(k))
        }
    }

    /// 3-D product of two folds and an expanding circle factor.
    pub fn fold_fold_expand(expand: u32) -> Result<Self, TorusError> {
        if expand >= 2 {
            Ok(TorusMap::FoldFoldExpand { expand })
        } else {
            Err(TorusError::BadFoldMultiplier(expand))
        }
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            TorusMap::Linear(m) => m.dim(),
            TorusMap::Fold { .. } => 2,
            TorusMap::FoldFoldExpand { .. } => 3,
        }
    }

    /// One application of the map, result wrapped into `[0,1)ᵈ`.
    pub fn evaluate(&self, x: &Vec4) -> Vec4 {
        let mut y = [0.0; 4];
        match self {
            TorusMap::Linear(m) => {
                let img = m.apply(x);
                for i in 0..m.dim() {
                    y[i] = wrap(img[i]);
                }
            }
            TorusMap::Fold { k } => {
                y[0] = wrap(fold_g(x[0]));
                y[1] = wrap(*k as f64 * x[1]);
            }
            TorusMap::FoldFoldExpand { expand } => {
                y[0] = wrap(fold_g(x[0]));
                y[1] = wrap(fold_g(x[1]));
                y[2] = wrap(*expand as f64 * x[2]);
            }
        }
        y
    }

    /// Exact Jacobian at `x`.
    pub fn jacobian(&self, x: &Vec4) -> Matrix {
        match self {
            TorusMap::Linear(m) => *m,
            TorusMap::Fold { k } => Matrix::from_diag(&[fold_g_prime(x[0]), *k as f64]),
            TorusMap::FoldFoldExpand { expand } => {
                Matrix::from_diag(&[fold_g_prime(x[0]), fold_g_prime(x[1]), *expand as f64])
            }
        }
    }

    /// True when the catalog member has critical points at all.
    pub fn has_critical_points(&self) -> bool {
        !matches!(self, TorusMap::Linear(_))
    }
}

// ───────────────────────────── orbit segments ─────────────────────────────

/// A finite orbit segment indexed by `i64`: points `x_lo .. x_hi` and the
/// step Jacobians `J_i = Df(x_i)` for `lo ≤ i < hi` (so `J_i` maps the
/// fiber at `x_i` to the fiber at `x_{i+1}`).
#[derive(Debug, Clone)]
pub struct OrbitSegment {
    lo: i64,
    points: Vec<Vec4>,
    jacobians: Vec<Matrix>,
    dim: usize,
}

impl OrbitSegment {
    pub fn new(lo: i64, points: Vec<Vec4>, jacobians: Vec<Matrix>, dim: usize) -> Self {
        assert_eq!(points.len(), jacobians.len() + 1, "need one more point than step");
        OrbitSegment { lo, points, jacobians, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Smallest point index.
    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Largest point index.
    pub fn hi(&self) -> i64 {
        self.lo + self.points.len() as i64 - 1
    }

    pub fn point(&self, i: i64) -> &Vec4 {
        &self.points[(i - self.lo) as usize]
    }

    /// Step Jacobian mapping fiber `i` to fiber `i+1`; valid for
    /// `lo ≤ i < hi`.
    pub fn jacobian(&self, i: i64) -> &Matrix {
        &self.jacobians[(i - self.lo) as usize]
    }

    /// The step Jacobians for `i, i+1, …, i+len-1` in application order.
    pub fn chain(&self, i: i64, len: usize) -> Vec<Matrix> {
        (0..len).map(|j| *self.jacobian(i + j as i64)).collect()
    }

    /// True when the chain window `[i, i+len)` lies inside the segment.
    pub fn has_chain(&self, i: i64, len: usize) -> bool {
        i >= self.lo && i + len as i64 <= self.hi()
    }
}

/// Forward orbit of length `len` (so `len + 1` points), base index 0.
pub fn forward_orbit(map: &TorusMap, start: &Vec4, len: usize) -> OrbitSegment {
    let d = map.dim();
    let mut points = Vec::with_capacity(len + 1);
    let mut jacobians = Vec::with_capacity(len);
    let mut x = *start;
    for i in 0..d {
        x[i] = wrap(x[i]);
    }
    points.push(x);
    for _ in 0..len {
        jacobians.push(map.jacobian(&x));
        x = map.evaluate(&x);
        points.push(x);
    }
    OrbitSegment::new(0, points, jacobians, d)
}

// ─────────────────────────── preimages via Newton ───────────────────────────

/// A preimage root with the conorm of the Jacobian there (how close the
/// branch is to the critical locus).
#[derive(Debug, Clone, PartialEq)]
pub struct Preimage {
    pub point: Vec4,
    pub jacobian_conorm: f64,
}

/// All numerical preimages of `y`: Newton iteration started from every
/// cell center of a `grid_res`ᵈ lattice, using the local lift of `f`
/// (wrapped residuals), a damped step near singular Jacobians, and a
/// 50-iteration cap. Roots are deduplicated at torus radius 1e-6 and
/// must reproduce `y` to torus distance ≤ 1e-10.
pub fn preimages(map: &TorusMap, y: &Vec4, grid_res: usize) -> Vec<Preimage> {
    let d = map.dim();
    let mut roots: Vec<Preimage> = Vec::new();
    let cells = grid_res.pow(d as u32);
    for cell in 0..cells {
        let mut x = [0.0; 4];
        let mut c = cell;
        for i in 0..d {
            x[i] = (c % grid_res) as f64 / grid_res as f64 + 0.5 / grid_res as f64;
            c /= grid_res;
        }
        if let Some(root) = newton_preimage(map, y, &x) {
            if roots.iter().all(|r| torus_distance(d, &r.point, &root) > PREIMAGE_DEDUPE_RADIUS) {
                let conorm = map.jacobian(&root).conorm();
                roots.push(Preimage { point: root, jacobian_conorm: conorm });
            }
        }
    }
    // Deterministic order: lexicographic by coordinates.
    roots.sort_by(|a, b| {
        a.point[..d]
            .partial_cmp(&b.point[..d])
            .expect("finite coordinates")
    });
    roots
}

/// Newton solve of `f(x) = y` from one seed; `None` when the iteration
/// fails to converge.
fn newton_preimage(map: &TorusMap, y: &Vec4, seed: &Vec4) -> Option<Vec4> {
    let d = map.dim();
    let mut x = *seed;
    for _ in 0..NEWTON_MAX_ITER {
        let fx = map.evaluate(&x);
        let mut r = [0.0; 4];
        for i in 0..d {
            r[i] = wrap_half(fx[i] - y[i]);
        }
        let res = linalg::norm(d, &r);
        if res <= 1e-13 {
            break;
        }
        let j = map.jacobian(&x);
        let step = match j.inverse(1e-12) {
            Some(inv) => inv.apply(&r),
            None => {
                // Damped pseudo-inverse step near the critical locus:
                // clamp tiny singular values and halve the step.
                let svd = linalg::svd_ascending(&j);
                let smax = svd.sigmas[d - 1].max(1e-300);
                let mut s = [0.0; 4];
                for k in 0..d {
                    let sk = svd.sigmas[k].max(1e-3 * smax);
                    let coeff = linalg::dot(d, &svd.codomain.col(k), &r) / sk;
                    s = linalg::axpy(d, &s, 0.5 * coeff, &svd.domain.col(k));
                }
                s
            }
        };
        for i in 0..d {
            x[i] = wrap(x[i] - step[i]);
        }
    }
    let fx = map.evaluate(&x);
    if torus_distance(d, &fx, y) <= NEWTON_RESIDUAL_TOL {
        Some(x)
    } else {
        None
    }
}

/// Choice rule for backward branches.
#[derive(Debug, Clone)]
pub enum BranchSelector {
    /// Uniform seeded choice among the preimages.
    Seeded(u64),
    /// Seeded choice biased toward a target cloud: preimages are drawn
    /// with weight `exp(-dist_to_cloud / temperature)`.
    BiasTowards { cloud: Vec<Vec4>, seed: u64, temperature: f64 },
}

/// Backward branch of length `len` ending at `x0`: points
/// `x_{-len}, …, x_0` with `f(x_{i}) = x_{i+1}` to torus residual 1e-10.
/// Branch choices follow the selector and are fully deterministic.
pub fn backward_branch(
    map: &TorusMap,
    x0: &Vec4,
    len: usize,
    grid_res: usize,
    selector: &BranchSelector,
) -> Result<OrbitSegment, TorusError> {
    let d = map.dim();
    let mut rng = match selector {
        BranchSelector::Seeded(s) => sampling::rng(*s),
        BranchSelector::BiasTowards { seed, .. } => sampling::rng(*seed),
    };
    let mut rev_points = alloc::vec![*x0];
    let mut current = *x0;
    for step in 0..len {
        let pre = preimages(map, &current, grid_res);
        if pre.is_empty() {
            return Err(TorusError::NoPreimage { index: -(step as i64) - 1 });
        }
        let pick = match selector {
            BranchSelector::Seeded(_) => rng.gen_range(0..pre.len()),
            BranchSelector::BiasTowards { cloud, temperature, .. } => {
                let weights: Vec<f64> = pre
                    .iter()
                    .map(|p| {
                        let dist = cloud
                            .iter()
                            .map(|c| torus_distance(d, &p.point, c))
                            .fold(f64::INFINITY, f64::min);
                        math::exp(-dist / temperature)
                    })
                    .collect();
                let total: f64 = weights.iter().sum();
                let mut draw = rng.gen::<f64>() * total;
                let mut idx = 0;
                for (i, w) in weights.iter().enumerate() {
                    draw -= w;
                    if draw <= 0.0 {
                        idx = i;
                        break;
                    }
                }
                idx
            }
        };
        current = pre[pick].point;
        rev_points.push(current);
    }
    rev_points.reverse();
    let jacobians: Vec<Matrix> =
        rev_points[..len].iter().map(|p| map.jacobian(p)).collect();
    Ok(OrbitSegment::new(-(len as i64), rev_points, jacobians, d))
}

// ───────────────────────────── critical locus scan ─────────────────────────────

/// Desk-scale description of the critical locus: the maximal kernel
/// index κ observed, the first iterate `m_f` attaining it, a sampled
/// point cloud of `Cr_κ`, and whether the κ-locus shows full-dimensional
/// (plaquette) evidence of interior.
#[derive(Debug, Clone)]
pub struct CriticalScan {
    /// Largest kernel dimension of `Df^m` observed for `m ≤ m_max`.
    pub kappa: usize,
    /// Smallest `m` attaining κ at some grid point (0 when κ = 0).
    pub m_f: usize,
    /// Grid points where `dim ker(Df^{m_f}) = κ`.
    pub samples: Vec<Vec4>,
    /// True when some κ-cell and all of its 2d axis neighbors attain κ —
    /// grid evidence of a full-dimensional critical set. For catalog
    /// maps the locus is a hypersurface and this stays false.
    pub has_interior: bool,
    /// For each `m = 1..=m_max`, the max kernel dimension observed.
    pub max_kernel_by_m: Vec<usize>,
}

impl CriticalScan {
    /// Distance from `x` to the sampled critical cloud (∞ when empty).
    pub fn distance_to_samples(&self, d: usize, x: &Vec4) -> f64 {
        self.samples
            .iter()
            .map(|s| torus_distance(d, x, s))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Scan a `grid_res`ᵈ lattice for kernel dimensions of `Df^m`, `m ≤
/// m_max`, with numerical rank at relative tolerance `rank_tol`.
pub fn critical_scan(
    map: &TorusMap,
    grid_res: usize,
    m_max: usize,
    rank_tol: f64,
) -> CriticalScan {
    let d = map.dim();
    let cells = grid_res.pow(d as u32);
    let mut max_kernel_by_m = alloc::vec![0usize; m_max];
    let mut kappa = 0usize;
    let mut m_f = 0usize;

    // First pass: find κ and m_f.
    let kernel_dim_at = |x: &Vec4, m: usize| -> usize {
        let mut chain = Vec::with_capacity(m);
        let mut p = *x;
        for _ in 0..m {
            chain.push(map.jacobian(&p));
            p = map.evaluate(&p);
        }
        let svd = linalg::svd_of_chain(&chain);
        let lmax = svd.log_sigmas[d - 1];
        if lmax == f64::NEG_INFINITY {
            return d;
        }
        svd.log_sigmas
            .iter()
            .filter(|&&l| l <= lmax + math::ln(rank_tol))
            .count()
    };

    let grid_point = |cell: usize| -> Vec4 {
        let mut x = [0.0; 4];
        let mut c = cell;
        for i in 0..d {
            x[i] = (c % grid_res) as f64 / grid_res as f64;
            c /= grid_res;
        }
        x
    };

    for cell in 0..cells {
        let x = grid_point(cell);
        for m in 1..=m_max {
            let k = kernel_dim_at(&x, m);
            if k > max_kernel_by_m[m - 1] {
                max_kernel_by_m[m - 1] = k;
            }
            if k > kappa {
                kappa = k;
                m_f = m;
            }
        }
    }

    // Second pass: collect the κ-attaining cells at m_f.
    let mut samples = Vec::new();
    let mut attains = alloc::vec![false; if kappa > 0 { cells } else { 0 }];
    if kappa > 0 {
        for cell in 0..cells {
            let x = grid_point(cell);
            if kernel_dim_at(&x, m_f) == kappa {
                attains[cell] = true;
                samples.push(x);
            }
        }
    }

    // Plaquette interior evidence: a κ-cell whose every axis neighbor is
    // also a κ-cell.
    let mut has_interior = false;
    if kappa > 0 {
        'outer: for cell in 0..cells {
            if !attains[cell] {
                continue;
            }
            let mut coords = [0usize; 4];
            let mut c = cell;
            for i in 0..d {
                coords[i] = c % grid_res;
                c /= grid_res;
            }
            let mut all = true;
            for i in 0..d {
                for dir in [-1i64, 1] {
                    let mut n = coords;
                    n[i] = ((coords[i] as i64 + dir).rem_euclid(grid_res as i64)) as usize;
                    let mut idx = 0usize;
                    for j in (0..d).rev() {
                        idx = idx * grid_res + n[j];
                    }
                    if !attains[idx] {
                        all = false;
                        break;
                    }
                }
                if !all {
                    break;
                }
            }
            if all {
                has_interior = true;
                break 'outer;
            }
        }
    }

    CriticalScan { kappa, m_f, samples, has_interior, max_kernel_by_m }
}

// ─────────────────────── orbits through the critical set ───────────────────────

/// An orbit segment together with the indices where it enters the
/// desk-scale critical neighborhood.
#[derive(Debug, Clone)]
pub struct LambdaOrbit {
    pub segment: OrbitSegment,
    /// Indices `i` with `dist(x_i, Cr samples) < crit_radius`, sorted.
    pub hits: Vec<i64>,
    /// The crit radius the hits were measured with.
    pub crit_radius: f64,
}

/// Search for an orbit segment that revisits the critical neighborhood:
/// a backward hit at index ≤ −m_f and a forward hit at index ≥ 0.
///
/// Strategy: seeded restarts start just off a critical sample (offset
/// `crit_radius/4 … /2`, never exactly on the locus — orbits through the
/// exact fold line collapse onto the invariant line `x₁ = 0` and never
/// return). The trajectory is rolled forward until it re-enters the
/// neighborhood within `len_bwd` steps; the revisit becomes index 0, the
/// start becomes index `−t*`, and `len_fwd` further forward steps are
/// appended. All hits along the final segment are reported.
pub fn lambda_orbit_sample(
    map: &TorusMap,
    scan: &CriticalScan,
    crit_radius: f64,
    len_fwd: usize,
    len_bwd: usize,
    seed: u64,
    restarts: usize,
) -> Result<LambdaOrbit, TorusError> {
    let d = map.dim();
    if scan.samples.is_empty() || scan.m_f == 0 {
        return Err(TorusError::OrbitNotFound { restarts: 0 });
    }
    let mut rng = sampling::rng(seed);
    for _ in 0..restarts {
        let s = scan.samples[rng.gen_range(0..scan.samples.len())];
        let mut z = s;
        // Transversal offset keeps the orbit off the exact locus; a full
        // random jitter spreads restarts through the neighborhood.
        for i in 0..d {
            let r = crit_radius * (0.25 + 0.25 * rng.gen::<f64>());
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            z[i] = wrap(z[i] + sign * r / d as f64);
        }
        if scan.distance_to_samples(d, &z) >= crit_radius {
            continue;
        }
        // Roll forward looking for a revisit (the future index 0).
        let trial = forward_orbit(map, &z, len_bwd);
        let mut revisit: Option<usize> = None;
        for t in scan.m_f..=len_bwd {
            if scan.distance_to_samples(d, trial.point(t as i64)) < crit_radius {
                revisit = Some(t);
                break;
            }
        }
        let Some(t_star) = revisit else { continue };

        // Final segment: reuse the forward path, re-rooted at the revisit.
        let full = forward_orbit(map, &z, t_star + len_fwd);
        let points: Vec<Vec4> = (0..=(t_star + len_fwd))
            .map(|i| *full.point(i as i64))
            .collect();
        let jacobians: Vec<Matrix> =
            (0..(t_star + len_fwd)).map(|i| *full.jacobian(i as i64)).collect();
        let segment = OrbitSegment::new(-(t_star as i64), points, jacobians, d);
        let hits: Vec<i64> = (segment.lo()..=segment.hi())
            .filter(|&i| scan.distance_to_samples(d, segment.point(i)) < crit_radius)
            .collect();
        debug_assert!(hits.contains(&-(t_star as i64)) && hits.contains(&0));
        return Ok(LambdaOrbit { segment, hits, crit_radius });
    }
    Err(TorusError::OrbitNotFound { restarts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Fourth-order central differences of the n-fold composition — the
    /// oracle for the chain-rule consistency of `jacobian`.
    fn fd_jacobian_of_iterate(map: &TorusMap, x: &Vec4, n: usize, h: f64) -> Matrix {
        let d = map.dim();
        let iterate = |mut p: Vec4| -> Vec4 {
            for _ in 0..n {
                p = map.evaluate(&p);
            }
            p
        };
        // Work on the lift: accumulate wrapped differences step by step
        // is unreliable; instead evaluate at four stencil points and
        // unwrap each coordinate difference relative to the center.
        let center = iterate(*x);
        let mut out = Matrix::zeros(d);
        for c in 0..d {
            let eval = |offset: f64| -> Vec4 {
                let mut p = *x;
                p[c] = wrap(p[c] + offset);
                let q = iterate(p);
                let mut lifted = [0.0; 4];
                for i in 0..d {
                    lifted[i] = center[i] + wrap_half(q[i] - center[i]);
                }
                lifted
            };
            let p1 = eval(h);
            let m1 = eval(-h);
            let p2 = eval(2.0 * h);
            let m2 = eval(-2.0 * h);
            for r in 0..d {
                let deriv = (8.0 * (p1[r] - m1[r]) - (p2[r] - m2[r])) / (12.0 * h);
                out.set(r, c, deriv);
            }
        }
        out
    }

    #[test]
    fn fold_evaluate_at_critical_line() {
        let f = TorusMap::fold(2).unwrap();
        let y = f.evaluate(&[0.5, 0.3, 0.0, 0.0]);
        // g(1/2) = 1 + sin(π)/π = 1 ≡ 0 (mod 1).
        assert_abs_diff_eq!(y[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y[1], 0.6, epsilon = 1e-15);
    }

    #[test]
    fn fold_jacobian_special_points() {
        let f = TorusMap::fold(2).unwrap();
        let at_crit = f.jacobian(&[0.5, 0.1, 0.0, 0.0]);
        assert_abs_diff_eq!(at_crit.get(0, 0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(at_crit.get(1, 1), 2.0, epsilon = 1e-15);
        let at_zero = f.jacobian(&[0.0, 0.1, 0.0, 0.0]);
        assert_abs_diff_eq!(at_zero.get(0, 0), 4.0, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let maps = [
            TorusMap::fold(2).unwrap(),
            TorusMap::fold(3).unwrap(),
            TorusMap::fold_fold_expand(3).unwrap(),
            TorusMap::linear(Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 1.0]])).unwrap(),
        ];
        let mut rng = sampling::rng(3);
        for map in &maps {
            for _ in 0..5 {
                let mut x = [0.0; 4];
                for i in 0..map.dim() {
                    x[i] = rng.gen::<f64>();
                }
                let exact = map.jacobian(&x);
                let fd = fd_jacobian_of_iterate(map, &x, 1, 1e-4);
                for r in 0..map.dim() {
                    for c in 0..map.dim() {
                        assert_abs_diff_eq!(exact.get(r, c), fd.get(r, c), epsilon = 1e-6);
                    }
                }
            }
        }
    }

    /// Exact orbit-perturbation increment `f(x+δ) − f(x)` on the lift,
    /// written without cancellation (sine difference identity), so the
    /// derivative oracle below stays accurate at very small `h` even
    /// after ten expanding steps.
    fn shadow_step(map: &TorusMap, x: &Vec4, delta: &Vec4) -> Vec4 {
        use core::f64::consts::PI;
        let fold_increment = |xc: f64, dc: f64| -> f64 {
            2.0 * dc + (2.0 / PI) * math::cos(2.0 * PI * xc + PI * dc) * math::sin(PI * dc)
        };
        let mut out = [0.0; 4];
        match map {
            TorusMap::Linear(m) => out = m.apply(delta),
            TorusMap::Fold { k } => {
                out[0] = fold_increment(x[0], delta[0]);
                out[1] = *k as f64 * delta[1];
            }
            TorusMap::FoldFoldExpand { expand } => {
                out[0] = fold_increment(x[0], delta[0]);
                out[1] = fold_increment(x[1], delta[1]);
                out[2] = *expand as f64 * delta[2];
            }
        }
        out
    }

    /// Central difference of the shadow flow: `(δ_n(h) − δ_n(−h)) / 2h`
    /// approximates `Df^n(x)·dir` with error `O(h²)` and no roundoff
    /// blow-up.
    fn shadow_directional_derivative(
        map: &TorusMap,
        x: &Vec4,
        dir: &Vec4,
        n: usize,
        h: f64,
    ) -> Vec4 {
        let d = map.dim();
        let mut dp = [0.0; 4];
        let mut dm = [0.0; 4];
        for i in 0..d {
            dp[i] = h * dir[i];
            dm[i] = -h * dir[i];
        }
        let mut base = *x;
        for _ in 0..n {
            dp = shadow_step(map, &base, &dp);
            dm = shadow_step(map, &base, &dm);
            base = map.evaluate(&base);
        }
        let mut out = [0.0; 4];
        for i in 0..d {
            out[i] = (dp[i] - dm[i]) / (2.0 * h);
        }
        out
    }

    #[test]
    fn chain_rule_product_matches_iterate_derivative() {
        for map in [TorusMap::fold(2).unwrap(), TorusMap::fold(3).unwrap()] {
            let mut rng = sampling::rng(5);
            for _ in 0..5 {
                let x = [rng.gen::<f64>(), rng.gen::<f64>(), 0.0, 0.0];
                for n in [2usize, 5, 10] {
                    let orbit = forward_orbit(&map, &x, n);
                    let product = linalg::product_chain(&orbit.chain(0, n)).unwrap();
                    // Keep the end-time perturbation near 1e-5 so the
                    // quadratic truncation term stays below 1e-9.
                    let h = 1e-5 / math::powi(4.0, n as i32);
                    let scale = product.frob_norm().max(1.0);
                    for c in 0..map.dim() {
                        let mut e = [0.0; 4];
                        e[c] = 1.0;
                        let fd = shadow_directional_derivative(&map, &x, &e, n, h);
                        for r in 0..map.dim() {
                            let diff = math::abs(product.get(r, c) - fd[r]) / scale;
                            assert!(diff < 1e-8, "n={n} col {c}: chain-rule defect {diff}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn forward_orbit_stays_wrapped_and_consistent() {
        let map = TorusMap::fold(3).unwrap();
        let orbit = forward_orbit(&map, &[0.123, 0.456, 0.0, 0.0], 50);
        for i in 0..50 {
            let here = orbit.point(i);
            assert!((0.0..1.0).contains(&here[0]) && (0.0..1.0).contains(&here[1]));
            let next = map.evaluate(here);
            assert!(torus_distance(2, &next, orbit.point(i + 1)) < 1e-12);
        }
    }

    #[test]
    fn doubling_has_four_preimages() {
        let map = TorusMap::linear(Matrix::from_diag(&[2.0, 2.0])).unwrap();
        let pre = preimages(&map, &[0.37, 0.81, 0.0, 0.0], 8);
        assert_eq!(pre.len(), 4, "degree-4 covering must have 4 preimages");
        for p in &pre {
            let img = map.evaluate(&p.point);
            assert!(torus_distance(2, &img, &[0.37, 0.81, 0.0, 0.0]) <= 1e-10);
            assert_abs_diff_eq!(p.jacobian_conorm, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn fold_preimage_count_and_residuals() {
        // Fold with k = 2: degree 2 × 2 = 4 preimages for generic y.
        let map = TorusMap::fold(2).unwrap();
        let pre = preimages(&map, &[0.3, 0.7, 0.0, 0.0], 16);
        assert_eq!(pre.len(), 4);
        for p in &pre {
            let img = map.evaluate(&p.point);
            assert!(torus_distance(2, &img, &[0.3, 0.7, 0.0, 0.0]) <= 1e-10);
        }
    }

    #[test]
    fn preimages_near_critical_value_include_near_critical_root() {
        // y₁ near 0 pulls one first-coordinate preimage near the fold
        // line x₁ = 1/2 where the Jacobian conorm collapses.
        let map = TorusMap::fold(2).unwrap();
        let pre = preimages(&map, &[1e-6, 0.4, 0.0, 0.0], 32);
        let min_conorm = pre.iter().map(|p| p.jacobian_conorm).fold(f64::INFINITY, f64::min);
        assert!(min_conorm < 1e-1, "expected a near-critical branch, conorms {min_conorm}");
    }

    #[test]
    fn backward_branch_is_a_genuine_orbit() {
        let map = TorusMap::fold(2).unwrap();
        let x0 = [0.37, 0.21, 0.0, 0.0];
        let branch = backward_branch(&map, &x0, 6, 16, &BranchSelector::Seeded(9)).unwrap();
        assert_eq!(branch.lo(), -6);
        assert_eq!(branch.hi(), 0);
        for i in branch.lo()..branch.hi() {
            let img = map.evaluate(branch.point(i));
            assert!(torus_distance(2, &img, branch.point(i + 1)) <= 1e-10);
        }
        assert!(torus_distance(2, branch.point(0), &x0) < 1e-15);
    }

    #[test]
    fn critical_scan_finds_the_fold_line() {
        let map = TorusMap::fold(2).unwrap();
        let scan = critical_scan(&map, 64, 2, 1e-8);
        assert_eq!(scan.kappa, 1);
        assert_eq!(scan.m_f, 1);
        assert!(!scan.samples.is_empty());
        for s in &scan.samples {
            assert_abs_diff_eq!(s[0], 0.5, epsilon = 1e-12);
        }
        assert!(!scan.has_interior, "a critical hypersurface has no grid interior");
    }

    #[test]
    fn critical_scan_of_double_fold_reaches_kappa_two() {
        let map = TorusMap::fold_fold_expand(3).unwrap();
        let scan = critical_scan(&map, 16, 1, 1e-8);
        assert_eq!(scan.kappa, 2);
        assert_eq!(scan.m_f, 1);
        for s in &scan.samples {
            assert_abs_diff_eq!(s[0], 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(s[1], 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn critical_scan_of_linear_map_is_empty() {
        let map = TorusMap::linear(Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 1.0]])).unwrap();
        let scan = critical_scan(&map, 16, 2, 1e-8);
        assert_eq!(scan.kappa, 0);
        assert!(scan.samples.is_empty());
    }

    #[test]
    fn kernel_dimension_is_monotone_along_compositions() {
        // max(dim ker Df^n(y), dim ker Df^m(f^n y)) ≤ dim ker Df^{m+n}(y):
        // sampled at random points and at points snapped to the fold line.
        let map = TorusMap::fold(2).unwrap();
        let mut rng = sampling::rng(41);
        let kernel_dim = |x: &Vec4, m: usize| -> usize {
            let orbit = forward_orbit(&map, x, m);
            let svd = linalg::svd_of_chain(&orbit.chain(0, m));
            let lmax = svd.log_sigmas[1];
            if lmax == f64::NEG_INFINITY {
                2
            } else {
                svd.log_sigmas.iter().filter(|&&l| l <= lmax + (1e-8f64).ln()).count()
            }
        };
        for trial in 0..1000 {
            let mut x = [rng.gen::<f64>(), rng.gen::<f64>(), 0.0, 0.0];
            if trial % 4 == 0 {
                x[0] = 0.5; // exactly critical
            }
            let n = 1 + (trial % 3);
            let m = 1 + (trial % 2);
            if n + m > 6 {
                continue;
            }
            let fwd = forward_orbit(&map, &x, n);
            let lhs_a = kernel_dim(&x, n);
            let lhs_b = kernel_dim(fwd.point(n as i64), m);
            let rhs = kernel_dim(&x, n + m);
            assert!(
                lhs_a.max(lhs_b) <= rhs,
                "monotonicity failed at {x:?}: {lhs_a} vs {lhs_b} vs {rhs}"
            );
            assert!(rhs <= 1, "fold kernels never exceed the index");
        }
    }

    #[test]
    fn lambda_orbit_straddles_the_critical_neighborhood() {
        let map = TorusMap::fold(2).unwrap();
        let scan = critical_scan(&map, 256, 1, 1e-8);
        let orbit =
            lambda_orbit_sample(&map, &scan, 0.02, 40, 64, 2024, 200).expect("orbit search");
        assert!(orbit.hits.iter().any(|&h| h <= -1), "need a backward hit");
        assert!(orbit.hits.contains(&0), "revisit must be re-rooted at index 0");
        // The segment is a genuine orbit.
        for i in orbit.segment.lo()..orbit.segment.hi() {
            let img = map.evaluate(orbit.segment.point(i));
            assert!(torus_distance(2, &img, orbit.segment.point(i + 1)) < 1e-12);
        }
    }
}
