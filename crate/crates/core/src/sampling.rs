//! Deterministic sampling utilities: seeded ChaCha streams and
//! low-discrepancy direction generators used by the sampled checks
//! (restricted norms, cone memberships, invariance margins).
//!
//! Everything here is keyed by an explicit `u64` seed so that repeated
//! runs — and runs sharded across threads — produce identical output.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;

/// Golden-ratio conjugate, the classic increment for 1-D Kronecker
/// (low-discrepancy) sequences.
const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Seeded RNG used across the crate. ChaCha8 keeps full determinism and
/// is fast enough for the corpus sizes we use (≤ 10⁶ draws).
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in `[lo, hi)` from a seeded RNG.
pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Fractional part in `[0, 1)` (works under `no_std`).
fn frac(x: f64) -> f64 {
    x - math::floor(x)
}

/// `count` low-discrepancy points in `[0,1)`, phase-shifted by `seed`.
///
/// Kronecker sequence `frac(phase + k·φ)`: well spread for every prefix,
/// and distinct seeds give distinct phases.
pub fn kronecker(seed: u64, count: usize) -> Vec<f64> {
    let phase = frac(seed as f64 * GOLDEN);
    (0..count).map(|k| frac(phase + k as f64 * GOLDEN)).collect()
}

/// `count` unit vectors in ℝ^`dim`, low-discrepancy for `dim ≤ 2` and
/// seeded-uniform (normalized Gaussian-free rejection) otherwise.
///
/// For `dim == 1` this is just `±1`; for `dim == 2` the angles follow a
/// Kronecker sequence on the circle. Higher dimensions draw from the
/// seeded RNG and normalize, which is plenty uniform for the sampled
/// bounds we certify (the exact extremes are always computed through the
/// SVD; sampling only cross-checks them).
pub fn unit_vectors(seed: u64, dim: usize, count: usize) -> Vec<Vec<f64>> {
    assert!(dim >= 1 && dim <= 4, "ambient dimension must be 1..=4");
    let mut out = Vec::with_capacity(count);
    match dim {
        1 => {
            for k in 0..count {
                out.push(alloc::vec![if k % 2 == 0 { 1.0 } else { -1.0 }]);
            }
        }
        2 => {
            for t in kronecker(seed, count) {
                let a = 2.0 * core::f64::consts::PI * t;
                out.push(alloc::vec![math::cos(a), math::sin(a)]);
            }
        }
        _ => {
            let mut r = rng(seed);
            while out.len() < count {
                let v: Vec<f64> = (0..dim).map(|_| r.gen::<f64>() * 2.0 - 1.0).collect();
                let n = math::sqrt(v.iter().map(|x| x * x).sum());
                if n > 1e-3 {
                    out.push(v.iter().map(|x| x / n).collect());
                }
            }
        }
    }
    out
}
