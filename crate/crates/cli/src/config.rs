//! TOML analysis profiles.
//!
//! Parsing is fail-closed: unknown keys are rejected rather than
//! ignored, so a typo in a tolerance name cannot silently fall back to
//! a default. Every section has defaults and may be omitted entirely;
//! only `[map]` is mandatory.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// One analysis profile: a model plus the knobs of every stage.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub map: MapConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub orbit: OrbitConfig,
    #[serde(default)]
    pub splitting: SplittingConfig,
    #[serde(default)]
    pub cone: ConeConfig,
    #[serde(default)]
    pub perturb: PerturbConfig,
}

/// The model under analysis. Torus endomorphisms come in three kinds;
/// `shear-chain` is the catalog cocycle that is not a torus map at all
/// and only supports the splitting pipeline.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum MapConfig {
    /// `(x, y) ↦ (2x + sin(2πx)/π, k·y)` on the 2-torus.
    Fold { k: u32 },
    /// `(x, y, z) ↦ (g(x), g(y), expand·z)` on the 3-torus.
    FoldExpand { expand: u32 },
    /// A linear endomorphism given by an integer-entry matrix.
    Linear { matrix: Vec<Vec<f64>> },
    /// The harmonic shear cocycle `A_n = [[0, 1], [0, 1/(n+1)]]`.
    ShearChain { len: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    /// Grid resolution per torus dimension.
    pub grid_res: usize,
    /// Largest iterate whose differential is rank-scanned.
    pub m_max: usize,
    /// Relative singular-value threshold for a rank drop.
    pub rank_tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { grid_res: 256, m_max: 2, rank_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitConfig {
    /// Starting point for linear models (critical models search instead).
    pub start: Vec<f64>,
    /// Hit radius around the scanned critical samples.
    pub crit_radius: f64,
    pub len_fwd: usize,
    pub len_bwd: usize,
    /// Seed of the orbit search (overridable with `--seed`).
    pub seed: u64,
    /// Restart budget of the orbit search.
    pub restarts: usize,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            start: vec![0.1, 0.2, 0.05, 0.15],
            crit_radius: 0.02,
            len_fwd: 48,
            len_bwd: 28,
            seed: 2024,
            restarts: 100,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplittingConfig {
    /// How candidates are produced: `return-times`, `axes`, `eigen`, or
    /// `cone-limit`.
    pub source: String,
    /// Splitting index; by default the scanned kernel dimension (or 1).
    pub kappa: Option<usize>,
    /// Relative threshold deciding numerical kernels of window products.
    pub kernel_tol: f64,
    /// Largest window length tried by the domination search, and the
    /// certificate window when the search fails.
    pub ell: usize,
    /// Required contraction factor between the bundles.
    pub factor: f64,
    /// Smallest acceptable angle between the bundles.
    pub min_angle: f64,
    /// Window count for the gap-decay and Cauchy diagnostics.
    pub n_max: usize,
    /// Emit the per-index family (angles and basis vectors) verbatim.
    pub emit_family: bool,
    /// Demand a passing certificate: a report whose certificate fails
    /// then exits with the analysis-failure code instead of 0.
    pub require: bool,
}

impl Default for SplittingConfig {
    fn default() -> Self {
        SplittingConfig {
            source: "return-times".to_string(),
            kappa: None,
            kernel_tol: 1e-2,
            ell: 32,
            factor: 0.5,
            min_angle: 0.05,
            n_max: 25,
            emit_family: false,
            require: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConeConfig {
    /// Half-angle of the initial cone for the `cone-limit` source.
    pub eta: f64,
    /// Block length of the backward push.
    pub ell: usize,
    /// Depth budget of the backward push.
    pub max_depth: usize,
    /// Window count of the forward limit.
    pub n_max: usize,
    /// Convergence tolerance of both limit constructions.
    pub tol: f64,
    /// Initial half-angle of the contraction probe.
    pub probe_delta: f64,
    /// Target half-angle of the contraction probe.
    pub probe_epsilon: f64,
    /// Half-angle of the weak cone in the near-critical bounds.
    pub bound_eta: f64,
    /// Sample count for cone-floor and containment measurements.
    pub samples: usize,
}

impl Default for ConeConfig {
    fn default() -> Self {
        ConeConfig {
            eta: 0.6,
            ell: 2,
            max_depth: 8,
            n_max: 24,
            tol: 1e-9,
            probe_delta: 0.3,
            probe_epsilon: 0.05,
            bound_eta: 0.2,
            samples: 256,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbConfig {
    /// Operator-norm budget of the whole perturbation.
    pub epsilon0: f64,
    /// Per-step rotation budget of the mixing construction.
    pub delta: f64,
    /// Norm bound of the mixing corpus factors.
    pub n_bound: f64,
    /// Instance count of the mixing-length measurement.
    pub instances: usize,
    /// Longest chain the mixing-length measurement may use.
    pub l_cap: usize,
    /// Relative kernel threshold of the raising construction.
    pub raise_tol: f64,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig {
            epsilon0: 2.0,
            delta: 0.1,
            n_bound: 2.0,
            instances: 20,
            l_cap: 256,
            raise_tol: 5e-3,
        }
    }
}

/// Read and validate a profile.
pub fn load(path: &Path) -> Result<Config, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let cfg: Config = toml::from_str(&text).map_err(|source| ConfigError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &Config) -> Result<(), ConfigError> {
    let bad = |msg: String| Err(ConfigError::Invalid(msg));
    match &cfg.map {
        MapConfig::Fold { k } => {
            if *k < 2 {
                return bad(format!("fold multiplier k = {k} does not expand the fiber"));
            }
        }
        MapConfig::FoldExpand { expand } => {
            if *expand < 2 {
                return bad(format!("expansion factor {expand} does not expand the fiber"));
            }
        }
        MapConfig::Linear { matrix } => {
            let d = matrix.len();
            if !(2..=4).contains(&d) || matrix.iter().any(|row| row.len() != d) {
                return bad("linear matrix must be square with dimension 2..=4".to_string());
            }
        }
        MapConfig::ShearChain { len } => {
            if *len < 3 {
                return bad(format!("shear chain of length {len} has no interior index"));
            }
        }
    }
    if cfg.scan.grid_res < 16 || cfg.scan.m_max < 1 {
        return bad("scan needs grid_res >= 16 and m_max >= 1".to_string());
    }
    if !(cfg.scan.rank_tol > 0.0) {
        return bad("scan.rank_tol must be positive".to_string());
    }
    if !(cfg.orbit.crit_radius > 0.0) || cfg.orbit.len_fwd == 0 {
        return bad("orbit needs a positive crit_radius and len_fwd >= 1".to_string());
    }
    let src = cfg.splitting.source.as_str();
    if !matches!(src, "return-times" | "axes" | "eigen" | "cone-limit") {
        return bad(format!(
            "unknown splitting source {src:?} (expected return-times, axes, eigen, or cone-limit)"
        ));
    }
    if !(cfg.splitting.kernel_tol > 0.0 && cfg.splitting.kernel_tol < 1.0) {
        return bad("splitting.kernel_tol must lie in (0, 1)".to_string());
    }
    if cfg.splitting.ell == 0 || cfg.splitting.n_max < 2 {
        return bad("splitting needs ell >= 1 and n_max >= 2".to_string());
    }
    if !(cfg.splitting.factor > 0.0 && cfg.splitting.factor < 1.0) {
        return bad("splitting.factor must lie in (0, 1)".to_string());
    }
    if !(cfg.splitting.min_angle > 0.0) {
        return bad("splitting.min_angle must be positive".to_string());
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    if !(cfg.cone.eta > 0.0 && cfg.cone.eta < half_pi)
        || !(cfg.cone.bound_eta > 0.0 && cfg.cone.bound_eta < half_pi)
    {
        return bad("cone half-angles must lie in (0, pi/2)".to_string());
    }
    if cfg.cone.ell == 0 || cfg.cone.max_depth == 0 || cfg.cone.n_max < 2 {
        return bad("cone needs ell >= 1, max_depth >= 1 and n_max >= 2".to_string());
    }
    if !(cfg.cone.tol > 0.0) || cfg.cone.samples == 0 {
        return bad("cone needs a positive tol and samples >= 1".to_string());
    }
    if !(cfg.cone.probe_epsilon > 0.0 && cfg.cone.probe_epsilon < cfg.cone.probe_delta)
        || !(cfg.cone.probe_delta < half_pi)
    {
        return bad("cone probe needs 0 < probe_epsilon < probe_delta < pi/2".to_string());
    }
    if !(cfg.perturb.epsilon0 > 0.0) || !(cfg.perturb.delta > 0.0) {
        return bad("perturb budgets must be positive".to_string());
    }
    if cfg.perturb.n_bound < 1.0 {
        return bad("perturb.n_bound must be at least 1".to_string());
    }
    if cfg.perturb.instances == 0 || cfg.perturb.l_cap == 0 {
        return bad("perturb needs instances >= 1 and l_cap >= 1".to_string());
    }
    if !(cfg.perturb.raise_tol > 0.0 && cfg.perturb.raise_tol < 1.0) {
        return bad("perturb.raise_tol must lie in (0, 1)".to_string());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Config, ConfigError> {
        let cfg: Config = toml::from_str(text)
            .map_err(|source| ConfigError::Parse { path: "<inline>".into(), source })?;
        validate(&cfg)?;
        Ok(cfg)
    }

    #[test]
    fn the_minimal_profile_is_a_map_alone() {
        let cfg = parse("[map]\nkind = \"fold\"\nk = 2\n").unwrap();
        assert!(matches!(cfg.map, MapConfig::Fold { k: 2 }));
        assert_eq!(cfg.scan.grid_res, 256);
        assert_eq!(cfg.splitting.source, "return-times");
    }

    #[test]
    fn unknown_keys_are_rejected_not_ignored() {
        let err = parse("[map]\nkind = \"fold\"\nk = 2\n[scan]\ngrid_rez = 64\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }), "got {err}");
    }

    #[test]
    fn out_of_range_knobs_are_rejected() {
        let err =
            parse("[map]\nkind = \"fold\"\nk = 2\n[splitting]\nfactor = 1.5\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)), "got {err}");
        let err = parse("[map]\nkind = \"linear\"\nmatrix = [[2.0, 1.0]]\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)), "got {err}");
    }
}
