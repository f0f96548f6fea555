//! Report structure shared by every subcommand.
//!
//! Field declaration order is the JSON key order, so the emitted bytes
//! are a stable function of the analysis alone. Optional sections are
//! omitted entirely rather than emitted as `null`.

use serde::Serialize;

/// Version of the report layout, bumped on any structural change.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub map: MapSection,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub splitting: Option<SplittingSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cones: Option<ConeSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbSection>,
}

#[derive(Debug, Serialize)]
pub struct MapSection {
    pub kind: String,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expand: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub len: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct ScanSection {
    pub grid_res: usize,
    pub m_max: usize,
    pub rank_tol: f64,
    /// Largest kernel dimension seen among `Df^m`, `m <= m_max`.
    pub kappa: usize,
    /// Smallest iterate attaining it (0 when no rank drop exists).
    pub m_f: usize,
    /// Whether the grid found critical points at all.
    pub critical_points_found: bool,
    pub sample_count: usize,
    pub has_interior: bool,
    pub max_kernel_by_m: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct OrbitSection {
    pub seed: u64,
    pub crit_radius: f64,
    pub len_fwd: usize,
    pub len_bwd: usize,
    pub start: Vec<f64>,
    /// Indices whose points lie inside the critical neighborhood.
    pub hits: Vec<i64>,
}

#[derive(Debug, Serialize)]
pub struct SplittingSection {
    pub source: String,
    pub kappa: usize,
    pub kernel_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbit: Option<OrbitSection>,
    /// Index the limit diagnostics are anchored at.
    pub anchor: i64,
    pub family_indices: Vec<i64>,
    /// Indices where candidate construction failed its rank checks.
    pub skipped: usize,
    pub min_angle: f64,
    pub min_angle_required: f64,
    pub e_defect: f64,
    pub f_defect: f64,
    /// Certificate window length (the found domination time, or the
    /// configured cap when the search failed).
    pub ell: usize,
    pub factor: f64,
    pub max_ratio: f64,
    pub windows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domination_time: Option<usize>,
    pub domination_passes: bool,
    pub angle_ok: bool,
    pub invariance_ok: bool,
    pub passes: bool,
    /// Certified but with collapsing angles: no continuous extension.
    pub not_extendable: bool,
    pub gap: GapSection,
    pub cauchy: CauchySection,
    /// Per-window diagnostics backing the CSV format.
    pub rows: Vec<WindowRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<AgreementSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniqueness: Option<UniquenessSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Vec<FamilyEntry>>,
}

#[derive(Debug, Serialize)]
pub struct GapSection {
    pub ratios: Vec<f64>,
    pub zero_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_hat: Option<f64>,
    pub passes: bool,
}

#[derive(Debug, Serialize)]
pub struct CauchySection {
    pub distances: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_hat: Option<f64>,
    pub converged: bool,
    pub sub_geometric: bool,
    pub outlier_fraction: f64,
}

/// One window length at the anchor index: the two singular levels
/// around the splitting index, their ratio, and the Grassmann step of
/// the weak subspace sequence (absent where undefined).
#[derive(Debug, Serialize)]
pub struct WindowRow {
    pub n: usize,
    pub sigma_k_log: f64,
    pub sigma_k1_log: f64,
    pub ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cauchy_dist: Option<f64>,
}

/// Distance between the return-time family and the limit construction.
#[derive(Debug, Serialize)]
pub struct AgreementSection {
    pub e_distance: f64,
    pub f_distance: f64,
    pub f_depth: usize,
    pub f_converged: bool,
}

#[derive(Debug, Serialize)]
pub struct UniquenessSection {
    pub e_spread: f64,
    pub f_spread: f64,
    pub trials: usize,
    pub passes: bool,
}

#[derive(Debug, Serialize)]
pub struct FamilyEntry {
    pub index: i64,
    pub angle: f64,
    pub e: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct ConeSection {
    /// Cone count (one per family index).
    pub count: usize,
    pub half_angle_first: f64,
    pub half_angle_min: f64,
    /// The weak bundle stays transversal to its strong cone.
    pub e_transversal: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub containment: Option<ContainmentSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub near_critical: Option<NearCriticalSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sandwich: Option<SandwichSection>,
}

/// Invariance of the cone field: a member cone pushed through the
/// certified window must land strictly inside the cone at the landing
/// index (or, when no landing admits the limit construction, inside
/// the last member cone through the family-spanning window).
#[derive(Debug, Serialize)]
pub struct ContainmentSection {
    pub from_index: i64,
    pub to_index: i64,
    pub window_len: usize,
    pub margin: f64,
    pub ok: bool,
    pub worst_slack: f64,
    pub annihilated: usize,
    pub samples: usize,
}

#[derive(Debug, Serialize)]
pub struct ProbeSection {
    pub delta: f64,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps_to_target: Option<usize>,
    pub final_log_tan: f64,
}

#[derive(Debug, Serialize)]
pub struct NearCriticalSection {
    pub point: Vec<f64>,
    pub eta: f64,
    pub weak_norm: f64,
    pub dual_floor: f64,
    pub rho_star: f64,
    pub feasible: bool,
    pub samples: usize,
}

#[derive(Debug, Serialize)]
pub struct SandwichSection {
    pub e_to_v_angle: f64,
    pub f_image_angle: f64,
    pub relative_gap: f64,
    pub e_inside: bool,
    pub f_inside: bool,
}

#[derive(Debug, Serialize)]
pub struct PerturbSection {
    pub epsilon0: f64,
    /// Largest `‖Df‖` the budget is measured against.
    pub max_df_norm: f64,
    /// Rotation angle whose Franks cost stays within `epsilon0`.
    pub alpha: f64,
    pub delta: f64,
    pub n_bound: f64,
    pub instances: usize,
    pub l_cap: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minimal_length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raise: Option<RaiseSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raise_error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct RaiseSection {
    pub window: [i64; 2],
    pub tol: f64,
    pub kernel_dim_before: usize,
    pub kernel_dim_after: usize,
    pub max_theta: f64,
    pub max_budget: f64,
    pub total_budget: f64,
    pub success: bool,
    /// Rank of the perturbed window product against its norm scale.
    pub demo_rank: usize,
}
