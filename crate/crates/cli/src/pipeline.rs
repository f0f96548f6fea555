//! Analysis lanes behind the subcommands.
//!
//! Every lane is deterministic: the only randomness flows from the
//! orbit seed in the profile and the probe seed on the command line,
//! so rerunning a command with the same inputs reproduces the report
//! byte for byte.

use std::fmt;

use domsplit_core::{
    cocycle::{self, CocycleSegment},
    cone::{self, Cone},
    critical,
    linalg::{self, Vec4},
    perturb,
    splitting::{self, CandidateSplit, SplittingFamily},
    subspace,
    torus::{self, CriticalScan, OrbitSegment, TorusMap},
    ChainSvd, Matrix, Subspace,
};

use crate::config::{Config, MapConfig};
use crate::report::{
    AgreementSection, CauchySection, ConeSection, ContainmentSection, FamilyEntry, GapSection,
    MapSection, NearCriticalSection, OrbitSection, PerturbSection, ProbeSection, RaiseSection,
    Report, SandwichSection, ScanSection, SplittingSection, UniquenessSection, WindowRow,
    SCHEMA_VERSION,
};

/// Invariance-defect gate of the certificate.
const DEFECT_TOL: f64 = 1e-6;
/// Trial count and spread gate of the uniqueness probe.
const UNIQ_TRIALS: usize = 16;
const UNIQ_TOL: f64 = 1e-6;
/// Passage gaps eligible for the kernel-raising window: long enough to
/// hold a mixed stretch, short enough to keep the budget bounded.
const RAISE_GAP_MIN: i64 = 2;
const RAISE_GAP_MAX: i64 = 24;

#[derive(Debug, Clone, Copy)]
pub enum CommandKind {
    Scan,
    Splitting,
    Conecheck,
    Perturb,
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            CommandKind::Scan => "scan",
            CommandKind::Splitting => "splitting",
            CommandKind::Conecheck => "conecheck",
            CommandKind::Perturb => "perturb",
        }
    }
}

/// Failures split by exit code: profile problems (2) against analyses
/// that ran and came up empty (3).
#[derive(Debug)]
pub enum PipelineError {
    Config(String),
    Analysis(String),
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Config(msg) => write!(f, "invalid config: {msg}"),
            PipelineError::Analysis(msg) => write!(f, "analysis failed: {msg}"),
        }
    }
}

/// Outcome of a run: the report plus whether a demanded certificate
/// was missed (the report is still emitted; the exit code escalates).
pub struct RunOutcome {
    pub report: Report,
    pub certificate_demand_failed: bool,
}

pub fn run(kind: CommandKind, cfg: &Config, seed: u64) -> Result<RunOutcome, PipelineError> {
    let (model, map_section) = build_model(cfg)?;
    let mut report = Report {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: kind.name().to_string(),
        map: map_section,
        seed,
        scan: None,
        splitting: None,
        cones: None,
        perturbation: None,
    };
    let mut certificate_demand_failed = false;

    match kind {
        CommandKind::Scan => {
            let Model::Torus(map) = &model else {
                return Err(PipelineError::Config(
                    "the scan stage needs a pointwise torus map; the shear chain has no \
                     underlying space"
                        .to_string(),
                ));
            };
            let scan =
                torus::critical_scan(map, cfg.scan.grid_res, cfg.scan.m_max, cfg.scan.rank_tol);
            report.scan = Some(scan_section_of(cfg, &scan));
        }
        CommandKind::Splitting | CommandKind::Conecheck => {
            let mut prep = prepare(&model, cfg)?;
            report.scan = prep.scan_section.take();
            let built = build_splitting(&mut prep, cfg, seed)?;
            if cfg.splitting.require && !built.section.passes {
                certificate_demand_failed = true;
            }
            if matches!(kind, CommandKind::Conecheck) {
                report.cones = Some(build_cones(
                    &prep,
                    cfg,
                    seed,
                    built.kappa,
                    &built.family,
                    built.anchor_candidate.as_ref(),
                    built.section.ell,
                )?);
            }
            report.splitting = Some(built.section);
        }
        CommandKind::Perturb => {
            let mut prep = prepare(&model, cfg)?;
            report.scan = prep.scan_section.take();
            report.perturbation = Some(build_perturb(&prep, cfg, seed)?);
        }
    }

    Ok(RunOutcome { report, certificate_demand_failed })
}

// ───────────────────────────── model building ─────────────────────────────

enum Model {
    Torus(TorusMap),
    Shear { len: usize },
}

fn build_model(cfg: &Config) -> Result<(Model, MapSection), PipelineError> {
    let section = |kind: &str, dim: usize| MapSection {
        kind: kind.to_string(),
        dim,
        k: None,
        expand: None,
        matrix: None,
        len: None,
    };
    match &cfg.map {
        MapConfig::Fold { k } => {
            let map = TorusMap::fold(*k)
                .map_err(|e| PipelineError::Config(format!("fold map rejected: {e}")))?;
            let mut s = section("fold", map.dim());
            s.k = Some(*k);
            Ok((Model::Torus(map), s))
        }
        MapConfig::FoldExpand { expand } => {
            let map = TorusMap::fold_fold_expand(*expand)
                .map_err(|e| PipelineError::Config(format!("fold-expand map rejected: {e}")))?;
            let mut s = section("fold-expand", map.dim());
            s.expand = Some(*expand);
            Ok((Model::Torus(map), s))
        }
        MapConfig::Linear { matrix } => {
            let rows: Vec<&[f64]> = matrix.iter().map(|r| r.as_slice()).collect();
            let m = Matrix::from_rows(&rows);
            let map = TorusMap::linear(m)
                .map_err(|e| PipelineError::Config(format!("linear map rejected: {e}")))?;
            let mut s = section("linear", map.dim());
            s.matrix = Some(matrix.clone());
            Ok((Model::Torus(map), s))
        }
        MapConfig::ShearChain { len } => {
            let mut s = section("shear-chain", 2);
            s.len = Some(*len);
            Ok((Model::Shear { len: *len }, s))
        }
    }
}

// ───────────────────────────── preparation ─────────────────────────────

/// Everything the analysis lanes share: the cocycle segment, the
/// critical data that produced it, and the anchor index where the
/// window diagnostics live.
struct Prepared {
    dim: usize,
    seg: CocycleSegment,
    /// Orbit points behind the segment (absent for the shear chain).
    orbit: Option<OrbitSegment>,
    orbit_section: Option<OrbitSection>,
    scan_section: Option<ScanSection>,
    hits: Vec<i64>,
    /// Effective splitting index; unresolved when the model has no
    /// rank drop and the profile sets no override.
    kappa: Option<usize>,
    m_f: usize,
    anchor: i64,
}

fn scan_section_of(cfg: &Config, scan: &CriticalScan) -> ScanSection {
    ScanSection {
        grid_res: cfg.scan.grid_res,
        m_max: cfg.scan.m_max,
        rank_tol: cfg.scan.rank_tol,
        kappa: scan.kappa,
        m_f: scan.m_f,
        critical_points_found: !scan.samples.is_empty(),
        sample_count: scan.samples.len(),
        has_interior: scan.has_interior,
        max_kernel_by_m: scan.max_kernel_by_m.clone(),
    }
}

fn resolve_kappa(cfg: &Config, scanned: usize, dim: usize) -> Result<usize, PipelineError> {
    let kappa = cfg.splitting.kappa.unwrap_or(scanned);
    if kappa >= 1 && kappa < dim {
        Ok(kappa)
    } else {
        Err(PipelineError::Config(format!(
            "splitting index {kappa} does not split dimension {dim}"
        )))
    }
}

fn start_point(cfg: &Config, dim: usize) -> Result<Vec4, PipelineError> {
    if cfg.orbit.start.len() < dim {
        return Err(PipelineError::Config(format!(
            "orbit.start has {} coordinates but the map lives on the {dim}-torus",
            cfg.orbit.start.len()
        )));
    }
    let mut p = [0.0; 4];
    p[..dim].copy_from_slice(&cfg.orbit.start[..dim]);
    Ok(p)
}

fn point_coords(p: &Vec4, dim: usize) -> Vec<f64> {
    p[..dim].to_vec()
}

fn prepare(model: &Model, cfg: &Config) -> Result<Prepared, PipelineError> {
    match model {
        Model::Shear { len } => {
            let seg = cocycle::harmonic_shear_chain(*len);
            // Every step matrix kills one direction, so every index is
            // a critical passage with a one-step crush block.
            let hits: Vec<i64> = (seg.lo()..seg.hi()).collect();
            let anchor = seg.lo() + (seg.hi() - seg.lo()) / 2;
            Ok(Prepared {
                dim: 2,
                seg,
                orbit: None,
                orbit_section: None,
                scan_section: None,
                hits,
                kappa: Some(1),
                m_f: 1,
                anchor,
            })
        }
        Model::Torus(map) => {
            let dim = map.dim();
            if map.has_critical_points() {
                let scan = torus::critical_scan(
                    map,
                    cfg.scan.grid_res,
                    cfg.scan.m_max,
                    cfg.scan.rank_tol,
                );
                let scan_section = Some(scan_section_of(cfg, &scan));
                if scan.samples.is_empty() {
                    return Err(PipelineError::Analysis(
                        "the map should have critical points but the grid found none; \
                         raise scan.grid_res"
                            .to_string(),
                    ));
                }
                let kappa = resolve_kappa(cfg, scan.kappa, dim)?;
                let lambda = torus::lambda_orbit_sample(
                    map,
                    &scan,
                    cfg.orbit.crit_radius,
                    cfg.orbit.len_fwd,
                    cfg.orbit.len_bwd,
                    cfg.orbit.seed,
                    cfg.orbit.restarts,
                )
                .map_err(|e| PipelineError::Analysis(format!("orbit search failed: {e}")))?;
                let seg = CocycleSegment::from_orbit(&lambda.segment);
                let anchor = lambda
                    .hits
                    .iter()
                    .copied()
                    .find(|&h| h >= 0)
                    .unwrap_or(seg.lo() + (seg.hi() - seg.lo()) / 2);
                let orbit_section = Some(OrbitSection {
                    seed: cfg.orbit.seed,
                    crit_radius: cfg.orbit.crit_radius,
                    len_fwd: cfg.orbit.len_fwd,
                    len_bwd: cfg.orbit.len_bwd,
                    start: point_coords(lambda.segment.point(lambda.segment.lo()), dim),
                    hits: lambda.hits.clone(),
                });
                Ok(Prepared {
                    dim,
                    seg,
                    orbit: Some(lambda.segment),
                    orbit_section,
                    scan_section,
                    hits: lambda.hits,
                    kappa: Some(kappa),
                    m_f: scan.m_f,
                    anchor,
                })
            } else {
                // No critical points: one plain forward orbit from the
                // configured start; the cocycle is constant for linear
                // maps, so the start only matters for reproducibility.
                let start = start_point(cfg, dim)?;
                let orbit = torus::forward_orbit(map, &start, cfg.orbit.len_fwd);
                let seg = CocycleSegment::from_orbit(&orbit);
                let anchor = seg.lo() + (seg.hi() - seg.lo()) / 2;
                let kappa = match cfg.splitting.kappa {
                    Some(k) if k >= 1 && k < dim => Some(k),
                    Some(k) => {
                        return Err(PipelineError::Config(format!(
                            "splitting index {k} does not split dimension {dim}"
                        )))
                    }
                    None => None,
                };
                Ok(Prepared {
                    dim,
                    seg,
                    orbit: Some(orbit),
                    orbit_section: None,
                    scan_section: None,
                    hits: Vec::new(),
                    kappa,
                    m_f: 0,
                    anchor,
                })
            }
        }
    }
}

// ───────────────────────────── splitting lane ─────────────────────────────

struct BuiltSplitting {
    section: SplittingSection,
    family: SplittingFamily,
    /// The limit-construction pair at the anchor, when it converged.
    anchor_candidate: Option<CandidateSplit>,
    kappa: usize,
}

fn analysis<E: fmt::Display>(e: E) -> PipelineError {
    PipelineError::Analysis(e.to_string())
}

fn build_splitting(
    prep: &mut Prepared,
    cfg: &Config,
    seed: u64,
) -> Result<BuiltSplitting, PipelineError> {
    let kappa = prep.kappa.ok_or_else(|| {
        PipelineError::Config(
            "splitting.kappa must be set explicitly for maps without critical points"
                .to_string(),
        )
    })?;
    let seg = &prep.seg;
    let d = prep.dim;

    // Candidate family, by the configured construction.
    let src = cfg.splitting.source.as_str();
    let (family, skipped) = match src {
        "return-times" => {
            if prep.hits.is_empty() || prep.m_f == 0 {
                return Err(PipelineError::Config(
                    "splitting source \"return-times\" needs critical passages; this model \
                     has none — use \"axes\", \"eigen\", or \"cone-limit\""
                        .to_string(),
                ));
            }
            let (family, failures) =
                splitting::build_family(seg, &prep.hits, prep.m_f, kappa, cfg.splitting.kernel_tol);
            (family, failures.len())
        }
        "axes" => {
            let (e, f) = splitting::axes_splitting(d, kappa);
            let mut family = SplittingFamily::new();
            for i in seg.lo()..=seg.hi() {
                family.push(i, e.clone(), f.clone());
            }
            (family, 0)
        }
        "eigen" => {
            if d != 2 {
                return Err(PipelineError::Config(
                    "splitting source \"eigen\" is only defined for 2-dimensional models"
                        .to_string(),
                ));
            }
            let (e, f) = splitting::eigen_splitting_2d(seg.matrix(seg.lo())).ok_or_else(|| {
                PipelineError::Analysis(
                    "no real eigenbasis: the step matrix has complex or repeated eigenvalues"
                        .to_string(),
                )
            })?;
            let mut family = SplittingFamily::new();
            for i in seg.lo()..=seg.hi() {
                family.push(i, e.clone(), f.clone());
            }
            (family, 0)
        }
        "cone-limit" => {
            let (_, axes_f) = splitting::axes_splitting(d, kappa);
            let cone = Cone::new(axes_f, cfg.cone.eta).map_err(analysis)?;
            let mut family = SplittingFamily::new();
            let mut skipped = 0usize;
            for i in seg.lo()..=seg.hi() {
                if !seg.has_window(i, cfg.splitting.n_max)
                    || i - (cfg.cone.ell as i64) < seg.lo()
                {
                    continue;
                }
                match splitting::cone_limit_splitting(
                    seg,
                    i,
                    kappa,
                    &cone,
                    cfg.cone.ell,
                    cfg.cone.max_depth,
                    cfg.splitting.n_max,
                    cfg.cone.tol,
                ) {
                    Ok((c, _, _)) => family.push(i, c.e, c.f),
                    Err(_) => skipped += 1,
                }
            }
            (family, skipped)
        }
        other => {
            return Err(PipelineError::Config(format!("unknown splitting source {other:?}")))
        }
    };
    if family.is_empty() {
        return Err(PipelineError::Analysis(
            "no index produced a candidate splitting".to_string(),
        ));
    }

    // Domination search, then the certificate at the found window (or
    // at the cap, to document the failure numbers).
    let dom_time =
        splitting::find_domination_time(seg, &family, cfg.splitting.ell, cfg.splitting.factor)
            .map_err(analysis)?;
    let ell_used = dom_time.unwrap_or(cfg.splitting.ell);
    let cert = splitting::certify(
        seg,
        &family,
        kappa,
        ell_used,
        cfg.splitting.factor,
        cfg.splitting.min_angle,
        DEFECT_TOL,
    )
    .map_err(analysis)?;
    let not_extendable =
        cert.domination_passes && cert.invariance_ok && cert.min_angle < cfg.splitting.min_angle;

    // Window diagnostics at the anchor: the singular gap with its decay
    // fit, and the weak-subspace sequence with its Cauchy record.
    let avail = (seg.hi() - prep.anchor).max(0) as usize;
    let n_max = cfg.splitting.n_max.min(avail);
    if n_max < 2 {
        return Err(PipelineError::Analysis(format!(
            "only {avail} forward steps at the anchor; the window diagnostics need at \
             least 2 (raise orbit.len_fwd)"
        )));
    }
    let gap = cocycle::gap_report(seg, prep.anchor, kappa, n_max).map_err(analysis)?;
    let gap_section = GapSection {
        ratios: gap.ratios.clone(),
        zero_count: gap.zero_count,
        lambda_hat: gap.lambda_hat,
        c_hat: gap.c_hat,
        passes: gap.passes,
    };

    let mut acc = ChainSvd::identity(d);
    let mut per_n: Vec<(usize, f64, f64, f64, Option<Subspace>)> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        acc.push(seg.matrix(prep.anchor + (n - 1) as i64));
        let e_n = cocycle::en_subspace(&acc, kappa).ok();
        per_n.push((
            n,
            acc.log_sigmas[kappa - 1],
            acc.log_sigmas[kappa],
            acc.sigma_ratio(kappa - 1, kappa),
            e_n,
        ));
    }
    let n0 = per_n.iter().find(|r| r.4.is_some()).map(|r| r.0);
    let sequence: Vec<Subspace> =
        per_n.iter().filter_map(|r| r.4.clone()).collect();
    let cauchy = if sequence.len() >= 2 {
        match subspace::subspace_limit(&sequence, cfg.cone.tol) {
            Ok(c) => CauchySection {
                distances: c.distances,
                lambda_hat: c.lambda_hat,
                c_hat: c.c_hat,
                converged: c.converged,
                sub_geometric: c.sub_geometric,
                outlier_fraction: c.outlier_fraction,
            },
            Err(e) => return Err(analysis(e)),
        }
    } else {
        CauchySection {
            distances: Vec::new(),
            lambda_hat: None,
            c_hat: None,
            converged: false,
            sub_geometric: false,
            outlier_fraction: 0.0,
        }
    };
    let rows: Vec<WindowRow> = match n0 {
        None => Vec::new(),
        Some(n0) => per_n[n0 - 1..]
            .iter()
            .map(|(n, lo, hi, ratio, e_n)| {
                // The Cauchy step at n compares E at n−1 and n; absent
                // at n0 and wherever the gap closed on either side.
                let prev = if *n > n0 { per_n[n - 2].4.as_ref() } else { None };
                let cauchy_dist = match (prev, e_n.as_ref()) {
                    (Some(a), Some(b)) => subspace::grassmann_distance(a, b).ok(),
                    _ => None,
                };
                WindowRow {
                    n: *n,
                    sigma_k_log: *lo,
                    sigma_k1_log: *hi,
                    ratio: *ratio,
                    cauchy_dist,
                }
            })
            .collect(),
    };

    // Agreement between the family and the limit construction at the
    // anchor, seeded from the cone of the nearest family member.
    let slot = nearest_slot(&family, prep.anchor);
    let mut agreement = None;
    let mut anchor_candidate = None;
    if let Ok(cones) = splitting::splitting_to_cone(&family) {
        if let Ok((cand, _, f_rep)) = splitting::cone_limit_splitting(
            seg,
            prep.anchor,
            kappa,
            &cones[slot].1,
            cfg.cone.ell,
            cfg.cone.max_depth,
            n_max,
            cfg.cone.tol,
        ) {
            let e_distance = subspace::grassmann_distance(&family.e[slot], &cand.e);
            let f_distance = subspace::grassmann_distance(&family.f[slot], &cand.f);
            if let (Ok(e_distance), Ok(f_distance)) = (e_distance, f_distance) {
                agreement = Some(AgreementSection {
                    e_distance,
                    f_distance,
                    f_depth: f_rep.depth_used,
                    f_converged: f_rep.converged,
                });
                anchor_candidate = Some(cand);
            }
        }
    }

    // Uniqueness evidence across the whole certified stretch.
    let uniqueness = match (family.indices.first(), family.indices.last()) {
        (Some(&first), Some(&last)) if last > first => {
            splitting::uniqueness_probe(seg, first, last, kappa, seed, UNIQ_TRIALS, UNIQ_TOL)
                .ok()
                .map(|p| UniquenessSection {
                    e_spread: p.e_spread,
                    f_spread: p.f_spread,
                    trials: p.trials,
                    passes: p.passes,
                })
        }
        _ => None,
    };

    let family_entries = cfg.splitting.emit_family.then(|| {
        (0..family.len())
            .map(|s| FamilyEntry {
                index: family.indices[s],
                angle: subspace::angle_between(&family.e[s], &family.f[s]).unwrap_or(0.0),
                e: family.e[s].basis().iter().map(|v| point_coords(v, d)).collect(),
                f: family.f[s].basis().iter().map(|v| point_coords(v, d)).collect(),
            })
            .collect::<Vec<_>>()
    });

    let section = SplittingSection {
        source: src.to_string(),
        kappa,
        kernel_tol: cfg.splitting.kernel_tol,
        orbit: prep.orbit_section.take(),
        anchor: prep.anchor,
        family_indices: family.indices.clone(),
        skipped,
        min_angle: cert.min_angle,
        min_angle_required: cfg.splitting.min_angle,
        e_defect: cert.e_defect,
        f_defect: cert.f_defect,
        ell: cert.ell,
        factor: cert.factor,
        max_ratio: cert.max_ratio,
        windows: cert.windows,
        domination_time: dom_time,
        domination_passes: cert.domination_passes,
        angle_ok: cert.angle_ok,
        invariance_ok: cert.invariance_ok,
        passes: cert.passes,
        not_extendable,
        gap: gap_section,
        cauchy,
        rows,
        agreement,
        uniqueness,
        family: family_entries,
    };
    Ok(BuiltSplitting { section, family, anchor_candidate, kappa })
}

fn nearest_slot(family: &SplittingFamily, anchor: i64) -> usize {
    let mut best = 0usize;
    let mut best_distance = i64::MAX;
    for (s, &i) in family.indices.iter().enumerate() {
        let distance = (i - anchor).abs();
        if distance < best_distance {
            best_distance = distance;
            best = s;
        }
    }
    best
}

// ───────────────────────────── cone lane ─────────────────────────────

/// Required interior clearance, in radians, for a cone image to count as
/// strictly contained.
const CONE_MARGIN: f64 = 0.01;

fn build_cones(
    prep: &Prepared,
    cfg: &Config,
    seed: u64,
    kappa: usize,
    family: &SplittingFamily,
    anchor_candidate: Option<&CandidateSplit>,
    ell_used: usize,
) -> Result<ConeSection, PipelineError> {
    let seg = &prep.seg;
    let cones = splitting::splitting_to_cone(family)
        .map_err(|e| PipelineError::Analysis(format!("cone construction failed: {e}")))?;
    let count = cones.len();
    let half_angle_first = cones[0].1.half_angle();
    let half_angle_min =
        cones.iter().map(|(_, c)| c.half_angle()).fold(f64::INFINITY, f64::min);
    let e_transversal = (0..family.len())
        .all(|s| cone::subspace_transversal_to_cone(&family.e[s], &cones[s].1));

    // Invariance of the cone field through the certified window: a member
    // cone, pushed forward ell steps, must land strictly inside the cone
    // rebuilt at the landing index by the limit construction.  Members are
    // tried in order and the first feasible landing is used; when no landing
    // admits the limit construction (no persistent singular gap there), fall
    // back to the window linking the first and last members, whose endpoint
    // cones both exist by construction.
    struct InvarianceWindow {
        from: i64,
        to: i64,
        window: Vec<Matrix>,
        src: Cone,
        dst: Cone,
    }
    let ell_window = ell_used.max(1);
    let mut invariance: Option<InvarianceWindow> = None;
    for (i, src) in &cones {
        if !seg.has_window(*i, ell_window) {
            continue;
        }
        let j = i + ell_window as i64;
        let slot = nearest_slot(family, j);
        let landing = splitting::cone_limit_splitting(
            seg,
            j,
            kappa,
            &cones[slot].1,
            cfg.cone.ell,
            cfg.cone.max_depth,
            cfg.cone.n_max,
            cfg.cone.tol,
        );
        let Ok((cand, _, f_rep)) = landing else { continue };
        if !f_rep.converged {
            continue;
        }
        let Ok(dst) = Cone::new(cand.f, cand.angle / 2.0) else { continue };
        let Ok(window) = seg.window(*i, ell_window) else { continue };
        invariance = Some(InvarianceWindow { from: *i, to: j, window, src: src.clone(), dst });
        break;
    }
    if invariance.is_none() && cones.len() >= 2 {
        let from = cones[0].0;
        let last = cones.last().expect("nonempty family");
        let span = (last.0 - from).max(0) as usize;
        if span >= 1 && seg.has_window(from, span) {
            if let Ok(window) = seg.window(from, span) {
                invariance = Some(InvarianceWindow {
                    from,
                    to: last.0,
                    window,
                    src: cones[0].1.clone(),
                    dst: last.1.clone(),
                });
            }
        }
    }
    let containment = invariance.as_ref().and_then(|iw| {
        let a = linalg::product_chain(&iw.window).ok()?;
        let rep =
            cone::cone_image_contained(&a, &iw.src, &iw.dst, CONE_MARGIN, seed, cfg.cone.samples);
        Some(ContainmentSection {
            from_index: iw.from,
            to_index: iw.to,
            window_len: iw.window.len(),
            margin: CONE_MARGIN,
            ok: rep.ok,
            worst_slack: rep.worst_slack,
            annihilated: rep.annihilated,
            samples: cfg.cone.samples,
        })
    });
    let probe = invariance.as_ref().and_then(|iw| {
        let p = cocycle::kone_contraction_probe(
            &iw.window,
            iw.src.center(),
            cfg.cone.probe_delta,
            cfg.cone.probe_epsilon,
        )
        .ok()?;
        Some(ProbeSection {
            delta: cfg.cone.probe_delta,
            epsilon: cfg.cone.probe_epsilon,
            steps_to_target: p.steps_to_target,
            final_log_tan: p
                .log_tan_by_step
                .last()
                .copied()
                .unwrap_or_else(|| cfg.cone.probe_delta.tan().ln()),
        })
    });

    // The pair at the anchor: the limit construction when it converged,
    // otherwise the nearest family member.
    let slot = nearest_slot(family, prep.anchor);
    let (anchor_e, anchor_f) = match anchor_candidate {
        Some(c) => (&c.e, &c.f),
        None => (&family.e[slot], &family.f[slot]),
    };

    // Contraction threshold at the critical passage, for models that
    // actually pass through one.
    let near_critical = match (&prep.orbit, prep.hits.binary_search(&prep.anchor)) {
        (Some(orbit), Ok(_)) => {
            let df = seg.matrix(prep.anchor);
            Cone::new(anchor_e.clone(), cfg.cone.bound_eta).ok().map(|weak| {
                let rep =
                    critical::near_critical_bounds(df, anchor_e, &weak, seed, cfg.cone.samples);
                NearCriticalSection {
                    point: point_coords(orbit.point(prep.anchor), prep.dim),
                    eta: cfg.cone.bound_eta,
                    weak_norm: rep.weak_norm,
                    dual_floor: rep.dual_floor,
                    rho_star: rep.rho_star,
                    feasible: rep.feasible,
                    samples: rep.samples,
                }
            })
        }
        _ => None,
    };

    let sandwich = if seg.has_window(prep.anchor, 1) {
        critical::vw_cone_sandwich(seg.matrix(prep.anchor), kappa, anchor_e, anchor_f, cfg.cone.eta)
            .ok()
            .map(|s| SandwichSection {
                e_to_v_angle: s.e_to_v_angle,
                f_image_angle: s.f_image_angle,
                relative_gap: s.relative_gap,
                e_inside: s.e_inside,
                f_inside: s.f_inside,
            })
    } else {
        None
    };

    Ok(ConeSection {
        count,
        half_angle_first,
        half_angle_min,
        e_transversal,
        containment,
        probe,
        near_critical,
        sandwich,
    })
}

// ───────────────────────────── perturbation lane ─────────────────────────────

fn build_perturb(
    prep: &Prepared,
    cfg: &Config,
    seed: u64,
) -> Result<PerturbSection, PipelineError> {
    let p = &cfg.perturb;
    let seg = &prep.seg;
    let max_df_norm = (seg.lo()..seg.hi())
        .map(|i| seg.matrix(i).op_norm())
        .fold(0.0f64, f64::max);
    if max_df_norm == 0.0 {
        return Err(PipelineError::Analysis(
            "every step matrix is zero; no perturbation budget is meaningful".to_string(),
        ));
    }
    let alpha = perturb::alpha_for_epsilon(max_df_norm, p.epsilon0);
    let minimal_length =
        perturb::minimal_mixing_length(p.delta, p.n_bound, seed, p.instances, p.l_cap);

    // The raising window: the closest pair of consecutive passages
    // whose gap leaves room for a mixed stretch.
    let pair = prep
        .hits
        .windows(2)
        .filter(|w| (RAISE_GAP_MIN..=RAISE_GAP_MAX).contains(&(w[1] - w[0])))
        .min_by_key(|w| w[1] - w[0])
        .map(|w| (w[0], w[1]));
    let (raise, raise_error) = match pair {
        Some((h_back, h_next)) if prep.m_f >= 1 => {
            let kappa = prep.kappa.expect("models with passages have a splitting index");
            match perturb::build_kernel_raiser(
                seg,
                h_back,
                h_next,
                prep.m_f,
                kappa,
                p.delta,
                p.raise_tol,
            ) {
                Ok(r) => {
                    let demo = perturb::full_kernel_demo(&r.factors);
                    (
                        Some(RaiseSection {
                            window: [h_back, h_next],
                            tol: p.raise_tol,
                            kernel_dim_before: r.kernel_dim_before,
                            kernel_dim_after: r.kernel_dim_after,
                            max_theta: r.max_theta,
                            max_budget: r.max_budget,
                            total_budget: r.total_budget,
                            success: r.success,
                            demo_rank: demo.rank,
                        }),
                        None,
                    )
                }
                Err(e) => (None, Some(e.to_string())),
            }
        }
        _ => (
            None,
            Some(format!(
                "no adjacent critical passages with gap in [{RAISE_GAP_MIN}, {RAISE_GAP_MAX}]"
            )),
        ),
    };

    Ok(PerturbSection {
        epsilon0: p.epsilon0,
        max_df_norm,
        alpha,
        delta: p.delta,
        n_bound: p.n_bound,
        instances: p.instances,
        l_cap: p.l_cap,
        minimal_length,
        raise,
        raise_error,
    })
}
