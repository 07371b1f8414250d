//! Scenario runner: generate -> ddf -> verify -> reconstruct, all stages
//! coupled through files, with a summary report and plots at the end.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use ddf_core::catalog::{annulus_oracle_distance, scenario, Scenario};
use ddf_core::config::Thresholds;
use ddf_core::ddr::{BoundaryFrame, DdfArchive};
use ddf_core::dist::distance_field;
use ddf_core::domain::{pullback_domain, MetricDomain};
use ddf_core::geom::Point;
use ddf_core::mesh::{build_mesh_pair, Mesh};
use ddf_core::recon::{
    boundary_identity_check, build_phi, geodesic_image_check, isometry_certificate,
    CertificateParams, CertificateReport, Correspondence, GeodesicImageReport, Side,
};
use ddf_core::rigidity::{phi_from_vectors, ManifoldCtx};
use ddf_core::sweeps::{dphi_sweep, membership_sweep, nearest_sweep, SweepParams};
use ddf_core::window::{regular_boundary_window_with_field, FieldCache, WindowParams};
use ddf_core::ExperimentConfig;

use crate::pipeline::{
    add_path_sources, boundary_sources, domain_from_mesh, grid_sources, path_probes,
    preimage_sources, PairExperiment,
};
use crate::svg;

/// Probe depth per scenario: thin domains need shallower probes.
pub fn probe_depth(name: &str) -> f64 {
    match name {
        "annulus" | "dumbbell" => 0.12,
        _ => 0.18,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub check: String,
    pub value: f64,
    pub threshold: f64,
    /// `>=` when higher is better, `<=` otherwise.
    pub sense: String,
    pub pass: bool,
}

fn row_ge(check: &str, value: f64, threshold: f64) -> SummaryRow {
    SummaryRow {
        check: check.into(),
        value,
        threshold,
        sense: ">=".into(),
        pass: value >= threshold,
    }
}

fn row_le(check: &str, value: f64, threshold: f64) -> SummaryRow {
    SummaryRow {
        check: check.into(),
        value,
        threshold,
        sense: "<=".into(),
        pass: value <= threshold,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleRow {
    pub description: String,
    pub computed: f64,
    pub analytic: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiProfile {
    pub arcs: Vec<f64>,
    pub on_path: Vec<f64>,
    pub off_path: Vec<f64>,
    pub z_arc: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryReport {
    pub scenario: String,
    pub h: f64,
    pub stencil_radius: usize,
    pub frame_spacing: f64,
    pub source_grid: f64,
    pub seed: u64,
    pub thresholds: Thresholds,
    pub rows: Vec<SummaryRow>,
    pub oracle: Option<OracleRow>,
    pub phi_profile: Option<PhiProfile>,
    pub lambda_estimates: Vec<f64>,
    pub verdict: bool,
}

pub struct StageClock {
    t0: Instant,
    stages: Vec<(String, f64)>,
}

impl StageClock {
    pub fn new() -> Self {
        StageClock { t0: Instant::now(), stages: Vec::new() }
    }
    pub fn lap(&mut self, name: &str) {
        self.stages.push((name.into(), self.t0.elapsed().as_secs_f64()));
        self.t0 = Instant::now();
    }
    pub fn write(&self, path: &Path) -> Result<()> {
        let map: Vec<serde_json::Value> = self
            .stages
            .iter()
            .map(|(n, s)| serde_json::json!({"stage": n, "seconds": s}))
            .collect();
        std::fs::write(path, serde_json::to_string_pretty(&map)?)?;
        Ok(())
    }
}

impl Default for StageClock {
    fn default() -> Self {
        Self::new()
    }
}

/// A reconstructed pair loaded from stage files.
pub struct LoadedPair {
    pub mesh_a: Mesh,
    pub mesh_b: Mesh,
    pub domain_a: MetricDomain,
    pub domain_b: MetricDomain,
    pub frame: Arc<BoundaryFrame>,
    pub archive_a: DdfArchive,
    pub archive_b: DdfArchive,
    pub cache_a: FieldCache,
    pub cache_b: FieldCache,
}

pub fn load_pair(
    mesh_a_path: &Path,
    mesh_b_path: &Path,
    data_a: &Path,
    data_b: &Path,
) -> Result<LoadedPair> {
    let mesh_a = Mesh::load(mesh_a_path).context("mesh A")?;
    let mesh_b = Mesh::load(mesh_b_path).context("mesh B")?;
    let domain_a = domain_from_mesh(&mesh_a)?;
    let domain_b = domain_from_mesh(&mesh_b)?;
    let ids = DdfArchive::read_sample_ids(data_a)?;
    let frame = BoundaryFrame::from_samples(&mesh_a, &ids)?;
    let archive_a = DdfArchive::load(data_a, &frame, 0.0).context("archive A")?;
    let frame_b = BoundaryFrame::from_samples(&mesh_b, &DdfArchive::read_sample_ids(data_b)?)?;
    if !frame.matches(&frame_b) {
        bail!("archives carry different boundary frames");
    }
    let archive_b = DdfArchive::load(data_b, &frame, 0.0).context("archive B")?;
    Ok(LoadedPair {
        mesh_a,
        mesh_b,
        domain_a,
        domain_b,
        frame,
        archive_a,
        archive_b,
        cache_a: FieldCache::new(),
        cache_b: FieldCache::new(),
    })
}

pub struct PairOutcome {
    pub corr: Correspondence,
    pub cert: CertificateReport,
    pub boundary_defect: Option<f64>,
    pub geo_image: Option<GeodesicImageReport>,
    pub geo_probes_tested: usize,
}

/// Matching plus the full certificate over a loaded pair, including the
/// geodesic-image check over a handful of probes with common windows.
pub fn certify_pair(
    pair: &LoadedPair,
    cfg: &ExperimentConfig,
    n_probes: usize,
) -> Result<PairOutcome> {
    let corr = build_phi(&pair.archive_a, &pair.archive_b, cfg.thresholds.ratio_test)?;
    let side_a = Side {
        mesh: &pair.mesh_a,
        domain: &pair.domain_a,
        archive: &pair.archive_a,
        cache: &pair.cache_a,
    };
    let side_b = Side {
        mesh: &pair.mesh_b,
        domain: &pair.domain_b,
        archive: &pair.archive_b,
        cache: &pair.cache_b,
    };
    let params = CertificateParams {
        n_probes,
        min_depth: probe_depth(&cfg.scenario),
        window_cap: 30,
        thresholds: cfg.thresholds.clone(),
        h: cfg.h,
        seed: cfg.seed,
    };
    let cert = isometry_certificate(&corr, &side_a, &side_b, &params)?;
    let boundary_defect =
        boundary_identity_check(&corr, &pair.archive_a, &pair.archive_b, &pair.mesh_a).ok();
    let (geo_image, geo_probes_tested) = geodesic_image_sweep(pair, &corr, cfg, 8)?;
    Ok(PairOutcome { corr, cert, boundary_defect, geo_image, geo_probes_tested })
}

/// Aggregate the geodesic-image check over several probes whose windows are
/// regular on both sides.
pub fn geodesic_image_sweep(
    pair: &LoadedPair,
    corr: &Correspondence,
    cfg: &ExperimentConfig,
    max_probes: usize,
) -> Result<(Option<GeodesicImageReport>, usize)> {
    let wp = WindowParams {
        tau_cut: cfg.thresholds.tau_cut,
        theta_min_deg: cfg.thresholds.theta_min_deg,
        min_samples: 5,
        max_extent: Some(30),
    };
    let tube = 2.0 * cfg.h;
    let off_clearance = (6.0 * cfg.h).max(0.03);
    let depth = probe_depth(&cfg.scenario);
    let mut agg: Option<GeodesicImageReport> = None;
    let mut tested = 0usize;
    // the probes whose geodesics were populated with sources at ddf time
    let probes = path_probes(&pair.mesh_a, &pair.domain_a, depth, cfg.seed, max_probes * 2);
    for p in probes {
        if tested >= max_probes {
            break;
        }
        let Some(idx) = pair.archive_a.index_of_vertex(p) else { continue };
        let Some(p_prime) = pair.archive_b.sources[corr.pairs[idx].b_index].vertex() else {
            continue;
        };
        if pair.mesh_b.is_boundary(p_prime) {
            continue;
        }
        let window = (|| -> std::result::Result<_, ddf_core::error::EngineError> {
            let fa = pair.cache_a.get(&pair.mesh_a, p)?;
            let wa = regular_boundary_window_with_field(
                &pair.mesh_a,
                &pair.domain_a,
                &pair.frame,
                p,
                &fa,
                &wp,
                &pair.cache_a,
            )?;
            let fb = pair.cache_b.get(&pair.mesh_b, p_prime)?;
            let wb = regular_boundary_window_with_field(
                &pair.mesh_b,
                &pair.domain_b,
                &pair.frame,
                p_prime,
                &fb,
                &wp,
                &pair.cache_b,
            )?;
            wa.intersect(&wb).ok_or(ddf_core::error::EngineError::EmptyWindow {
                q: wa.nearest_boundary_vertex,
                found: 0,
                need: 5,
            })
        })();
        let Ok(window) = window else { continue };
        if window.samples.len() < 5 {
            continue;
        }
        // anchor at the probe's nearest boundary point: that is the geodesic
        // whose vertices were added as sources
        let fa = pair.cache_a.get(&pair.mesh_a, p)?;
        let q = ddf_core::window::nearest_boundary_vertex(&pair.mesh_a, &fa);
        let Some(z) = pair.frame.nearest_sample(&pair.mesh_a, q) else { continue };
        if !window.contains_sample(z) {
            continue;
        }
        let report = geodesic_image_check(
            corr,
            &pair.archive_a,
            &pair.archive_b,
            &pair.mesh_a,
            &pair.mesh_b,
            idx,
            z,
            &window,
            &pair.cache_a,
            &pair.cache_b,
            tube,
            off_clearance,
        )?;
        tested += 1;
        agg = Some(match agg {
            None => report,
            Some(acc) => GeodesicImageReport {
                on_path_total: acc.on_path_total + report.on_path_total,
                on_path_hits: acc.on_path_hits + report.on_path_hits,
                off_path_total: acc.off_path_total + report.off_path_total,
                off_path_misses: acc.off_path_misses + report.off_path_misses,
            },
        });
    }
    Ok((agg, tested))
}

/// Distance oracle for the scenario, when an analytic value exists.
pub fn distance_oracle(scenario_name: &str, mesh: &Mesh) -> Result<Option<OracleRow>> {
    match scenario_name {
        "annulus" => {
            let a = mesh.nearest_vertex(Point::new(-0.8, 0.0));
            let b = mesh.nearest_vertex(Point::new(0.8, 0.0));
            let field = distance_field(mesh, a)?;
            let computed = field.dist[b];
            let analytic = annulus_oracle_distance(0.8, 0.3);
            let rel_error = (computed - analytic).abs() / analytic;
            Ok(Some(OracleRow {
                description: "d((-0.8,0),(0.8,0)) vs tangent-arc-tangent".into(),
                computed,
                analytic,
                rel_error,
                tolerance: 0.01,
                pass: rel_error <= 0.01,
            }))
        }
        "disk" => {
            let c = mesh.nearest_vertex(Point::new(0.0, 0.0));
            let b = mesh.nearest_vertex(Point::new(1.0, 0.0));
            let field = distance_field(mesh, c)?;
            let computed = field.dist[b];
            let rel_error = (computed - 1.0).abs();
            Ok(Some(OracleRow {
                description: "d(center, boundary) vs unit radius".into(),
                computed,
                analytic: 1.0,
                rel_error,
                tolerance: 0.014,
                pass: rel_error <= 0.014,
            }))
        }
        _ => Ok(None),
    }
}

/// A comparison-function profile for the report plot: Phi over boundary arc
/// for one on-path source and one off-path source.
fn phi_profile(pair: &LoadedPair, cfg: &ExperimentConfig) -> Result<Option<PhiProfile>> {
    let depth = probe_depth(&cfg.scenario);
    // probe: the deepest interior source
    let mut best: Option<(f64, usize)> = None;
    for (i, s) in pair.archive_a.sources.iter().enumerate() {
        if let Some(v) = s.vertex() {
            if !pair.mesh_a.is_boundary(v) {
                let d = pair.domain_a.shape.distance_to_boundary(pair.mesh_a.vertices[v]);
                if best.map_or(true, |(bd, _)| d > bd) {
                    best = Some((d, i));
                }
            }
        }
    }
    let Some((d, idx)) = best else { return Ok(None) };
    if d < depth {
        return Ok(None);
    }
    let p = pair.archive_a.sources[idx].vertex().unwrap();
    let field_p = pair.cache_a.get(&pair.mesh_a, p)?;
    let q = ddf_core::window::nearest_boundary_vertex(&pair.mesh_a, &field_p);
    let Some(z) = pair.frame.nearest_sample(&pair.mesh_a, q) else { return Ok(None) };
    let zv = pair.frame.samples[z];
    // on-path x: midpoint of the geodesic to z; off-path x: rotated probe
    let path = pair.cache_a.get(&pair.mesh_a, zv)?.shortest_path(p)?;
    let on_x = path[path.len() / 2];
    let off_x = {
        let pos = pair.mesh_a.vertices[p];
        let radial = (pair.mesh_a.vertices[zv] - pos).normalize();
        let perp = Point::new(-radial.y, radial.x);
        pair.mesh_a.nearest_interior_vertex(pos + perp * (4.0 * field_p.dist[zv] / 10.0))
    };
    let p_vec = restrict(&pair.frame, &field_p.dist);
    let on_vec = restrict(&pair.frame, &pair.cache_a.get(&pair.mesh_a, on_x)?.dist);
    let off_vec = restrict(&pair.frame, &pair.cache_a.get(&pair.mesh_a, off_x)?.dist);
    Ok(Some(PhiProfile {
        arcs: pair.frame.arc_positions.clone(),
        on_path: phi_from_vectors(&p_vec, &on_vec, z),
        off_path: phi_from_vectors(&p_vec, &off_vec, z),
        z_arc: pair.frame.arc_positions[z],
    }))
}

fn restrict(frame: &BoundaryFrame, dist: &[f64]) -> Vec<f64> {
    frame.samples.iter().map(|&v| dist[v]).collect()
}

pub struct ScenarioArtifacts {
    pub out_dir: PathBuf,
    pub report: SummaryReport,
}

/// Execute the full scenario pipeline, writing every stage artifact under
/// `out_dir`. Returns the summary; the process exit status is the caller's
/// concern.
pub fn run_scenario(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ScenarioArtifacts> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mut clock = StageClock::new();
    let scen: Scenario = scenario(&cfg.scenario)?;
    std::fs::write(out_dir.join("config.json"), cfg.to_json())?;

    // --- generate: meshes for the gauge pair and the control metric
    let domain_b = pullback_domain(&scen.domain, &scen.gauge)?;
    let (mesh_a, mesh_b) =
        build_mesh_pair(&scen.domain, &domain_b.metric, cfg.h, cfg.stencil_radius)?;
    let (_, mesh_c) =
        build_mesh_pair(&scen.domain, &scen.control_metric, cfg.h, cfg.stencil_radius)?;
    mesh_a.save(&out_dir.join("mesh_a.json"))?;
    mesh_b.save(&out_dir.join("mesh_b.json"))?;
    mesh_c.save(&out_dir.join("mesh_control.json"))?;
    drop((mesh_a, mesh_b, mesh_c));
    clock.lap("generate");

    // --- ddf: archives assembled from the mesh files
    let mesh_a = Mesh::load(&out_dir.join("mesh_a.json"))?;
    let mesh_b = Mesh::load(&out_dir.join("mesh_b.json"))?;
    let mesh_c = Mesh::load(&out_dir.join("mesh_control.json"))?;
    let frame = BoundaryFrame::build(&mesh_a, cfg.frame_spacing())?;
    let sources_a = scenario_sources(&mesh_a, &frame, cfg, &scen)?;
    let twins: Vec<usize> = preimage_sources(&mesh_b, &scen.gauge, &sources_a);
    let (sources_a, twins) = drop_collisions(sources_a, twins);
    let mut order: Vec<usize> = (0..twins.len()).collect();
    crate::pipeline::seeded_shuffle(&mut order, cfg.seed ^ 0xb);
    let twins_shuffled: Vec<usize> = order.iter().map(|&i| twins[i]).collect();
    let control_sources: Vec<usize> = {
        let mut s = sources_a.clone();
        crate::pipeline::seeded_shuffle(&mut s, cfg.seed ^ 0xc);
        s
    };
    DdfArchive::assemble(&mesh_a, &frame, &sources_a)?.save(&out_dir.join("data_a.ddf1"))?;
    DdfArchive::assemble(&mesh_b, &frame, &twins_shuffled)?
        .save(&out_dir.join("data_b.ddf1"))?;
    DdfArchive::assemble(&mesh_c, &frame, &control_sources)?
        .save(&out_dir.join("data_control.ddf1"))?;
    drop((mesh_b, mesh_c));
    clock.lap("ddf");

    // --- verify: the three lemma sweeps on the base manifold
    let domain_a = scen.domain.clone();
    let cache = FieldCache::new();
    let ctx = ManifoldCtx { mesh: &mesh_a, domain: &domain_a, frame: &frame, cache: &cache };
    let sweep_params = SweepParams {
        probes: 10,
        seed: cfg.seed,
        min_depth: probe_depth(&cfg.scenario),
        window_cap: 30,
        thresholds: cfg.thresholds.clone(),
    };
    let nearest = nearest_sweep(&ctx, 60, cfg.seed)?;
    std::fs::write(
        out_dir.join("verify_nearest.json"),
        serde_json::to_string_pretty(&nearest)?,
    )?;
    let membership = membership_sweep(&ctx, &sweep_params, 160)?;
    std::fs::write(
        out_dir.join("verify_segment.json"),
        serde_json::to_string_pretty(&membership)?,
    )?;
    let dphi = dphi_sweep(&ctx, &sweep_params, 0.05)?;
    std::fs::write(out_dir.join("verify_dphi.json"), serde_json::to_string_pretty(&dphi)?)?;
    let oracle = distance_oracle(&cfg.scenario, &mesh_a)?;
    drop(cache);
    drop(mesh_a);
    clock.lap("verify");

    // --- reconstruct: gauge pair, then the non-isometric control
    let pair = load_pair(
        &out_dir.join("mesh_a.json"),
        &out_dir.join("mesh_b.json"),
        &out_dir.join("data_a.ddf1"),
        &out_dir.join("data_b.ddf1"),
    )?;
    let outcome = certify_pair(&pair, cfg, 12)?;
    std::fs::write(
        out_dir.join("cert_gauge.json"),
        serde_json::to_string_pretty(&outcome.cert)?,
    )?;
    // truth for the match-accuracy row
    let truth: Vec<usize> = pair
        .archive_a
        .sources
        .iter()
        .map(|s| {
            let v = s.vertex().unwrap();
            pair.mesh_b.nearest_vertex(scen.gauge.inverse(pair.mesh_a.vertices[v]))
        })
        .collect();
    let (match_fraction, match_median) = match_accuracy(&pair, &outcome.corr, &truth, 2.0 * cfg.h);
    let profile = phi_profile(&pair, cfg)?;

    let control = load_pair(
        &out_dir.join("mesh_a.json"),
        &out_dir.join("mesh_control.json"),
        &out_dir.join("data_a.ddf1"),
        &out_dir.join("data_control.ddf1"),
    )?;
    let control_outcome = certify_pair(&control, cfg, 12)?;
    std::fs::write(
        out_dir.join("cert_control.json"),
        serde_json::to_string_pretty(&control_outcome.cert)?,
    )?;
    clock.lap("reconstruct");

    // --- summary and plots
    let t = &cfg.thresholds;
    let mut rows = vec![
        row_ge("nearest-point criterion vs argmin", nearest.spacing_rate, 1.0),
        row_ge("membership precision", membership.precision, 0.95),
        row_ge("membership recall", membership.recall, 0.95),
        row_ge("dphi consistency", dphi.frac_within, 0.9),
        row_ge("gauge match accuracy (2h)", match_fraction, 0.98),
        row_le("gauge median displacement", match_median, 2.0 * cfg.h),
        row_le(
            "gauge boundary defect",
            outcome.boundary_defect.unwrap_or(f64::INFINITY),
            2.0 * frame.spacing,
        ),
        row_ge(
            "gauge geodesic-image fraction",
            outcome.geo_image.map(|g| g.fraction()).unwrap_or(0.0),
            0.95,
        ),
        row_ge(
            "gauge geodesic-image specificity",
            outcome.geo_image.map(|g| g.specificity()).unwrap_or(0.0),
            0.9,
        ),
        row_ge("gauge lambda in [0.98,1.02]", outcome.cert.lambda_pass_fraction, 0.9),
        row_le(
            "gauge lambda spread (max)",
            outcome
                .cert
                .lambda_rows
                .iter()
                .fold(0.0f64, |a, r| a.max(r.lambda_spread)),
            t.lambda_spread,
        ),
        row_le(
            "gauge distance defect",
            outcome.cert.max_distance_defect,
            t.dist_defect_h * cfg.h,
        ),
        // the control must fail decisively
        SummaryRow {
            check: "control certificate rejected".into(),
            value: if control_outcome.cert.verdict { 0.0 } else { 1.0 },
            threshold: 1.0,
            sense: ">=".into(),
            pass: !control_outcome.cert.verdict,
        },
        row_ge(
            "control/gauge median defect ratio",
            control_outcome.corr.median_sup_defect()
                / outcome.corr.median_sup_defect().max(1e-12),
            10.0,
        ),
    ];
    if let Some(orc) = &oracle {
        rows.push(row_le("distance oracle rel error", orc.rel_error, orc.tolerance));
    }
    let lambda_estimates: Vec<f64> =
        outcome.cert.lambda_rows.iter().map(|r| r.lambda_mean).collect();
    let verdict = rows.iter().all(|r| r.pass);
    let report = SummaryReport {
        scenario: cfg.scenario.clone(),
        h: cfg.h,
        stencil_radius: cfg.stencil_radius,
        frame_spacing: frame.spacing,
        source_grid: cfg.source_grid,
        seed: cfg.seed,
        thresholds: cfg.thresholds.clone(),
        rows,
        oracle,
        phi_profile: profile,
        lambda_estimates,
        verdict,
    };
    std::fs::write(out_dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    write_plots(&report, out_dir)?;
    clock.lap("report");
    clock.write(&out_dir.join("timings.json"))?;
    Ok(ScenarioArtifacts { out_dir: out_dir.to_path_buf(), report })
}

fn match_accuracy(
    pair: &LoadedPair,
    corr: &Correspondence,
    truth: &[usize],
    tol: f64,
) -> (f64, f64) {
    let mut hits = 0usize;
    let mut total = 0usize;
    let mut displacements = Vec::new();
    for p in &corr.pairs {
        let Some(x) = pair.archive_a.sources[p.a_index].vertex() else { continue };
        if pair.mesh_a.is_boundary(x) {
            continue;
        }
        let Some(m) = pair.archive_b.sources[p.b_index].vertex() else { continue };
        let d = (pair.mesh_b.vertices[m] - pair.mesh_b.vertices[truth[p.a_index]]).norm();
        displacements.push(d);
        total += 1;
        if d <= tol {
            hits += 1;
        }
    }
    displacements.sort_by(|a, b| a.total_cmp(b));
    let median = displacements.get(displacements.len() / 2).copied().unwrap_or(0.0);
    (if total == 0 { 0.0 } else { hits as f64 / total as f64 }, median)
}

fn drop_collisions(a: Vec<usize>, b: Vec<usize>) -> (Vec<usize>, Vec<usize>) {
    let mut seen = std::collections::HashSet::new();
    let mut ka = Vec::with_capacity(a.len());
    let mut kb = Vec::with_capacity(b.len());
    for (x, y) in a.into_iter().zip(b) {
        if seen.insert(y) {
            ka.push(x);
            kb.push(y);
        }
    }
    (ka, kb)
}

/// Source set for scenario archives: interior grid, boundary samples, and
/// vertices along a few geodesics to the boundary.
pub fn scenario_sources(
    mesh: &Mesh,
    frame: &Arc<BoundaryFrame>,
    cfg: &ExperimentConfig,
    scen: &Scenario,
) -> Result<Vec<usize>> {
    let mut sources = grid_sources(mesh, cfg.source_grid);
    if sources.is_empty() {
        bail!("source grid {} produced no interior sources", cfg.source_grid);
    }
    for v in boundary_sources(frame, (4.0 * frame.spacing).max(cfg.source_grid / 2.0)) {
        if !sources.contains(&v) {
            sources.push(v);
        }
    }
    let arc_step = (cfg.source_grid / 2.0).max(3.0 * cfg.h);
    let probes = path_probes(mesh, &scen.domain, probe_depth(&scen.name), cfg.seed, 12);
    add_path_sources(mesh, &probes, arc_step, &mut sources)?;
    Ok(sources)
}

/// View an in-memory pair experiment as a loaded pair, returning the truth
/// map alongside.
pub fn pair_into_loaded(exp: PairExperiment) -> (LoadedPair, Vec<usize>) {
    (
        LoadedPair {
            mesh_a: exp.mesh_a,
            mesh_b: exp.mesh_b,
            domain_a: exp.domain_a,
            domain_b: exp.domain_b,
            frame: exp.frame,
            archive_a: exp.archive_a,
            archive_b: exp.archive_b,
            cache_a: exp.cache_a,
            cache_b: exp.cache_b,
        },
        exp.truth,
    )
}

/// Match accuracy of a correspondence against a known truth map: fraction of
/// interior sources matched within `tol` of the true partner, and the median
/// displacement.
pub fn match_accuracy_against(
    pair: &LoadedPair,
    corr: &Correspondence,
    truth: &[usize],
    tol: f64,
) -> (f64, f64) {
    match_accuracy(pair, corr, truth, tol)
}


fn write_plots(report: &SummaryReport, out_dir: &Path) -> Result<()> {
    if let Some(profile) = &report.phi_profile {
        let svg_text = svg::line_plot(
            &format!(
                "Phi over boundary arc ({} h={}): max at the anchor for on-path x",
                report.scenario, report.h
            ),
            "boundary arclength",
            &[
                ("on-path x", "#4878b0", &profile.arcs, &profile.on_path),
                ("off-path x", "#b04848", &profile.arcs, &profile.off_path),
            ],
            &[(profile.z_arc, "#222222")],
        );
        std::fs::write(out_dir.join("phi_profile.svg"), svg_text)?;
    }
    let hist = svg::histogram(
        &format!("lambda estimates ({} h={})", report.scenario, report.h),
        "lambda",
        &report.lambda_estimates,
        24,
        Some((0.98, 1.02)),
    );
    std::fs::write(out_dir.join("lambda_hist.svg"), hist)?;
    Ok(())
}
