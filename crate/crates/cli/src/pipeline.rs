//! Assembly of pair experiments: a base manifold, a partner carrying a
//! pulled-back (or deliberately different) metric on the shared vertex set,
//! matched source sets, and their DDF archives.

use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rand::seq::SliceRandom;
use rand::Rng;

use ddf_core::catalog::Scenario;
use ddf_core::ddr::{BoundaryFrame, DdfArchive};
use ddf_core::dist::distance_field;
use ddf_core::domain::{pullback_domain, GaugeSpec, MetricDomain, MetricSpec};
use ddf_core::geom::Point;
use ddf_core::mesh::{build_mesh_pair, Mesh};
use ddf_core::window::FieldCache;
use ddf_core::ExperimentConfig;

/// Interior sources: mesh vertices nearest to the nodes of a square grid.
pub fn grid_sources(mesh: &Mesh, spacing: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let (min, max) = bounding_box(mesh);
    let mut j = (min.y / spacing).floor() as i64;
    while j as f64 * spacing <= max.y {
        let mut i = (min.x / spacing).floor() as i64;
        while i as f64 * spacing <= max.x {
            let p = Point::new(i as f64 * spacing, j as f64 * spacing);
            let v = mesh.nearest_vertex(p);
            if !mesh.is_boundary(v)
                && (mesh.vertices[v] - p).norm() <= spacing / 2.0
                && !out.contains(&v)
            {
                out.push(v);
            }
            i += 1;
        }
        j += 1;
    }
    out
}

fn bounding_box(mesh: &Mesh) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &mesh.vertices {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// Boundary sources: frame samples subsampled to roughly `spacing`.
pub fn boundary_sources(frame: &BoundaryFrame, spacing: f64) -> Vec<usize> {
    let stride = ((spacing / frame.spacing).round() as usize).max(1);
    let mut out = Vec::new();
    for &(lo, hi) in &frame.loop_ranges {
        let mut k = lo;
        while k < hi {
            out.push(frame.samples[k]);
            k += stride;
        }
    }
    out
}


/// Deterministic deep-interior probe points whose geodesics to the boundary
/// are populated with archive sources; the geodesic-image check walks the
/// same list.
pub fn path_probes(
    mesh: &Mesh,
    domain: &MetricDomain,
    min_depth: f64,
    seed: u64,
    count: usize,
) -> Vec<usize> {
    let mut rng = ddf_core::seeded_rng(seed ^ 0x70617468);
    let mut out = Vec::new();
    for _ in 0..count {
        for _ in 0..200 {
            let pos = domain.sample_interior(&mut rng);
            if domain.shape.distance_to_boundary(pos) >= min_depth {
                let v = mesh.nearest_vertex(pos);
                if !mesh.is_boundary(v) {
                    if !out.contains(&v) {
                        out.push(v);
                    }
                    break;
                }
            }
        }
    }
    out
}

/// Add interior vertices along each probe's geodesic to its nearest
/// boundary point, spaced by `arc_step`.
pub fn add_path_sources(
    mesh: &Mesh,
    probes: &[usize],
    arc_step: f64,
    sources: &mut Vec<usize>,
) -> Result<()> {
    for &p in probes {
        let field_p = distance_field(mesh, p)?;
        let q = ddf_core::window::nearest_boundary_vertex(mesh, &field_p);
        let path = field_p.shortest_path(q)?;
        let mut last_arc = f64::NEG_INFINITY;
        for &v in &path {
            if mesh.is_boundary(v) || sources.contains(&v) {
                continue;
            }
            let arc = field_p.dist[v];
            if arc - last_arc >= arc_step {
                sources.push(v);
                last_arc = arc;
            }
        }
    }
    Ok(())
}

/// A fully assembled pair experiment over a shared vertex set.
pub struct PairExperiment {
    pub domain_a: MetricDomain,
    pub domain_b: MetricDomain,
    pub gauge: Option<GaugeSpec>,
    pub mesh_a: Mesh,
    pub mesh_b: Mesh,
    pub frame: Arc<BoundaryFrame>,
    pub archive_a: DdfArchive,
    pub archive_b: DdfArchive,
    /// For gauge pairs: per archive-A index, the true partner vertex
    /// (the gauge preimage snapped to the mesh).
    pub truth: Vec<usize>,
    pub cache_a: FieldCache,
    pub cache_b: FieldCache,
}

pub struct PairParams {
    pub h: f64,
    pub stencil_radius: usize,
    pub frame_spacing: f64,
    pub source_grid: f64,
    /// Number of geodesic test paths whose vertices are added as sources.
    pub n_paths: usize,
    pub seed: u64,
    /// Minimal probe depth used when choosing path endpoints.
    pub probe_depth: f64,
}

impl PairParams {
    pub fn from_config(cfg: &ExperimentConfig, probe_depth: f64) -> Self {
        PairParams {
            h: cfg.h,
            stencil_radius: cfg.stencil_radius,
            frame_spacing: cfg.frame_spacing(),
            source_grid: cfg.source_grid,
            n_paths: 12,
            seed: cfg.seed,
            probe_depth,
        }
    }
}

/// Build the two meshes of a gauge pair, choose matched source sets (grid
/// interior + boundary samples + vertices along a few geodesics), and
/// assemble both archives. Archive B is stored in a seeded shuffled order so
/// that matching cannot lean on index alignment.
pub fn build_gauge_pair(scenario: &Scenario, params: &PairParams) -> Result<PairExperiment> {
    let domain_a = scenario.domain.clone();
    let domain_b = pullback_domain(&domain_a, &scenario.gauge)
        .context("pullback of the scenario gauge")?;
    build_pair_inner(domain_a, domain_b, Some(scenario.gauge.clone()), params)
}

/// Build a control pair: same shape, a genuinely different metric, matched
/// source sets given by identical vertices (the identity is the only
/// currently available candidate map).
pub fn build_control_pair(scenario: &Scenario, params: &PairParams) -> Result<PairExperiment> {
    let domain_a = scenario.domain.clone();
    let domain_b = MetricDomain::new(
        domain_a.shape.clone(),
        scenario.control_metric.clone(),
        format!("{}-control", scenario.name),
    );
    build_pair_inner(domain_a, domain_b, None, params)
}

fn build_pair_inner(
    domain_a: MetricDomain,
    domain_b: MetricDomain,
    gauge: Option<GaugeSpec>,
    params: &PairParams,
) -> Result<PairExperiment> {
    let (mesh_a, mesh_b) =
        build_mesh_pair(&domain_a, &domain_b.metric, params.h, params.stencil_radius)?;
    let frame = BoundaryFrame::build(&mesh_a, params.frame_spacing)?;
    // source points on A: interior grid + boundary samples + path vertices
    let mut sources_a = grid_sources(&mesh_a, params.source_grid);
    let interior_count = sources_a.len();
    if interior_count == 0 {
        bail!("source grid {} produced no interior sources", params.source_grid);
    }
    for v in boundary_sources(&frame, (4.0 * params.frame_spacing).max(params.source_grid / 2.0)) {
        if !sources_a.contains(&v) {
            sources_a.push(v);
        }
    }
    let path_arc_step = (params.source_grid / 2.0).max(3.0 * params.h);
    let probes =
        path_probes(&mesh_a, &domain_a, params.probe_depth, params.seed, params.n_paths);
    add_path_sources(&mesh_a, &probes, path_arc_step, &mut sources_a)?;
    let mut rng = ddf_core::seeded_rng(params.seed ^ 0x70617468);
    // partner sources on B: gauge preimages snapped to the shared vertex set
    let mut sources_b = Vec::with_capacity(sources_a.len());
    let mut truth = Vec::with_capacity(sources_a.len());
    let mut keep = Vec::with_capacity(sources_a.len());
    for &v in &sources_a {
        let target = match &gauge {
            Some(g) => g.inverse(mesh_a.vertices[v]),
            None => mesh_a.vertices[v],
        };
        let tv = mesh_b.nearest_vertex(target);
        if sources_b.contains(&tv) {
            continue; // snapping collision: drop the pair entirely
        }
        sources_b.push(tv);
        truth.push(tv);
        keep.push(v);
    }
    let sources_a = keep;
    // scramble the B order
    let mut order: Vec<usize> = (0..sources_b.len()).collect();
    order.shuffle(&mut rng);
    let shuffled_b: Vec<usize> = order.iter().map(|&i| sources_b[i]).collect();

    let archive_a = DdfArchive::assemble(&mesh_a, &frame, &sources_a)?;
    let archive_b = DdfArchive::assemble(&mesh_b, &frame, &shuffled_b)?;
    Ok(PairExperiment {
        domain_a,
        domain_b,
        gauge,
        mesh_a,
        mesh_b,
        frame,
        archive_a,
        archive_b,
        truth,
        cache_a: FieldCache::new(),
        cache_b: FieldCache::new(),
    })
}

impl PairExperiment {
    /// Fraction of interior archive-A sources whose match lies within
    /// `tol` of the true gauge image, plus the median displacement.
    pub fn match_accuracy(
        &self,
        corr: &ddf_core::recon::Correspondence,
        tol: f64,
    ) -> (f64, f64) {
        let mut hits = 0usize;
        let mut total = 0usize;
        let mut displacements = Vec::new();
        for pair in &corr.pairs {
            let Some(x) = self.archive_a.sources[pair.a_index].vertex() else { continue };
            if self.mesh_a.is_boundary(x) {
                continue;
            }
            let Some(m) = self.archive_b.sources[pair.b_index].vertex() else { continue };
            let want = self.truth[pair.a_index];
            let d = (self.mesh_b.vertices[m] - self.mesh_b.vertices[want]).norm();
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

    /// Probe-depth-limited interior archive indices, for certificates.
    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.archive_a.len())
            .filter(|&i| {
                self.archive_a.sources[i]
                    .vertex()
                    .map(|v| !self.mesh_a.is_boundary(v))
                    .unwrap_or(false)
            })
            .collect()
    }
}

/// Random seeded sampler used by the negative control: `Rng` is pulled in
/// here so callers only need a seed.
pub fn seeded_shuffle<T>(items: &mut [T], seed: u64) {
    let mut rng = ddf_core::seeded_rng(seed);
    items.shuffle(&mut rng);
}

/// Parse the `--sources` grammar: `grid:X`, `boundary:Y`, or
/// `grid+boundary:X:Y`.
pub fn parse_sources(
    spec: &str,
    mesh: &Mesh,
    frame: &BoundaryFrame,
) -> Result<Vec<usize>> {
    if let Some(rest) = spec.strip_prefix("grid+boundary:") {
        let (gx, by) = rest
            .split_once(':')
            .context("expected grid+boundary:<grid>:<boundary>")?;
        let mut out = grid_sources(mesh, gx.parse::<f64>()?);
        for v in boundary_sources(frame, by.parse::<f64>()?) {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        Ok(out)
    } else if let Some(rest) = spec.strip_prefix("grid:") {
        Ok(grid_sources(mesh, rest.parse::<f64>()?))
    } else if let Some(rest) = spec.strip_prefix("boundary:") {
        Ok(boundary_sources(frame, rest.parse::<f64>()?))
    } else {
        bail!("unknown sources spec `{spec}`; use grid:X, boundary:Y or grid+boundary:X:Y")
    }
}

/// Map source vertices through a gauge preimage before snapping; used to
/// produce the partner archive of a pair from the command line.
pub fn preimage_sources(mesh: &Mesh, gauge: &GaugeSpec, sources: &[usize]) -> Vec<usize> {
    sources
        .iter()
        .map(|&v| mesh.nearest_vertex(gauge.inverse(mesh.vertices[v])))
        .collect()
}

/// Resolve a domain from mesh metadata (canonical names).
pub fn domain_from_mesh(mesh: &Mesh) -> Result<MetricDomain> {
    let shape = ddf_core::DomainShape::parse(&mesh.domain_kind)?;
    let metric = MetricSpec::parse(&mesh.metric_name)?;
    Ok(MetricDomain::new(shape, metric, mesh.domain_kind.clone()))
}

#[allow(unused)]
fn _rng_is_used(r: &mut impl Rng) -> f64 {
    r.gen_range(0.0..1.0)
}
