//! Batch verification sweeps: each lemma criterion run over seeded probe
//! ensembles against its independent oracle, with per-case records for
//! reports.

use rand::Rng;
use serde::Serialize;

use crate::config::Thresholds;
use crate::ddr::DdfMatrix;
use crate::dist::distance_field;
use crate::error::RigidityError;
use crate::rigidity::{
    angle_recovery, geodesic_membership_vec, nearest_point_accepted, DphiParams, ManifoldCtx,
};
use crate::window::{regular_boundary_window_with_field, WindowParams};

#[derive(Debug, Clone, Serialize)]
pub struct SweepParams {
    pub probes: usize,
    pub seed: u64,
    /// Minimal Euclidean depth of probes inside the domain.
    pub min_depth: f64,
    /// Cap on window expansion per side, in frame samples.
    pub window_cap: usize,
    pub thresholds: Thresholds,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            probes: 24,
            seed: 7,
            min_depth: 0.18,
            window_cap: 30,
            thresholds: Thresholds::default(),
        }
    }
}

fn window_params(t: &Thresholds, cap: usize) -> WindowParams {
    WindowParams {
        tau_cut: t.tau_cut,
        theta_min_deg: t.theta_min_deg,
        min_samples: 5,
        max_extent: Some(cap),
    }
}

/// Seeded interior probe vertices at the requested depth.
pub fn sample_probes(
    ctx: &ManifoldCtx,
    count: usize,
    min_depth: f64,
    seed: u64,
    require_full_stencil: bool,
) -> Vec<usize> {
    let mut rng = crate::seeded_rng(seed);
    let mut out = Vec::new();
    let mut guard = 0usize;
    while out.len() < count && guard < count * 200 {
        guard += 1;
        let pos = ctx.domain.sample_interior(&mut rng);
        if ctx.domain.shape.distance_to_boundary(pos) < min_depth {
            continue;
        }
        let v = ctx.mesh.nearest_vertex(pos);
        if ctx.mesh.is_boundary(v) || (require_full_stencil && !ctx.mesh.has_full_stencil(v)) {
            continue;
        }
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// nearest-point criterion vs brute-force argmin

#[derive(Debug, Clone, Serialize)]
pub struct NearestCase {
    pub x: usize,
    /// Samples accepted by the row criterion.
    pub accepted: Vec<usize>,
    /// Brute-force argmin of d(x, .) over the frame.
    pub argmin: Vec<usize>,
    pub agree_exact: bool,
    /// Largest arc distance from an accepted sample to the argmin set.
    pub max_arc_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NearestReport {
    pub cases: Vec<NearestCase>,
    pub exact_rate: f64,
    /// Rate of agreement up to one frame spacing.
    pub spacing_rate: f64,
    pub tol_near: f64,
    pub frame_spacing: f64,
    pub pass: bool,
}

pub fn nearest_sweep(
    ctx: &ManifoldCtx,
    count: usize,
    seed: u64,
) -> Result<NearestReport, RigidityError> {
    let tol = ctx_tol(ctx);
    let mut rng = crate::seeded_rng(seed);
    let n = ctx.mesh.vertex_count();
    let mut cases = Vec::with_capacity(count);
    while cases.len() < count {
        let x = rng.gen_range(0..n);
        if ctx.mesh.is_boundary(x) {
            continue;
        }
        let field = distance_field(ctx.mesh, x)?;
        // criterion route: the full DDF matrix row test
        let matrix = DdfMatrix::from_boundary_distances(
            ctx.frame.clone(),
            crate::ddr::SourceId::Vertex(x),
            &DdfMatrix::restrict_field(ctx.frame, &field),
        );
        let accepted = nearest_point_accepted(&matrix, tol);
        // oracle route: direct argmin of the distance field over the frame
        let restricted = DdfMatrix::restrict_field(ctx.frame, &field);
        let min = restricted.iter().cloned().fold(f64::INFINITY, f64::min);
        let argmin: Vec<usize> =
            (0..restricted.len()).filter(|&i| restricted[i] == min).collect();
        let agree_exact = accepted == argmin;
        let max_arc_gap = accepted
            .iter()
            .map(|&a| {
                argmin
                    .iter()
                    .map(|&b| ctx.frame.arc_distance(a, b))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max);
        cases.push(NearestCase { x, accepted, argmin, agree_exact, max_arc_gap });
    }
    let exact = cases.iter().filter(|c| c.agree_exact).count();
    let spacing_ok = cases
        .iter()
        .filter(|c| c.max_arc_gap <= ctx.frame.spacing * (1.0 + 1e-9))
        .count();
    let exact_rate = exact as f64 / cases.len() as f64;
    let spacing_rate = spacing_ok as f64 / cases.len() as f64;
    Ok(NearestReport {
        pass: spacing_rate == 1.0,
        cases,
        exact_rate,
        spacing_rate,
        tol_near: tol,
        frame_spacing: ctx.frame.spacing,
    })
}

fn ctx_tol(_ctx: &ManifoldCtx) -> f64 {
    // graph data is exact; the row test needs no slack
    0.0
}

// ---------------------------------------------------------------------------
// geodesic membership vs the additive shortest-path relation

#[derive(Debug, Clone, Serialize)]
pub struct MembershipCase {
    pub p: usize,
    pub z: usize,
    pub x: usize,
    pub criterion: bool,
    pub oracle: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub cases: Vec<MembershipCase>,
    pub precision: f64,
    pub recall: f64,
    pub delta_max: f64,
    pub probes_used: usize,
    pub probes_without_window: usize,
    pub pass: bool,
}

pub fn membership_sweep(
    ctx: &ManifoldCtx,
    params: &SweepParams,
    target_cases: usize,
) -> Result<MembershipReport, RigidityError> {
    let delta_max = params.thresholds.delta_max_frames * ctx.frame.spacing;
    let wp = window_params(&params.thresholds, params.window_cap);
    let probes = sample_probes(ctx, params.probes, params.min_depth, params.seed, true);
    let mut rng = crate::seeded_rng(params.seed ^ 0x6d656d62);
    let mut cases = Vec::new();
    let mut no_window = 0usize;
    let clearance = (6.0 * ctx.mesh.h).max(0.03);
    'probes: for &p in &probes {
        let field_p = distance_field(ctx.mesh, p)?;
        let window = match regular_boundary_window_with_field(
            ctx.mesh, ctx.domain, ctx.frame, p, &field_p, &wp, ctx.cache,
        ) {
            Ok(w) => w,
            Err(crate::error::EngineError::EmptyWindow { .. }) => {
                no_window += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let p_vec = DdfMatrix::restrict_field(ctx.frame, &field_p);
        // a few anchors spread across the window
        let zn = window.samples.len();
        let z_picks: Vec<usize> = if zn <= 4 {
            window.samples.clone()
        } else {
            (0..4).map(|k| window.samples[k * (zn - 1) / 3]).collect()
        };
        // shared probe set for all anchors: on-path vertices of each anchor
        // (positives for it, usually negatives for the others) plus
        // clearly-off-path vertices for every anchor
        let mut xs: Vec<usize> = Vec::new();
        for &z in &z_picks {
            let zv = ctx.frame.samples[z];
            let field_z = ctx.cache.get(ctx.mesh, zv)?;
            let path = field_z.shortest_path(p)?;
            let interior_path: Vec<usize> = path
                .iter()
                .copied()
                .filter(|&v| {
                    !ctx.mesh.is_boundary(v) && field_z.dist[v] >= 5.0 * ctx.mesh.h
                })
                .collect();
            if !interior_path.is_empty() {
                for k in 0..2 {
                    let idx = k * (interior_path.len() - 1);
                    let x = interior_path[idx.min(interior_path.len() - 1)];
                    if !xs.contains(&x) {
                        xs.push(x);
                    }
                }
            }
            let mut guard = 0;
            let mut found = 0;
            while found < 2 && guard < 4000 {
                guard += 1;
                let x = rng.gen_range(0..ctx.mesh.vertex_count());
                if ctx.mesh.is_boundary(x) || xs.contains(&x) {
                    continue;
                }
                let defect = field_p.dist[x] + field_z.dist[x] - field_p.dist[zv];
                if defect >= clearance {
                    xs.push(x);
                    found += 1;
                }
            }
        }
        // one field per x, evaluated against every anchor
        for x in xs {
            let field_x = distance_field(ctx.mesh, x)?;
            let x_vec = DdfMatrix::restrict_field(ctx.frame, &field_x);
            for &z in &z_picks {
                let zv = ctx.frame.samples[z];
                let field_z = ctx.cache.get(ctx.mesh, zv)?;
                let defect = field_p.dist[x] + field_z.dist[x] - field_p.dist[zv];
                // skip grey-zone probes: neither on the geodesic nor clearly
                // off it at this resolution
                if defect != 0.0 && defect < clearance {
                    continue;
                }
                let criterion = geodesic_membership_vec(
                    ctx.frame, &p_vec, &x_vec, z, &window, delta_max,
                )?;
                cases.push(MembershipCase { p, z, x, criterion, oracle: defect == 0.0 });
                if cases.len() >= target_cases {
                    break 'probes;
                }
            }
        }
    }
    let tp = cases.iter().filter(|c| c.criterion && c.oracle).count() as f64;
    let fp = cases.iter().filter(|c| c.criterion && !c.oracle).count() as f64;
    let fn_ = cases.iter().filter(|c| !c.criterion && c.oracle).count() as f64;
    let precision = if tp + fp == 0.0 { 1.0 } else { tp / (tp + fp) };
    let recall = if tp + fn_ == 0.0 { 1.0 } else { tp / (tp + fn_) };
    Ok(MembershipReport {
        pass: precision >= 0.95 && recall >= 0.95,
        cases,
        precision,
        recall,
        delta_max,
        probes_used: probes.len(),
        probes_without_window: no_window,
    })
}

// ---------------------------------------------------------------------------
// first-order derivative consistency

#[derive(Debug, Clone, Serialize)]
pub struct DphiCase {
    pub p: usize,
    pub z1: usize,
    pub z2: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DphiSweepReport {
    pub cases: Vec<DphiCase>,
    pub frac_within: f64,
    pub tol: f64,
    pub t_step: f64,
    pub probes_used: usize,
    pub probes_without_window: usize,
    pub pass: bool,
}

/// Compare the finite-difference derivative of the difference function with
/// the geometric value `-1 + <v1, v2>_g` over window pairs. Each unordered
/// pair contributes one case; its derivative is the mean of the two oriented
/// walks, which estimate the same quantity.
pub fn dphi_sweep(
    ctx: &ManifoldCtx,
    params: &SweepParams,
    tol: f64,
) -> Result<DphiSweepReport, RigidityError> {
    let wp = window_params(&params.thresholds, params.window_cap);
    let t_step = params.thresholds.t_step_h * ctx.mesh.h;
    let probes = sample_probes(ctx, params.probes, params.min_depth, params.seed, true);
    let dphi = DphiParams { t_step, max_pairs: 4 };
    let mut cases = Vec::new();
    let mut no_window = 0usize;
    for &p in &probes {
        let field_p = distance_field(ctx.mesh, p)?;
        let window = match regular_boundary_window_with_field(
            ctx.mesh, ctx.domain, ctx.frame, p, &field_p, &wp, ctx.cache,
        ) {
            Ok(w) => w,
            Err(crate::error::EngineError::EmptyWindow { .. }) => {
                no_window += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let report = match angle_recovery(ctx, p, &window, None, &dphi) {
            Ok(r) => r,
            Err(RigidityError::DegenerateDirections { .. }) => {
                no_window += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        // group the oriented walks of each unordered pair
        let mut grouped: Vec<((usize, usize), f64, Vec<f64>)> = Vec::new();
        for pr in &report.pairs {
            let key = (pr.z_walk.min(pr.z_other), pr.z_walk.max(pr.z_other));
            match grouped.iter_mut().find(|(k, _, _)| *k == key) {
                Some((_, _, rhss)) => rhss.push(pr.rhs),
                None => grouped.push((key, pr.lhs, vec![pr.rhs])),
            }
        }
        for ((z1, z2), lhs, rhss) in grouped {
            let rhs = rhss.iter().sum::<f64>() / rhss.len() as f64;
            cases.push(DphiCase { p, z1, z2, lhs, rhs, abs_err: (lhs - rhs).abs() });
        }
    }
    let within = cases.iter().filter(|c| c.abs_err <= tol).count();
    let frac_within =
        if cases.is_empty() { 0.0 } else { within as f64 / cases.len() as f64 };
    Ok(DphiSweepReport {
        pass: frac_within >= 0.9 && !cases.is_empty(),
        cases,
        frac_within,
        tol,
        t_step,
        probes_used: probes.len(),
        probes_without_window: no_window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddr::BoundaryFrame;
    use crate::window::FieldCache;
    use crate::domain::{DomainShape, MetricSpec};
    use crate::mesh::build_mesh;
    use crate::MetricDomain;
    use std::sync::Arc;

    fn ctx_fixture(h: f64) -> (MetricDomain, crate::Mesh, Arc<BoundaryFrame>) {
        let domain = MetricDomain::new(DomainShape::Disk, MetricSpec::Euclidean, "disk");
        let mesh = build_mesh(&domain, h, 3).unwrap();
        let frame = BoundaryFrame::build(&mesh, 2.0 * h).unwrap();
        (domain, mesh, frame)
    }

    #[test]
    fn nearest_sweep_agrees_on_the_disk() {
        let (domain, mesh, frame) = ctx_fixture(0.04);
        let cache = FieldCache::new();
        let ctx = ManifoldCtx { mesh: &mesh, domain: &domain, frame: &frame, cache: &cache };
        let report = nearest_sweep(&ctx, 40, 3).unwrap();
        assert!(report.pass, "spacing rate {}", report.spacing_rate);
        assert_eq!(report.exact_rate, 1.0, "row criterion must equal argmin exactly");
    }

    #[test]
    fn membership_sweep_scores_high_on_the_disk() {
        let (domain, mesh, frame) = ctx_fixture(0.02);
        let cache = FieldCache::new();
        let ctx = ManifoldCtx { mesh: &mesh, domain: &domain, frame: &frame, cache: &cache };
        let params = SweepParams { probes: 6, seed: 11, ..SweepParams::default() };
        let report = membership_sweep(&ctx, &params, 120).unwrap();
        assert!(
            report.pass,
            "precision {} recall {} over {} cases",
            report.precision,
            report.recall,
            report.cases.len()
        );
    }

    #[test]
    fn dphi_sweep_mostly_within_tolerance() {
        let (domain, mesh, frame) = ctx_fixture(0.01);
        let cache = FieldCache::new();
        let ctx = ManifoldCtx { mesh: &mesh, domain: &domain, frame: &frame, cache: &cache };
        let params = SweepParams { probes: 6, seed: 5, ..SweepParams::default() };
        let report = dphi_sweep(&ctx, &params, 0.05).unwrap();
        assert!(
            report.frac_within >= 0.9,
            "only {} of {} cases within 0.05",
            report.frac_within,
            report.cases.len()
        );
    }
}
