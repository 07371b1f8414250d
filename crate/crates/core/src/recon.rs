//! End-to-end pipeline: match two DDF archives by nearest neighbor in the
//! sup-norm, then certify that the induced correspondence is a
//! boundary-fixing isometry — or demonstrate that it is not.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Thresholds;
use crate::ddr::{sup_dist_anchored, DdfArchive};
use crate::dist::distance_field;
use crate::domain::MetricDomain;
use crate::error::ReconError;
use crate::mesh::Mesh;
use crate::rigidity::{angle_recovery, DphiParams, ManifoldCtx};
use crate::window::{
    regular_boundary_window_with_field, FieldCache, RegularWindow, WindowParams,
};

/// One matched source: the nearest entry of the other archive in sup-norm.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MatchedPair {
    pub a_index: usize,
    pub b_index: usize,
    pub sup_defect: f64,
    /// Distance to the runner-up; `best/second >= ratio_level` flags
    /// ambiguity instead of resolving it arbitrarily.
    pub second_defect: f64,
    pub ambiguous: bool,
    pub mutual: bool,
}

/// The matched map between two data sets, one entry per source of archive A.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Correspondence {
    pub pairs: Vec<MatchedPair>,
}

impl Correspondence {
    pub fn pair_for(&self, a_index: usize) -> &MatchedPair {
        &self.pairs[a_index]
    }

    pub fn median_sup_defect(&self) -> f64 {
        let mut defects: Vec<f64> = self.pairs.iter().map(|p| p.sup_defect).collect();
        if defects.is_empty() {
            return 0.0;
        }
        defects.sort_by(|a, b| a.total_cmp(b));
        defects[defects.len() / 2]
    }
}

fn nearest_two(vectors: &[Vec<f64>], query: &[f64]) -> (usize, f64, f64) {
    let mut best = (f64::INFINITY, usize::MAX);
    let mut second = f64::INFINITY;
    for (j, v) in vectors.iter().enumerate() {
        let d = sup_dist_anchored(query, v);
        if (d, j) < best {
            second = best.0;
            best = (d, j);
        } else if d < second {
            second = d;
        }
    }
    (best.1, best.0, second)
}

/// Nearest-neighbor matching of archive A into archive B with the
/// mutual-nearest filter and the best/second ratio ambiguity test.
pub fn build_phi(
    a: &DdfArchive,
    b: &DdfArchive,
    ratio_level: f64,
) -> Result<Correspondence, ReconError> {
    if a.is_empty() || b.is_empty() {
        return Err(ReconError::EmptyArchive);
    }
    if !a.frame.matches(&b.frame) {
        return Err(ReconError::FrameMismatch);
    }
    let forward: Vec<(usize, f64, f64)> = a
        .vectors
        .par_iter()
        .map(|q| nearest_two(&b.vectors, q))
        .collect();
    let backward: Vec<usize> = b
        .vectors
        .par_iter()
        .map(|q| nearest_two(&a.vectors, q).0)
        .collect();
    let pairs = forward
        .iter()
        .enumerate()
        .map(|(i, &(j, best, second))| {
            let ambiguous = if second == 0.0 {
                best == second
            } else {
                best / second >= ratio_level
            };
            MatchedPair {
                a_index: i,
                b_index: j,
                sup_defect: best,
                second_defect: second,
                ambiguous,
                mutual: backward[j] == i,
            }
        })
        .collect();
    Ok(Correspondence { pairs })
}

/// Max displacement of boundary sources under the matching, in boundary
/// arclength. Both archives must live on meshes sharing the vertex set.
pub fn boundary_identity_check(
    corr: &Correspondence,
    a: &DdfArchive,
    b: &DdfArchive,
    mesh: &Mesh,
) -> Result<f64, ReconError> {
    let mut worst: Option<f64> = None;
    for pair in &corr.pairs {
        let Some(x) = a.sources[pair.a_index].vertex() else { continue };
        if !mesh.is_boundary(x) {
            continue;
        }
        let displacement = match b.sources[pair.b_index].vertex() {
            Some(y) if mesh.is_boundary(y) => mesh.boundary_arc_distance(x, y),
            _ => f64::INFINITY,
        };
        worst = Some(worst.map_or(displacement, |w: f64| w.max(displacement)));
    }
    worst.ok_or(ReconError::NoBoundarySources)
}

/// Result of checking that on-path sources map into the image geodesic.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GeodesicImageReport {
    pub on_path_total: usize,
    pub on_path_hits: usize,
    pub off_path_total: usize,
    pub off_path_misses: usize,
}

impl GeodesicImageReport {
    /// Fraction of on-path sources whose match lies within the tube.
    pub fn fraction(&self) -> f64 {
        if self.on_path_total == 0 {
            1.0
        } else {
            self.on_path_hits as f64 / self.on_path_total as f64
        }
    }

    /// Fraction of clearly-off-path probes whose match stays off the image.
    pub fn specificity(&self) -> f64 {
        if self.off_path_total == 0 {
            1.0
        } else {
            self.off_path_misses as f64 / self.off_path_total as f64
        }
    }
}

/// For archive sources on the shortest path `[p z]` in A, check that their
/// matches lie within `tube` of the shortest-path corridor `[p' z]` in B.
/// Sources whose additive geodesic defect exceeds `off_clearance` serve as
/// specificity controls: their matches must stay at least `tube` away.
#[allow(clippy::too_many_arguments)]
pub fn geodesic_image_check(
    corr: &Correspondence,
    a: &DdfArchive,
    b: &DdfArchive,
    mesh_a: &Mesh,
    mesh_b: &Mesh,
    p_index: usize,
    z: usize,
    window: &RegularWindow,
    cache_a: &FieldCache,
    cache_b: &FieldCache,
    tube: f64,
    off_clearance: f64,
) -> Result<GeodesicImageReport, ReconError> {
    if !window.contains_sample(z) {
        return Err(crate::error::RigidityError::OutsideWindow(z).into());
    }
    let p = a.sources[p_index].vertex().ok_or(ReconError::EmptyArchive)?;
    let p_prime = b.sources[corr.pairs[p_index].b_index]
        .vertex()
        .ok_or(ReconError::EmptyArchive)?;
    let zv = a.frame.samples[z];
    let field_pa = cache_a.get(mesh_a, p)?;
    let field_za = cache_a.get(mesh_a, zv)?;
    let field_pb = cache_b.get(mesh_b, p_prime)?;
    let field_zb = cache_b.get(mesh_b, zv)?;
    // the B-side corridor: every vertex on some shortest path p' .. z
    let total_b = field_pb.dist[zv];
    let corridor_b: Vec<usize> = (0..mesh_b.vertex_count())
        .filter(|&w| field_pb.dist[w] + field_zb.dist[w] == total_b)
        .collect();
    let dist_to_corridor = |v: usize| -> f64 {
        let pos = mesh_b.vertices[v];
        corridor_b
            .iter()
            .map(|&w| (mesh_b.vertices[w] - pos).norm())
            .fold(f64::INFINITY, f64::min)
    };
    let total_a = field_pa.dist[zv];
    let mut report = GeodesicImageReport {
        on_path_total: 0,
        on_path_hits: 0,
        off_path_total: 0,
        off_path_misses: 0,
    };
    for pair in &corr.pairs {
        let Some(x) = a.sources[pair.a_index].vertex() else { continue };
        if mesh_a.is_boundary(x) || x == p {
            continue;
        }
        let defect = field_pa.dist[x] + field_za.dist[x] - total_a;
        let Some(xm) = b.sources[pair.b_index].vertex() else { continue };
        if defect == 0.0 {
            report.on_path_total += 1;
            if dist_to_corridor(xm) <= tube {
                report.on_path_hits += 1;
            }
        } else if defect >= off_clearance {
            report.off_path_total += 1;
            if dist_to_corridor(xm) > tube {
                report.off_path_misses += 1;
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaRow {
    pub p: usize,
    pub p_prime: usize,
    pub lambda_mean: f64,
    pub lambda_spread: f64,
    pub n_estimates: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceRow {
    pub x: usize,
    pub y: usize,
    pub d_a: f64,
    pub d_b: f64,
    pub defect: f64,
}

/// The desk-scale certificate: first-order evidence (lambda from derivative
/// ratios) and zeroth-order evidence (distance preservation), aggregated
/// with every threshold echoed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub pair_count: usize,
    pub mutual_fraction: f64,
    pub ambiguous_fraction: f64,
    pub median_sup_defect: f64,
    pub boundary_defect: Option<f64>,
    pub lambda_rows: Vec<LambdaRow>,
    pub distance_rows: Vec<DistanceRow>,
    /// Probes for which no common regular window could be certified.
    pub window_failures: usize,
    pub lambda_pass_fraction: f64,
    pub max_distance_defect: f64,
    pub lambda_ok: bool,
    pub spread_ok: bool,
    pub distance_ok: bool,
    pub boundary_ok: Option<bool>,
    pub verdict: bool,
    pub h: f64,
    pub frame_spacing: f64,
    pub thresholds: Thresholds,
}

pub struct CertificateParams {
    pub n_probes: usize,
    /// Minimal Euclidean depth of probe points inside the domain.
    pub min_depth: f64,
    /// Cap on window expansion per side, in frame samples.
    pub window_cap: usize,
    pub thresholds: Thresholds,
    pub h: f64,
    pub seed: u64,
}

/// Inputs for one side of the pair.
pub struct Side<'a> {
    pub mesh: &'a Mesh,
    pub domain: &'a MetricDomain,
    pub archive: &'a DdfArchive,
    pub cache: &'a FieldCache,
}

/// Run the full certificate over a matched correspondence.
pub fn isometry_certificate(
    corr: &Correspondence,
    a: &Side,
    b: &Side,
    params: &CertificateParams,
) -> Result<CertificateReport, ReconError> {
    let t = &params.thresholds;
    let window_params = WindowParams {
        tau_cut: t.tau_cut,
        theta_min_deg: t.theta_min_deg,
        min_samples: 5,
        max_extent: Some(params.window_cap),
    };
    // candidate probes: interior matched sources, deep enough for windows
    let mut candidates: Vec<usize> = corr
        .pairs
        .iter()
        .filter_map(|pair| {
            let x = a.archive.sources[pair.a_index].vertex()?;
            let x_prime = b.archive.sources[pair.b_index].vertex()?;
            if a.mesh.is_boundary(x) || b.mesh.is_boundary(x_prime) {
                return None;
            }
            let depth = a.domain.shape.distance_to_boundary(a.mesh.vertices[x]);
            (depth >= params.min_depth).then_some(pair.a_index)
        })
        .collect();
    let mut rng = crate::seeded_rng(params.seed);
    candidates.shuffle(&mut rng);
    candidates.truncate(params.n_probes);
    candidates.sort_unstable();

    let mut lambda_rows = Vec::new();
    let mut window_failures = 0usize;
    let dphi = DphiParams { t_step: t.t_step_h * params.h, max_pairs: 4 };
    for &idx in &candidates {
        let p = a.archive.sources[idx].vertex().unwrap();
        let p_prime = b.archive.sources[corr.pairs[idx].b_index].vertex().unwrap();
        let window = (|| -> Result<RegularWindow, crate::error::EngineError> {
            let fa = a.cache.get(a.mesh, p)?;
            let wa = regular_boundary_window_with_field(
                a.mesh, a.domain, &a.archive.frame, p, &fa, &window_params, a.cache,
            )?;
            let fb = b.cache.get(b.mesh, p_prime)?;
            let wb = regular_boundary_window_with_field(
                b.mesh, b.domain, &b.archive.frame, p_prime, &fb, &window_params, b.cache,
            )?;
            wa.intersect(&wb).ok_or(crate::error::EngineError::EmptyWindow {
                q: wa.nearest_boundary_vertex,
                found: 0,
                need: 5,
            })
        })();
        let window = match window {
            Ok(w) if w.samples.len() >= 5 => w,
            _ => {
                window_failures += 1;
                continue;
            }
        };
        let ctx_a = ManifoldCtx {
            mesh: a.mesh,
            domain: a.domain,
            frame: &a.archive.frame,
            cache: a.cache,
        };
        let ctx_b = ManifoldCtx {
            mesh: b.mesh,
            domain: b.domain,
            frame: &b.archive.frame,
            cache: b.cache,
        };
        match angle_recovery(&ctx_a, p, &window, Some((&ctx_b, p_prime)), &dphi) {
            Ok(report) => {
                let lambdas: Vec<f64> =
                    report.pairs.iter().filter_map(|pr| pr.lambda).collect();
                if lambdas.is_empty() {
                    window_failures += 1;
                    continue;
                }
                lambda_rows.push(LambdaRow {
                    p,
                    p_prime,
                    lambda_mean: lambdas.iter().sum::<f64>() / lambdas.len() as f64,
                    lambda_spread: report.lambda_consistency,
                    n_estimates: lambdas.len(),
                });
            }
            Err(crate::error::RigidityError::DegenerateDirections { .. })
            | Err(crate::error::RigidityError::PathTooShort { .. }) => {
                window_failures += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    if lambda_rows.is_empty() {
        return Err(ReconError::InsufficientCoverage);
    }

    // zeroth-order evidence: distance preservation between nearby probes
    let probe_vertices: Vec<(usize, usize)> = candidates
        .iter()
        .map(|&idx| {
            (
                a.archive.sources[idx].vertex().unwrap(),
                b.archive.sources[corr.pairs[idx].b_index].vertex().unwrap(),
            )
        })
        .collect();
    let fields: Vec<_> = probe_vertices
        .par_iter()
        .map(|&(x, x_prime)| {
            let fa = distance_field(a.mesh, x)?;
            let fb = distance_field(b.mesh, x_prime)?;
            Ok::<_, crate::error::EngineError>((fa, fb))
        })
        .collect::<Result<_, _>>()?;
    let mut distance_rows = Vec::new();
    for (i, &(x, _)) in probe_vertices.iter().enumerate() {
        for (j, &(y, y_prime)) in probe_vertices.iter().enumerate().skip(i + 1) {
            let d_a = fields[i].0.dist[y];
            if d_a > 0.3 {
                continue;
            }
            let d_b = fields[i].1.dist[y_prime];
            distance_rows.push(DistanceRow { x, y, d_a, d_b, defect: (d_a - d_b).abs() });
            let _ = j;
        }
    }

    let lambda_pass = lambda_rows
        .iter()
        .filter(|r| (r.lambda_mean - 1.0).abs() <= t.lambda_tol)
        .count();
    let lambda_pass_fraction = lambda_pass as f64 / lambda_rows.len() as f64;
    let lambda_ok = lambda_pass_fraction >= 0.9;
    let spread_ok = lambda_rows.iter().all(|r| r.lambda_spread <= t.lambda_spread);
    let max_distance_defect =
        distance_rows.iter().fold(0.0f64, |acc, r| acc.max(r.defect));
    let distance_ok = max_distance_defect <= t.dist_defect_h * params.h;
    let boundary_defect = boundary_identity_check(corr, a.archive, b.archive, a.mesh).ok();
    let boundary_ok = boundary_defect.map(|d| d <= 2.0 * a.archive.frame.spacing);
    let mutual = corr.pairs.iter().filter(|p| p.mutual).count();
    let ambiguous = corr.pairs.iter().filter(|p| p.ambiguous).count();
    let verdict =
        lambda_ok && spread_ok && distance_ok && boundary_ok.unwrap_or(true);
    Ok(CertificateReport {
        pair_count: corr.pairs.len(),
        mutual_fraction: mutual as f64 / corr.pairs.len() as f64,
        ambiguous_fraction: ambiguous as f64 / corr.pairs.len() as f64,
        median_sup_defect: corr.median_sup_defect(),
        boundary_defect,
        lambda_rows,
        distance_rows,
        window_failures,
        lambda_pass_fraction,
        max_distance_defect,
        lambda_ok,
        spread_ok,
        distance_ok,
        boundary_ok,
        verdict,
        h: params.h,
        frame_spacing: a.archive.frame.spacing,
        thresholds: params.thresholds.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddr::{BoundaryFrame, DdfArchive};
    use crate::domain::{DomainShape, MetricSpec};
    use crate::geom::Point;
    use crate::mesh::build_mesh;
    use crate::MetricDomain;

    fn small_archive() -> (Mesh, DdfArchive) {
        let d = MetricDomain::new(DomainShape::Disk, MetricSpec::Euclidean, "disk");
        let mesh = build_mesh(&d, 0.05, 3).unwrap();
        let frame = BoundaryFrame::build(&mesh, 0.1).unwrap();
        let mut sources: Vec<usize> = [
            Point::new(0.0, 0.0),
            Point::new(0.4, 0.0),
            Point::new(0.0, 0.4),
            Point::new(-0.4, -0.2),
            Point::new(0.2, -0.5),
        ]
        .iter()
        .map(|&p| mesh.nearest_vertex(p))
        .collect();
        // a few boundary sources
        sources.push(frame.samples[0]);
        sources.push(frame.samples[frame.len() / 3]);
        let archive = DdfArchive::assemble(&mesh, &frame, &sources).unwrap();
        (mesh, archive)
    }

    #[test]
    fn identity_matching_has_zero_defects() {
        let (mesh, archive) = small_archive();
        let corr = build_phi(&archive, &archive, 0.9).unwrap();
        for pair in &corr.pairs {
            assert_eq!(pair.a_index, pair.b_index);
            assert_eq!(pair.sup_defect, 0.0);
            assert!(pair.mutual);
            assert!(!pair.ambiguous);
        }
        let bd = boundary_identity_check(&corr, &archive, &archive, &mesh).unwrap();
        assert_eq!(bd, 0.0);
    }

    #[test]
    fn matching_is_symmetric_on_exact_data() {
        let (_, archive) = small_archive();
        // scramble the order of B to decouple indices
        let mut b = archive.clone();
        b.sources.rotate_left(2);
        b.vectors.rotate_left(2);
        let ab = build_phi(&archive, &b, 0.9).unwrap();
        let ba = build_phi(&b, &archive, 0.9).unwrap();
        for pair in &ab.pairs {
            assert!(pair.mutual);
            assert_eq!(ba.pairs[pair.b_index].b_index, pair.a_index, "inverse pair lists");
        }
    }

    #[test]
    fn empty_archive_is_rejected() {
        let (_, archive) = small_archive();
        let empty = DdfArchive {
            frame: archive.frame.clone(),
            sources: vec![],
            vectors: vec![],
        };
        assert!(matches!(build_phi(&archive, &empty, 0.9), Err(ReconError::EmptyArchive)));
    }
}
