//! Regular boundary windows: contiguous boundary arcs around the nearest
//! boundary point of an interior vertex on which distance data is provably
//! well behaved — unique shortest paths that meet the boundary only at
//! their endpoint, transversally, with the distance function smooth at the
//! interior probe.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::ddr::BoundaryFrame;
use crate::deriv::detect_cut;
use crate::dist::{distance_field, DistanceField};
use crate::domain::MetricDomain;
use crate::error::EngineError;
use crate::mesh::Mesh;

/// Shared store of distance fields keyed by source vertex. Windows probe
/// many boundary sources; batch sweeps reuse them across probe points.
#[derive(Default)]
pub struct FieldCache {
    inner: Mutex<HashMap<usize, Arc<DistanceField>>>,
}

impl FieldCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, mesh: &Mesh, source: usize) -> Result<Arc<DistanceField>, EngineError> {
        if let Some(f) = self.inner.lock().unwrap().get(&source) {
            return Ok(f.clone());
        }
        let field = Arc::new(distance_field(mesh, source)?);
        let mut map = self.inner.lock().unwrap();
        Ok(map.entry(source).or_insert(field).clone())
    }

    /// Compute many fields up front in parallel.
    pub fn prefetch(&self, mesh: &Mesh, sources: &[usize]) -> Result<(), EngineError> {
        let missing: Vec<usize> = {
            let map = self.inner.lock().unwrap();
            sources.iter().copied().filter(|s| !map.contains_key(s)).collect()
        };
        let computed: Result<Vec<(usize, DistanceField)>, EngineError> = missing
            .par_iter()
            .map(|&s| distance_field(mesh, s).map(|f| (s, f)))
            .collect();
        let mut map = self.inner.lock().unwrap();
        for (s, f) in computed? {
            map.entry(s).or_insert_with(|| Arc::new(f));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WindowParams {
    /// Cut-detection residual threshold, relative to h.
    pub tau_cut: f64,
    /// Minimal angle (degrees) between the arriving path and the boundary.
    pub theta_min_deg: f64,
    /// A window with fewer samples than this is an error.
    pub min_samples: usize,
    /// Optional cap on the expansion per side, in frame samples.
    pub max_extent: Option<usize>,
}

impl Default for WindowParams {
    fn default() -> Self {
        WindowParams { tau_cut: 0.07, theta_min_deg: 10.0, min_samples: 5, max_extent: None }
    }
}

/// A contiguous arc of frame samples around the nearest boundary point of
/// `center`, every sample of which passed the regularity tests.
#[derive(Debug, Clone)]
pub struct RegularWindow {
    /// The interior probe vertex.
    pub center: usize,
    /// Nearest boundary vertex to the probe (argmin of d over the boundary).
    pub nearest_boundary_vertex: usize,
    pub loop_idx: usize,
    /// Frame sample indices, in cyclic order along the loop.
    pub samples: Vec<usize>,
}

impl RegularWindow {
    pub fn contains_sample(&self, sample: usize) -> bool {
        self.samples.contains(&sample)
    }

    /// Boundary vertex ids of the window samples.
    pub fn vertex_samples(&self, frame: &BoundaryFrame) -> Vec<usize> {
        self.samples.iter().map(|&s| frame.samples[s]).collect()
    }

    /// Metric arclength covered by the window.
    pub fn arc_span(&self, frame: &BoundaryFrame) -> f64 {
        if self.samples.len() < 2 {
            return 0.0;
        }
        let first = *self.samples.first().unwrap();
        let last = *self.samples.last().unwrap();
        let total = frame.loop_lengths[self.loop_idx];
        let raw = frame.arc_positions[last] - frame.arc_positions[first];
        if raw >= 0.0 {
            raw
        } else {
            raw + total
        }
    }

    /// Intersection with another window on the same loop (used to realize a
    /// common window for a matched pair of probes).
    pub fn intersect(&self, other: &RegularWindow) -> Option<RegularWindow> {
        if self.loop_idx != other.loop_idx {
            return None;
        }
        let samples: Vec<usize> = self
            .samples
            .iter()
            .copied()
            .filter(|s| other.samples.contains(s))
            .collect();
        if samples.is_empty() {
            None
        } else {
            Some(RegularWindow {
                center: self.center,
                nearest_boundary_vertex: self.nearest_boundary_vertex,
                loop_idx: self.loop_idx,
                samples,
            })
        }
    }
}

/// Regularity test of one frame sample `z` for the probe `p`:
/// (a) the field sourced at `z` has no cut at `p`,
/// (b) the shortest path from `z` to `p` meets the boundary only at `z` —
///     discretely, away from `z` it keeps a clearance of `1.2 h` (paths
///     that bend along the boundary or round a reflex corner dip inside
///     that band even when they avoid boundary vertices),
/// (c) the path meets the boundary transversally at `z`.
pub fn sample_is_regular(
    mesh: &Mesh,
    domain: &MetricDomain,
    frame: &BoundaryFrame,
    p: usize,
    sample: usize,
    params: &WindowParams,
    cache: &FieldCache,
) -> Result<bool, EngineError> {
    let zv = frame.samples[sample];
    let field_z = cache.get(mesh, zv)?;
    match detect_cut(mesh, &field_z, p, params.tau_cut) {
        Ok(true) => return Ok(false),
        Ok(false) => {}
        // a probe hugging the boundary cannot be certified against this z
        Err(EngineError::SourceInStencil(_)) => return Ok(false),
        Err(e) => return Err(e),
    }
    let path = field_z.shortest_path(p)?; // z .. p
    if path.len() < 2 {
        return Ok(false);
    }
    if path[1..].iter().any(|&v| mesh.is_boundary(v)) {
        return Ok(false);
    }
    // boundary clearance along the path, except the stretch leaving z
    let z_pos = mesh.vertices[zv];
    let exempt = (mesh.stencil_radius + 1) as f64 * mesh.h;
    let clearance = 1.2 * mesh.h;
    for seg in path.windows(2) {
        let a = mesh.vertices[seg[0]];
        let b = mesh.vertices[seg[1]];
        for k in 0..=4 {
            let x = a + (b - a) * (k as f64 / 4.0);
            if (x - z_pos).norm() <= exempt {
                continue;
            }
            if domain.shape.distance_to_boundary(x) < clearance {
                return Ok(false);
            }
        }
    }
    // transversality at z, measured in g(z) over a short secant
    let k = (path.len() - 1).min(3);
    let u = mesh.vertices[path[k]] - mesh.vertices[path[0]];
    let Some(t) = mesh.boundary_tangent(zv) else { return Ok(false) };
    let dot = domain.inner(z_pos, u, t)
        / (domain.g_norm(z_pos, u) * domain.g_norm(z_pos, t));
    let angle = dot.abs().clamp(0.0, 1.0).acos();
    Ok(angle >= params.theta_min_deg.to_radians())
}

/// Nearest boundary vertex to the probe: argmin of the probe's distance
/// field over boundary vertices, ties to the smallest index.
pub fn nearest_boundary_vertex(mesh: &Mesh, field_p: &DistanceField) -> usize {
    mesh.boundary_vertices()
        .min_by(|&a, &b| field_p.dist[a].total_cmp(&field_p.dist[b]).then(a.cmp(&b)))
        .expect("mesh has boundary vertices")
}

/// Maximal contiguous regular window around the nearest boundary point of
/// `p`, grown sample by sample until the regularity test fails on each side
/// (or the loop closes, or `max_extent` is reached).
pub fn regular_boundary_window(
    mesh: &Mesh,
    domain: &MetricDomain,
    frame: &BoundaryFrame,
    p: usize,
    params: &WindowParams,
    cache: &FieldCache,
) -> Result<RegularWindow, EngineError> {
    if mesh.is_boundary(p) {
        return Err(EngineError::NotInterior(p));
    }
    let field_p = distance_field(mesh, p)?;
    regular_boundary_window_with_field(mesh, domain, frame, p, &field_p, params, cache)
}

pub fn regular_boundary_window_with_field(
    mesh: &Mesh,
    domain: &MetricDomain,
    frame: &BoundaryFrame,
    p: usize,
    field_p: &DistanceField,
    params: &WindowParams,
    cache: &FieldCache,
) -> Result<RegularWindow, EngineError> {
    if mesh.is_boundary(p) {
        return Err(EngineError::NotInterior(p));
    }
    let q = nearest_boundary_vertex(mesh, field_p);
    let center_sample = frame
        .nearest_sample(mesh, q)
        .ok_or(EngineError::BadVertex(q))?;
    let loop_idx = frame.loop_of[center_sample];
    let (lo, hi) = frame.loop_ranges[loop_idx];
    let m = hi - lo;
    let cpos = center_sample - lo;
    let cap = params.max_extent.unwrap_or(m);

    if !sample_is_regular(mesh, domain, frame, p, center_sample, params, cache)? {
        return Err(EngineError::EmptyWindow { q, found: 0, need: params.min_samples });
    }
    let mut right = 0usize;
    while right < m - 1 && right < cap {
        let s = lo + (cpos + right + 1) % m;
        if sample_is_regular(mesh, domain, frame, p, s, params, cache)? {
            right += 1;
        } else {
            break;
        }
    }
    let mut left = 0usize;
    while left + right < m - 1 && left < cap {
        let s = lo + (cpos + m - left - 1) % m;
        if sample_is_regular(mesh, domain, frame, p, s, params, cache)? {
            left += 1;
        } else {
            break;
        }
    }
    let samples: Vec<usize> = if left + right + 1 >= m {
        (lo..hi).collect()
    } else {
        (0..=(left + right))
            .map(|k| lo + (cpos + m - left + k) % m)
            .collect()
    };
    if samples.len() < params.min_samples {
        return Err(EngineError::EmptyWindow { q, found: samples.len(), need: params.min_samples });
    }
    Ok(RegularWindow { center: p, nearest_boundary_vertex: q, loop_idx, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DomainShape, MetricSpec};
    use crate::geom::Point;
    use crate::mesh::build_mesh;
    use crate::MetricDomain;

    #[test]
    fn disk_center_window_is_the_whole_boundary() {
        let domain = MetricDomain::new(DomainShape::Disk, MetricSpec::Euclidean, "disk");
        let mesh = build_mesh(&domain, 0.04, 3).unwrap();
        let frame = BoundaryFrame::build(&mesh, 0.08).unwrap();
        let cache = FieldCache::new();
        let p = mesh.nearest_vertex(Point::new(0.0, 0.0));
        let window = regular_boundary_window(
            &mesh,
            &domain,
            &frame,
            p,
            &WindowParams::default(),
            &cache,
        )
        .unwrap();
        assert_eq!(
            window.samples.len(),
            frame.len(),
            "by symmetry every boundary direction is regular from the center"
        );
    }

    #[test]
    fn annulus_window_hugs_the_inner_circle_near_side() {
        let domain = MetricDomain::new(
            DomainShape::Annulus { r_in: 0.3 },
            MetricSpec::Euclidean,
            "annulus",
        );
        let mesh = build_mesh(&domain, 0.02, 3).unwrap();
        let frame = BoundaryFrame::build(&mesh, 0.04).unwrap();
        let cache = FieldCache::new();
        let p = mesh.nearest_vertex(Point::new(0.6, 0.0));
        let window = regular_boundary_window(
            &mesh,
            &domain,
            &frame,
            p,
            &WindowParams::default(),
            &cache,
        )
        .unwrap();
        // nearest boundary point is on the inner circle at (0.3, 0)
        let q = mesh.vertices[window.nearest_boundary_vertex];
        assert!((q - Point::new(0.3, 0.0)).norm() <= 2.0 * mesh.h, "nearest point off: {q:?}");
        assert_eq!(window.loop_idx, 1, "window must sit on the inner loop");
        // the far side of the inner circle is shadowed: the window must not
        // wrap around to x < -0.15
        for &s in &window.samples {
            let z = mesh.vertices[frame.samples[s]];
            assert!(z.x > -0.15, "window reached the far side at {z:?}");
        }
        assert!(window.samples.len() >= 5);
    }

    #[test]
    fn dumbbell_window_blocked_behind_the_neck() {
        let domain = MetricDomain::new(
            DomainShape::Dumbbell {
                lobe_center: 0.55,
                lobe_radius: 0.45,
                neck_half_width: 0.18,
            },
            MetricSpec::Euclidean,
            "dumbbell",
        );
        let mesh = build_mesh(&domain, 0.02, 3).unwrap();
        let frame = BoundaryFrame::build(&mesh, 0.04).unwrap();
        let cache = FieldCache::new();
        let p = mesh.nearest_vertex(Point::new(0.62, 0.1));
        let window = regular_boundary_window(
            &mesh,
            &domain,
            &frame,
            p,
            &WindowParams::default(),
            &cache,
        )
        .unwrap();
        // boundary near the neck mouth stays in sight, but the far side of
        // the other lobe is shadowed by cuts behind the neck
        for &s in &window.samples {
            let z = mesh.vertices[frame.samples[s]];
            assert!(
                z.x > -0.45,
                "window reached the far side of the other lobe: {z:?}"
            );
        }
        // an off-axis target on the far lobe is blocked by the neck corner:
        // its geodesic to p bends along the boundary, failing regularity
        let target = Point::new(-0.55, 0.45);
        let blocked_vertex = mesh
            .boundary_vertices()
            .min_by(|&a, &b| {
                (mesh.vertices[a] - target)
                    .norm()
                    .total_cmp(&(mesh.vertices[b] - target).norm())
            })
            .unwrap();
        let blocked = frame.nearest_sample(&mesh, blocked_vertex).unwrap();
        assert!(
            !sample_is_regular(
                &mesh,
                &domain,
                &frame,
                p,
                blocked,
                &WindowParams::default(),
                &cache
            )
            .unwrap(),
            "a corner-shadowed target must fail the regularity test"
        );
    }

    #[test]
    fn probe_on_boundary_is_rejected() {
        let domain = MetricDomain::new(DomainShape::Disk, MetricSpec::Euclidean, "disk");
        let mesh = build_mesh(&domain, 0.1, 3).unwrap();
        let frame = BoundaryFrame::build(&mesh, 0.2).unwrap();
        let cache = FieldCache::new();
        let b = mesh.boundary_vertices().next().unwrap();
        assert!(matches!(
            regular_boundary_window(
                &mesh,
                &domain,
                &frame,
                b,
                &WindowParams::default(),
                &cache
            ),
            Err(EngineError::NotInterior(_))
        ));
    }
}
