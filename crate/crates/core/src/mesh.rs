//! Wide-stencil graph discretization of a metric domain.
//!
//! Grid vertices at spacing `h` clipped to the closed domain, boundary
//! vertices resampled uniformly in metric arclength, and stencil edges
//! connecting every vertex pair within Chebyshev radius `stencil_radius * h`
//! whose straight segment stays inside the closed domain.
//!
//! Edge lengths are Simpson-rule metric lengths snapped to a power-of-two
//! lattice (`LENGTH_QUANTUM`). Path sums then stay below 2^53 quanta, so
//! shortest-path distances, their differences, and all metric-space
//! inequalities evaluate exactly in f64 integer arithmetic.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{DomainShape, MetricDomain, MetricSpec};
use crate::error::MeshError;
use crate::geom::Point;

/// 2^-45. Quantization error per edge is at most 2^-46 ~ 1.4e-14, negligible
/// against the O(h) metrication error but small enough that Euclidean edge
/// lengths stay within 1e-12 of exact.
pub const LENGTH_QUANTUM: f64 = 1.0 / 35184372088832.0;

/// Snap a metric length to the quantum lattice (never to zero).
pub fn quantize_length(len: f64) -> f64 {
    (len / LENGTH_QUANTUM).round().max(1.0) * LENGTH_QUANTUM
}

/// Composite Simpson rule with 5 sample points for the metric length of the
/// straight segment `a`..`b`.
pub fn simpson_metric_length(metric: &MetricSpec, a: Point, b: Point) -> f64 {
    let d = b - a;
    let f = |t: f64| {
        let g = metric.eval(a + d * t);
        (g * d).dot(&d).max(0.0).sqrt()
    };
    (f(0.0) + 4.0 * f(0.25) + 2.0 * f(0.5) + 4.0 * f(0.75) + f(1.0)) / 12.0
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub boundary_flags: Vec<bool>,
    /// Cyclic vertex-index lists, one per boundary loop, in traversal order.
    pub boundary_order: Vec<Vec<usize>>,
    pub h: f64,
    pub stencil_radius: usize,
    pub domain_kind: String,
    pub metric_name: String,
    /// Canonical undirected edge list (i < j).
    edges: Vec<(u32, u32, f64)>,
    // CSR adjacency over both directions
    offsets: Vec<u32>,
    targets: Vec<u32>,
    lengths: Vec<f64>,
    /// Interior vertices whose full Chebyshev stencil survived clipping.
    full_stencil: Vec<bool>,
    /// Cumulative metric arclength of each boundary vertex along its loop.
    boundary_arc: Vec<Vec<f64>>,
    /// Total metric length per loop.
    loop_lengths: Vec<f64>,
    /// For boundary vertices: (loop index, position within the loop).
    vertex_loop: Vec<Option<(u32, u32)>>,
    /// Spatial hash (cell size h) for nearest-vertex queries.
    cells: HashMap<(i64, i64), Vec<u32>>,
}

impl Mesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32, f64)] {
        &self.edges
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary_flags[v]
    }

    pub fn has_full_stencil(&self, v: usize) -> bool {
        self.full_stencil[v]
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.offsets[v] as usize;
        let hi = self.offsets[v + 1] as usize;
        self.targets[lo..hi]
            .iter()
            .zip(&self.lengths[lo..hi])
            .map(|(&t, &l)| (t as usize, l))
    }

    pub fn degree(&self, v: usize) -> usize {
        (self.offsets[v + 1] - self.offsets[v]) as usize
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertex_count()).filter(|&v| !self.boundary_flags[v])
    }

    pub fn boundary_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertex_count()).filter(|&v| self.boundary_flags[v])
    }

    /// Loop index and in-loop position of a boundary vertex.
    pub fn loop_position(&self, v: usize) -> Option<(usize, usize)> {
        self.vertex_loop[v].map(|(l, k)| (l as usize, k as usize))
    }

    /// Metric arclength position of a boundary vertex along its loop.
    pub fn arc_position(&self, v: usize) -> Option<f64> {
        let (l, k) = self.loop_position(v)?;
        Some(self.boundary_arc[l][k])
    }

    pub fn loop_length(&self, loop_idx: usize) -> f64 {
        self.loop_lengths[loop_idx]
    }

    pub fn loop_count(&self) -> usize {
        self.boundary_order.len()
    }

    /// Cyclic arclength distance between two boundary vertices; infinite when
    /// they live on different loops.
    pub fn boundary_arc_distance(&self, a: usize, b: usize) -> f64 {
        match (self.loop_position(a), self.loop_position(b)) {
            (Some((la, ka)), Some((lb, kb))) if la == lb => {
                let total = self.loop_lengths[la];
                let d = (self.boundary_arc[la][ka] - self.boundary_arc[lb][kb]).abs();
                d.min(total - d)
            }
            _ => f64::INFINITY,
        }
    }

    /// Outward traversal tangent of the boundary at a boundary vertex,
    /// estimated from the two cyclic neighbors (not normalized).
    pub fn boundary_tangent(&self, v: usize) -> Option<Point> {
        let (l, k) = self.loop_position(v)?;
        let order = &self.boundary_order[l];
        let n = order.len();
        let prev = self.vertices[order[(k + n - 1) % n]];
        let next = self.vertices[order[(k + 1) % n]];
        Some(next - prev)
    }

    /// Mesh vertex nearest to `p` in Euclidean distance (ties by index).
    pub fn nearest_vertex(&self, p: Point) -> usize {
        let cx = (p.x / self.h).floor() as i64;
        let cy = (p.y / self.h).floor() as i64;
        let mut best: Option<(f64, usize)> = None;
        let mut ring = 0i64;
        loop {
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    if dx.abs().max(dy.abs()) != ring {
                        continue;
                    }
                    if let Some(list) = self.cells.get(&(cx + dx, cy + dy)) {
                        for &v in list {
                            let d = (self.vertices[v as usize] - p).norm_squared();
                            let cand = (d, v as usize);
                            if best.map_or(true, |b| cand < b) {
                                best = Some(cand);
                            }
                        }
                    }
                }
            }
            // any vertex in ring k > ring sits at least (k-1) h away, so the
            // current best is final once it is within ring * h
            if let Some((d2, _)) = best {
                if d2.sqrt() <= ring as f64 * self.h {
                    break;
                }
            }
            ring += 1;
            assert!(ring < 1_000_000, "nearest_vertex on an empty mesh");
        }
        best.expect("mesh has vertices").1
    }

    /// All vertices within Euclidean `radius` of `p`.
    pub fn vertices_within(&self, p: Point, radius: f64) -> Vec<usize> {
        let cx = (p.x / self.h).floor() as i64;
        let cy = (p.y / self.h).floor() as i64;
        let r = (radius / self.h).ceil() as i64 + 1;
        let mut out = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if let Some(list) = self.cells.get(&(cx + dx, cy + dy)) {
                    for &v in list {
                        if (self.vertices[v as usize] - p).norm() <= radius {
                            out.push(v as usize);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Interior vertex nearest to `p`.
    pub fn nearest_interior_vertex(&self, p: Point) -> usize {
        let v = self.nearest_vertex(p);
        if !self.boundary_flags[v] {
            return v;
        }
        // fall back to a scan of the surrounding cells
        let mut best: Option<(f64, usize)> = None;
        for (idx, q) in self.vertices.iter().enumerate() {
            if self.boundary_flags[idx] {
                continue;
            }
            let d = (q - p).norm_squared();
            if best.map_or(true, |b| (d, idx) < b) {
                best = Some((d, idx));
            }
        }
        best.expect("mesh has interior vertices").1
    }
}

/// Resample one boundary loop at uniform metric arclength spacing <= h.
/// Returns the sample points together with their cumulative metric arc
/// positions and the total loop length.
fn resample_loop(
    loop_: &crate::domain::BoundaryLoop,
    metric: &MetricSpec,
    h: f64,
) -> (Vec<Point>, Vec<f64>, f64) {
    let euclid = loop_.euclid_len();
    let fine = ((euclid / h).ceil() as usize * 8).max(64);
    // cumulative metric length over a fine parameter polyline
    let mut params = Vec::with_capacity(fine + 1);
    let mut cum = Vec::with_capacity(fine + 1);
    let mut total = 0.0;
    let mut prev = loop_.eval(0.0);
    params.push(0.0);
    cum.push(0.0);
    for k in 1..=fine {
        let t = k as f64 / fine as f64;
        let p = loop_.eval(t);
        total += simpson_metric_length(metric, prev, p);
        params.push(t);
        cum.push(total);
        prev = p;
    }
    let count = (total / h).ceil().max(4.0) as usize;
    let mut points = Vec::with_capacity(count);
    let mut arcs = Vec::with_capacity(count);
    let mut seg = 0usize;
    for k in 0..count {
        let target = total * k as f64 / count as f64;
        while seg + 1 < cum.len() && cum[seg + 1] < target {
            seg += 1;
        }
        let span = (cum[seg + 1] - cum[seg]).max(f64::MIN_POSITIVE);
        let frac = ((target - cum[seg]) / span).clamp(0.0, 1.0);
        let t = params[seg] + (params[seg + 1] - params[seg]) * frac;
        points.push(loop_.eval(t));
        arcs.push(target);
    }
    (points, arcs, total)
}

struct VertexSet {
    vertices: Vec<Point>,
    boundary_flags: Vec<bool>,
    boundary_order: Vec<Vec<usize>>,
    boundary_arc: Vec<Vec<f64>>,
    loop_lengths: Vec<f64>,
}

fn build_vertex_set(shape: &DomainShape, metric: &MetricSpec, h: f64) -> VertexSet {
    let (min, max) = shape.bounding_box();
    let i_lo = (min.x / h).floor() as i64 - 1;
    let i_hi = (max.x / h).ceil() as i64 + 1;
    let j_lo = (min.y / h).floor() as i64 - 1;
    let j_hi = (max.y / h).ceil() as i64 + 1;
    let mut vertices = Vec::new();
    for j in j_lo..=j_hi {
        for i in i_lo..=i_hi {
            let p = Point::new(i as f64 * h, j as f64 * h);
            if shape.contains(p) && shape.distance_to_boundary(p) > 1e-9 {
                vertices.push(p);
            }
        }
    }
    let mut boundary_flags = vec![false; vertices.len()];
    let mut boundary_order = Vec::new();
    let mut boundary_arc = Vec::new();
    let mut loop_lengths = Vec::new();
    for loop_ in shape.boundary_loops() {
        let (points, arcs, total) = resample_loop(&loop_, metric, h);
        let mut order = Vec::with_capacity(points.len());
        for p in points {
            order.push(vertices.len());
            vertices.push(p);
            boundary_flags.push(true);
        }
        boundary_order.push(order);
        boundary_arc.push(arcs);
        loop_lengths.push(total);
    }
    VertexSet { vertices, boundary_flags, boundary_order, boundary_arc, loop_lengths }
}

fn spatial_cells(vertices: &[Point], h: f64) -> HashMap<(i64, i64), Vec<u32>> {
    let mut cells: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    for (idx, p) in vertices.iter().enumerate() {
        let key = ((p.x / h).floor() as i64, (p.y / h).floor() as i64);
        cells.entry(key).or_default().push(idx as u32);
    }
    cells
}

/// Enumerate undirected candidate pairs within Chebyshev radius `r * h`
/// whose straight segment stays inside the domain. Deterministic order.
fn stencil_pairs(
    shape: &DomainShape,
    vertices: &[Point],
    cells: &HashMap<(i64, i64), Vec<u32>>,
    h: f64,
    r: usize,
) -> Vec<(u32, u32)> {
    let reach = r as f64 * h * (1.0 + 1e-12) + 1e-12;
    let cell_r = r as i64 + 1;
    let mut pairs = Vec::new();
    for (i, p) in vertices.iter().enumerate() {
        let cx = (p.x / h).floor() as i64;
        let cy = (p.y / h).floor() as i64;
        for dy in -cell_r..=cell_r {
            for dx in -cell_r..=cell_r {
                let Some(list) = cells.get(&(cx + dx, cy + dy)) else { continue };
                for &j in list {
                    if (j as usize) <= i {
                        continue;
                    }
                    let q = vertices[j as usize];
                    let d = q - p;
                    if d.x.abs() > reach || d.y.abs() > reach {
                        continue;
                    }
                    if shape.segment_inside(*p, q) {
                        pairs.push((i as u32, j));
                    }
                }
            }
        }
    }
    pairs
}

fn assemble(
    vs: VertexSet,
    pairs: &[(u32, u32)],
    metric: &MetricSpec,
    h: f64,
    r: usize,
    domain_kind: String,
    metric_name: String,
) -> Result<Mesh, MeshError> {
    let edges: Vec<(u32, u32, f64)> = pairs
        .iter()
        .map(|&(i, j)| {
            let len = quantize_length(simpson_metric_length(
                metric,
                vs.vertices[i as usize],
                vs.vertices[j as usize],
            ));
            (i, j, len)
        })
        .collect();
    finish_mesh(
        vs.vertices,
        vs.boundary_flags,
        vs.boundary_order,
        Some((vs.boundary_arc, vs.loop_lengths)),
        edges,
        h,
        r,
        domain_kind,
        metric_name,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish_mesh(
    vertices: Vec<Point>,
    boundary_flags: Vec<bool>,
    boundary_order: Vec<Vec<usize>>,
    arcs: Option<(Vec<Vec<f64>>, Vec<f64>)>,
    edges: Vec<(u32, u32, f64)>,
    h: f64,
    stencil_radius: usize,
    domain_kind: String,
    metric_name: String,
) -> Result<Mesh, MeshError> {
    let n = vertices.len();
    if n == 0 {
        return Err(MeshError::EmptyDomain);
    }
    // CSR over both directions
    let mut deg = vec![0u32; n + 1];
    for &(i, j, _) in &edges {
        deg[i as usize + 1] += 1;
        deg[j as usize + 1] += 1;
    }
    let mut offsets = deg;
    for k in 1..=n {
        offsets[k] += offsets[k - 1];
    }
    let m = offsets[n] as usize;
    let mut targets = vec![0u32; m];
    let mut lengths = vec![0.0f64; m];
    let mut cursor = offsets.clone();
    for &(i, j, len) in &edges {
        let ci = cursor[i as usize] as usize;
        targets[ci] = j;
        lengths[ci] = len;
        cursor[i as usize] += 1;
        let cj = cursor[j as usize] as usize;
        targets[cj] = i;
        lengths[cj] = len;
        cursor[j as usize] += 1;
    }
    // connectivity
    let components = {
        let mut seen = vec![false; n];
        let mut count = 0usize;
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(v) = stack.pop() {
                let lo = offsets[v] as usize;
                let hi = offsets[v + 1] as usize;
                for &t in &targets[lo..hi] {
                    if !seen[t as usize] {
                        seen[t as usize] = true;
                        stack.push(t as usize);
                    }
                }
            }
        }
        count
    };
    if components != 1 {
        return Err(MeshError::Disconnected { components });
    }
    // full stencil = interior vertex with the complete grid neighborhood
    let want = (2 * stencil_radius + 1) * (2 * stencil_radius + 1) - 1;
    let mut full_stencil = vec![false; n];
    for v in 0..n {
        if boundary_flags[v] {
            continue;
        }
        let lo = offsets[v] as usize;
        let hi = offsets[v + 1] as usize;
        let grid_neighbors = targets[lo..hi]
            .iter()
            .filter(|&&t| !boundary_flags[t as usize])
            .count();
        full_stencil[v] = grid_neighbors == want;
    }
    // boundary arc positions: chord-rule cumulative metric lengths so that
    // meshes loaded from files agree with freshly built ones
    let (boundary_arc, loop_lengths) = match arcs {
        Some(a) => a,
        None => {
            let metric = MetricSpec::parse(&metric_name)
                .map_err(|e| MeshError::Format(format!("metric name: {e}")))?;
            let mut all_arcs = Vec::new();
            let mut totals = Vec::new();
            for order in &boundary_order {
                let mut cum = Vec::with_capacity(order.len());
                let mut s = 0.0;
                for (k, &v) in order.iter().enumerate() {
                    cum.push(s);
                    let next = vertices[order[(k + 1) % order.len()]];
                    s += simpson_metric_length(&metric, vertices[v], next);
                }
                all_arcs.push(cum);
                totals.push(s);
            }
            (all_arcs, totals)
        }
    };
    let mut vertex_loop = vec![None; n];
    for (l, order) in boundary_order.iter().enumerate() {
        for (k, &v) in order.iter().enumerate() {
            vertex_loop[v] = Some((l as u32, k as u32));
        }
    }
    let cells = spatial_cells(&vertices, h);
    Ok(Mesh {
        vertices,
        boundary_flags,
        boundary_order,
        h,
        stencil_radius,
        domain_kind,
        metric_name,
        edges,
        offsets,
        targets,
        lengths,
        full_stencil,
        boundary_arc,
        loop_lengths,
        vertex_loop,
        cells,
    })
}

/// Discretize a metric domain into a wide-stencil graph.
pub fn build_mesh(domain: &MetricDomain, h: f64, stencil_radius: usize) -> Result<Mesh, MeshError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(MeshError::BadSpacing(h));
    }
    if stencil_radius < 1 {
        return Err(MeshError::BadStencilRadius(stencil_radius));
    }
    domain.shape.validate()?;
    let vs = build_vertex_set(&domain.shape, &domain.metric, h);
    let cells = spatial_cells(&vs.vertices, h);
    let pairs = stencil_pairs(&domain.shape, &vs.vertices, &cells, h, stencil_radius);
    assemble(
        vs,
        &pairs,
        &domain.metric,
        h,
        stencil_radius,
        domain.shape.name(),
        domain.metric.name(),
    )
}

/// Discretize two metrics over the same shape with a shared vertex set and
/// edge topology. The boundary resampling is computed once (boundary-fixing
/// gauges and interior-supported conformal factors leave boundary arclength
/// unchanged), so frames built on both meshes coincide index by index.
pub fn build_mesh_pair(
    base: &MetricDomain,
    other_metric: &MetricSpec,
    h: f64,
    stencil_radius: usize,
) -> Result<(Mesh, Mesh), MeshError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(MeshError::BadSpacing(h));
    }
    if stencil_radius < 1 {
        return Err(MeshError::BadStencilRadius(stencil_radius));
    }
    base.shape.validate()?;
    let vs = build_vertex_set(&base.shape, &base.metric, h);
    let cells = spatial_cells(&vs.vertices, h);
    let pairs = stencil_pairs(&base.shape, &vs.vertices, &cells, h, stencil_radius);
    let vs_clone = VertexSet {
        vertices: vs.vertices.clone(),
        boundary_flags: vs.boundary_flags.clone(),
        boundary_order: vs.boundary_order.clone(),
        boundary_arc: vs.boundary_arc.clone(),
        loop_lengths: vs.loop_lengths.clone(),
    };
    let mesh_a = assemble(
        vs,
        &pairs,
        &base.metric,
        h,
        stencil_radius,
        base.shape.name(),
        base.metric.name(),
    )?;
    let mesh_b = assemble(
        vs_clone,
        &pairs,
        other_metric,
        h,
        stencil_radius,
        base.shape.name(),
        other_metric.name(),
    )?;
    Ok((mesh_a, mesh_b))
}

#[derive(Serialize, Deserialize)]
struct MeshDto {
    vertices: Vec<[f64; 2]>,
    boundary_flags: Vec<bool>,
    boundary_order: Vec<Vec<usize>>,
    edges: Vec<(u32, u32, f64)>,
    h: f64,
    domain_kind: String,
    metric_name: String,
}

impl Mesh {
    pub fn to_json(&self) -> String {
        let dto = MeshDto {
            vertices: self.vertices.iter().map(|p| [p.x, p.y]).collect(),
            boundary_flags: self.boundary_flags.clone(),
            boundary_order: self.boundary_order.clone(),
            edges: self.edges.clone(),
            h: self.h,
            domain_kind: self.domain_kind.clone(),
            metric_name: self.metric_name.clone(),
        };
        serde_json::to_string(&dto).expect("mesh serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, MeshError> {
        let dto: MeshDto =
            serde_json::from_str(text).map_err(|e| MeshError::Format(e.to_string()))?;
        let vertices: Vec<Point> =
            dto.vertices.iter().map(|&[x, y]| Point::new(x, y)).collect();
        let n = vertices.len();
        if dto.boundary_flags.len() != n {
            return Err(MeshError::Format("boundary_flags length mismatch".into()));
        }
        for &(i, j, len) in &dto.edges {
            if i as usize >= n || j as usize >= n || !(len > 0.0) {
                return Err(MeshError::Format(format!("bad edge ({i}, {j}, {len})")));
            }
        }
        // infer the stencil radius from the widest grid-to-grid edge
        let mut r = 1usize;
        for &(i, j, _) in &dto.edges {
            if !dto.boundary_flags[i as usize] && !dto.boundary_flags[j as usize] {
                let d = vertices[i as usize] - vertices[j as usize];
                let cheb = (d.x.abs().max(d.y.abs()) / dto.h).round() as usize;
                r = r.max(cheb);
            }
        }
        finish_mesh(
            vertices,
            dto.boundary_flags,
            dto.boundary_order,
            None,
            dto.edges,
            dto.h,
            r,
            dto.domain_kind,
            dto.metric_name,
        )
    }

    pub fn save(&self, path: &Path) -> Result<(), MeshError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, MeshError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DomainShape, MetricSpec};

    fn disk() -> MetricDomain {
        MetricDomain::new(DomainShape::Disk, MetricSpec::Euclidean, "disk")
    }

    #[test]
    fn coarse_disk_mesh_is_small_and_connected() {
        let mesh = build_mesh(&disk(), 0.5, 1).unwrap();
        assert!(
            (10..=30).contains(&mesh.vertex_count()),
            "vertex count {} outside [10, 30]",
            mesh.vertex_count()
        );
    }

    #[test]
    fn euclidean_edge_lengths_match_euclidean_distance() {
        let mesh = build_mesh(&disk(), 0.1, 3).unwrap();
        for &(i, j, len) in mesh.edges() {
            let d = (mesh.vertices[i as usize] - mesh.vertices[j as usize]).norm();
            assert!(
                (len - d).abs() <= 1e-12,
                "edge ({i},{j}) length {len} vs Euclidean {d}"
            );
        }
    }

    #[test]
    fn edge_lengths_are_quantized_and_positive() {
        let mesh = build_mesh(&disk(), 0.2, 2).unwrap();
        for &(_, _, len) in mesh.edges() {
            assert!(len > 0.0);
            let q = len / LENGTH_QUANTUM;
            assert_eq!(q, q.round(), "length {len} is off the quantum lattice");
        }
    }

    #[test]
    fn annulus_edges_avoid_the_hole() {
        let domain = MetricDomain::new(
            DomainShape::Annulus { r_in: 0.3 },
            MetricSpec::Euclidean,
            "annulus",
        );
        let mesh = build_mesh(&domain, 0.05, 3).unwrap();
        let origin = Point::new(0.0, 0.0);
        for &(i, j, _) in mesh.edges() {
            let d2 = crate::geom::segment_point_dist2(
                mesh.vertices[i as usize],
                mesh.vertices[j as usize],
                origin,
            );
            assert!(
                d2.sqrt() >= 0.3 - 1e-7,
                "edge ({i},{j}) dips into the hole: distance {}",
                d2.sqrt()
            );
        }
    }

    #[test]
    fn boundary_spacing_at_most_h() {
        let domain = MetricDomain::new(
            DomainShape::Annulus { r_in: 0.3 },
            MetricSpec::Euclidean,
            "annulus",
        );
        let h = 0.05;
        let mesh = build_mesh(&domain, h, 2).unwrap();
        assert_eq!(mesh.loop_count(), 2);
        for l in 0..mesh.loop_count() {
            let order = &mesh.boundary_order[l];
            for k in 0..order.len() {
                let a = mesh.vertices[order[k]];
                let b = mesh.vertices[order[(k + 1) % order.len()]];
                assert!((a - b).norm() <= h * 1.01, "boundary spacing exceeded h");
            }
        }
    }

    #[test]
    fn mesh_json_round_trip() {
        let mesh = build_mesh(&disk(), 0.2, 2).unwrap();
        let text = mesh.to_json();
        let back = Mesh::from_json(&text).unwrap();
        assert_eq!(back.vertex_count(), mesh.vertex_count());
        assert_eq!(back.edge_count(), mesh.edge_count());
        assert_eq!(back.stencil_radius, mesh.stencil_radius);
        assert_eq!(back.to_json(), text, "serialization is not canonical");
    }

    #[test]
    fn disconnected_domain_reports_components() {
        // two unit squares joined by a corridor far thinner than h
        let outer = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 0.495),
            Point::new(2.0, 0.495),
            Point::new(2.0, 0.0),
            Point::new(3.0, 0.0),
            Point::new(3.0, 1.0),
            Point::new(2.0, 1.0),
            Point::new(2.0, 0.505),
            Point::new(1.0, 0.505),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let domain = MetricDomain::new(
            DomainShape::PolygonWithHoles { outer, holes: vec![] },
            MetricSpec::Euclidean,
            "two-rooms",
        );
        match build_mesh(&domain, 0.3, 1) {
            Err(MeshError::Disconnected { components }) => assert!(components >= 2),
            other => panic!("expected disconnection, got {other:?}"),
        }
    }

    #[test]
    fn full_stencil_marks_deep_interior_only() {
        let mesh = build_mesh(&disk(), 0.1, 3).unwrap();
        let center = mesh.nearest_vertex(Point::new(0.0, 0.0));
        assert!(mesh.has_full_stencil(center));
        let near_boundary = mesh.nearest_interior_vertex(Point::new(0.97, 0.0));
        assert!(!mesh.has_full_stencil(near_boundary));
    }
}
