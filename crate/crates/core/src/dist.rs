//! Exact single-source shortest-path distance fields on the stencil graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::EngineError;
use crate::mesh::Mesh;

/// Arclength distances from one source vertex, with predecessor links.
///
/// Edge lengths live on the `LENGTH_QUANTUM` lattice, so every stored
/// distance is an exact sum of edge lengths and the graph metric axioms
/// (symmetry, triangle inequality) hold exactly in f64.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub source: usize,
    pub dist: Vec<f64>,
    /// Predecessor toward the source; `None` at the source itself. Among
    /// equally short predecessors the smallest vertex index is stored.
    pub parent: Vec<Option<u32>>,
}

#[derive(Copy, Clone)]
struct HeapEntry {
    dist: f64,
    vertex: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // min-heap on (dist, vertex): ties pop the smallest vertex index first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Exact Dijkstra over the stencil graph. Deterministic: ties in the queue
/// pop the smallest vertex index, and parents settle on the smallest-index
/// optimal predecessor.
pub fn distance_field(mesh: &Mesh, source: usize) -> Result<DistanceField, EngineError> {
    let n = mesh.vertex_count();
    if source >= n {
        return Err(EngineError::BadVertex(source));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<u32>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::with_capacity(n / 4);
    dist[source] = 0.0;
    heap.push(HeapEntry { dist: 0.0, vertex: source as u32 });
    while let Some(HeapEntry { dist: d, vertex }) = heap.pop() {
        let v = vertex as usize;
        if settled[v] {
            continue;
        }
        settled[v] = true;
        for (w, len) in mesh.neighbors(v) {
            let cand = d + len;
            match cand.total_cmp(&dist[w]) {
                Ordering::Less => {
                    dist[w] = cand;
                    parent[w] = Some(vertex);
                    heap.push(HeapEntry { dist: cand, vertex: w as u32 });
                }
                Ordering::Equal => {
                    // keep the smallest-index optimal predecessor
                    if parent[w].map_or(true, |p| vertex < p) {
                        parent[w] = Some(vertex);
                    }
                }
                Ordering::Greater => {}
            }
        }
    }
    let unreachable = dist.iter().filter(|d| !d.is_finite()).count();
    if unreachable > 0 {
        return Err(EngineError::Unreachable { from_vertex: source, count: unreachable });
    }
    Ok(DistanceField { source, dist, parent })
}

impl DistanceField {
    /// Predecessor backtrace from `target` to the source, returned in
    /// source-to-target order. The metric length of the polyline equals
    /// `dist[target]` exactly.
    pub fn shortest_path(&self, target: usize) -> Result<Vec<usize>, EngineError> {
        if target >= self.dist.len() {
            return Err(EngineError::BadVertex(target));
        }
        if !self.dist[target].is_finite() {
            return Err(EngineError::UnreachableTarget(target));
        }
        let mut path = vec![target];
        let mut v = target;
        while let Some(p) = self.parent[v] {
            v = p as usize;
            path.push(v);
            if path.len() > self.dist.len() {
                return Err(EngineError::Format("parent cycle".into()));
            }
        }
        path.reverse();
        debug_assert_eq!(path[0], self.source);
        Ok(path)
    }

    /// True when `v` lies on some shortest path from the field source to
    /// `target_field`'s source: the exact additive relation
    /// `d(s, v) + d(v, t) == d(s, t)`.
    pub fn on_geodesic(&self, target_field: &DistanceField, v: usize) -> bool {
        self.dist[v] + target_field.dist[v] == self.dist[target_field.source]
    }

    /// Binary dump: magic `DDF0`, vertex count (u64 LE), distances
    /// (f64 LE), parents (i64 LE, -1 for none).
    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(b"DDF0")?;
        w.write_all(&(self.dist.len() as u64).to_le_bytes())?;
        for d in &self.dist {
            w.write_all(&d.to_le_bytes())?;
        }
        for p in &self.parent {
            let v: i64 = p.map_or(-1, |x| x as i64);
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read, source: usize) -> Result<Self, EngineError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"DDF0" {
            return Err(EngineError::Format(format!(
                "bad magic {:?}, expected DDF0",
                String::from_utf8_lossy(&magic)
            )));
        }
        let mut buf8 = [0u8; 8];
        r.read_exact(&mut buf8)?;
        let n = u64::from_le_bytes(buf8) as usize;
        let mut dist = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut buf8)?;
            dist.push(f64::from_le_bytes(buf8));
        }
        let mut parent = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut buf8)?;
            let v = i64::from_le_bytes(buf8);
            parent.push(if v < 0 { None } else { Some(v as u32) });
        }
        Ok(DistanceField { source, dist, parent })
    }

    pub fn save(&self, path: &Path) -> Result<(), EngineError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        Ok(())
    }
}

/// Metric length of a vertex polyline, summed over mesh edge lengths.
pub fn path_length(mesh: &Mesh, path: &[usize]) -> f64 {
    let mut total = 0.0;
    for win in path.windows(2) {
        let (a, b) = (win[0], win[1]);
        let len = mesh
            .neighbors(a)
            .find(|&(w, _)| w == b)
            .map(|(_, l)| l)
            .expect("path steps along mesh edges");
        total += len;
    }
    total
}

/// Arc position of every vertex along a polyline (cumulative edge lengths).
pub fn path_arcs(mesh: &Mesh, path: &[usize]) -> Vec<f64> {
    let mut arcs = Vec::with_capacity(path.len());
    let mut s = 0.0;
    arcs.push(0.0);
    for win in path.windows(2) {
        let len = mesh
            .neighbors(win[0])
            .find(|&(w, _)| w == win[1])
            .map(|(_, l)| l)
            .expect("path steps along mesh edges");
        s += len;
        arcs.push(s);
    }
    arcs
}

/// Distance fields for many sources over a shared mesh, computed in
/// parallel; results are identical to the serial loop.
pub fn distance_fields(
    mesh: &Mesh,
    sources: &[usize],
) -> Result<Vec<DistanceField>, EngineError> {
    use rayon::prelude::*;
    sources
        .par_iter()
        .map(|&s| distance_field(mesh, s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DomainShape, MetricSpec};
    use crate::geom::Point;
    use crate::mesh::build_mesh;
    use crate::MetricDomain;

    fn disk_mesh(h: f64) -> Mesh {
        let d = MetricDomain::new(DomainShape::Disk, MetricSpec::Euclidean, "disk");
        build_mesh(&d, h, 3).unwrap()
    }

    #[test]
    fn source_distance_is_zero_and_others_positive() {
        let mesh = disk_mesh(0.1);
        let src = mesh.nearest_vertex(Point::new(0.0, 0.0));
        let field = distance_field(&mesh, src).unwrap();
        assert_eq!(field.dist[src], 0.0);
        for (v, &d) in field.dist.iter().enumerate() {
            if v != src {
                assert!(d > 0.0);
            }
        }
    }

    #[test]
    fn triangle_inequality_exact_over_edges() {
        let mesh = disk_mesh(0.1);
        let src = mesh.nearest_vertex(Point::new(0.3, -0.2));
        let field = distance_field(&mesh, src).unwrap();
        for &(i, j, len) in mesh.edges() {
            let (i, j) = (i as usize, j as usize);
            assert!(field.dist[j] <= field.dist[i] + len);
            assert!(field.dist[i] <= field.dist[j] + len);
        }
    }

    #[test]
    fn center_to_boundary_within_stencil_bound() {
        // the metrication bound for Chebyshev radius 3 is sec(gap/2) - 1
        // where gap is the widest angular gap between stencil directions
        let r = 3i32;
        let mut angles: Vec<f64> = Vec::new();
        for a in -r..=r {
            for b in -r..=r {
                if (a, b) != (0, 0) {
                    angles.push((b as f64).atan2(a as f64));
                }
            }
        }
        angles.sort_by(|x, y| x.total_cmp(y));
        let mut gap = 0.0f64;
        for w in angles.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        let bound = 1.0 / (gap / 2.0).cos() - 1.0;

        let h = 0.02;
        let mesh = disk_mesh(h);
        let src = mesh.nearest_vertex(Point::new(0.0, 0.0));
        let field = distance_field(&mesh, src).unwrap();
        let mut worst: f64 = 0.0;
        for b in mesh.boundary_vertices() {
            worst = worst.max((field.dist[b] - 1.0).abs());
        }
        assert!(
            worst <= bound + 2.0 * h,
            "worst boundary error {worst} exceeds stencil bound {bound} + 2h"
        );
    }

    #[test]
    fn path_length_matches_distance_exactly() {
        let mesh = disk_mesh(0.05);
        let src = mesh.nearest_vertex(Point::new(-0.5, 0.0));
        let tgt = mesh.nearest_vertex(Point::new(0.5, 0.3));
        let field = distance_field(&mesh, src).unwrap();
        let path = field.shortest_path(tgt).unwrap();
        assert_eq!(path[0], src);
        assert_eq!(*path.last().unwrap(), tgt);
        assert_eq!(path_length(&mesh, &path), field.dist[tgt]);
    }

    #[test]
    fn straight_geodesic_stays_in_one_stencil_cell() {
        let mesh = disk_mesh(0.02);
        let src = mesh.nearest_vertex(Point::new(-0.5, 0.0));
        let tgt = mesh.nearest_vertex(Point::new(0.5, 0.0));
        let field = distance_field(&mesh, src).unwrap();
        let path = field.shortest_path(tgt).unwrap();
        for &v in &path {
            assert!(
                mesh.vertices[v].y.abs() <= 3.0 * 0.02 + 1e-12,
                "path strays from the straight segment"
            );
        }
    }

    #[test]
    fn single_vertex_path_at_source() {
        let mesh = disk_mesh(0.2);
        let src = mesh.nearest_vertex(Point::new(0.1, 0.1));
        let field = distance_field(&mesh, src).unwrap();
        let path = field.shortest_path(src).unwrap();
        assert_eq!(path, vec![src]);
        assert_eq!(path_length(&mesh, &path), 0.0);
    }

    #[test]
    fn symmetry_exact_for_random_pairs() {
        let mesh = disk_mesh(0.1);
        use rand::Rng;
        let mut rng = crate::seeded_rng(42);
        for _ in 0..20 {
            let a = rng.gen_range(0..mesh.vertex_count());
            let b = rng.gen_range(0..mesh.vertex_count());
            let fa = distance_field(&mesh, a).unwrap();
            let fb = distance_field(&mesh, b).unwrap();
            assert_eq!(fa.dist[b], fb.dist[a], "graph metric must be symmetric");
        }
    }

    #[test]
    fn parallel_fields_match_serial() {
        let mesh = disk_mesh(0.1);
        let sources: Vec<usize> = (0..16).map(|k| k * 7 % mesh.vertex_count()).collect();
        let par = distance_fields(&mesh, &sources).unwrap();
        for (k, &s) in sources.iter().enumerate() {
            let ser = distance_field(&mesh, s).unwrap();
            assert_eq!(ser.dist, par[k].dist);
            assert_eq!(ser.parent, par[k].parent);
        }
    }

    #[test]
    fn field_dump_round_trip() {
        let mesh = disk_mesh(0.2);
        let src = mesh.nearest_vertex(Point::new(0.0, 0.0));
        let field = distance_field(&mesh, src).unwrap();
        let mut buf = Vec::new();
        field.write_to(&mut buf).unwrap();
        assert_eq!(&buf[0..4], b"DDF0");
        let back = DistanceField::read_from(&mut buf.as_slice(), src).unwrap();
        assert_eq!(back.dist, field.dist);
        assert_eq!(back.parent, field.parent);
    }
}
