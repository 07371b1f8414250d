//! Distance difference functions on boundary samples and their sup-norm
//! geometry.
//!
//! A `DdfMatrix` holds `values[i][j] = d(x, y_i) - d(x, y_j)` over the
//! samples of a shared `BoundaryFrame`. Because all distances are exact
//! sums of quantized edge lengths, the zero diagonal, antisymmetry and the
//! additive cocycle identity hold exactly, as does the 2-Lipschitz bound
//! `sup |D_x - D_y| <= 2 d(x, y)`.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dist::{distance_field, DistanceField};
use crate::error::DdrError;
use crate::mesh::Mesh;

/// Ordered boundary samples shared by all DDF matrices of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFrame {
    /// Boundary vertex ids, loop by loop, in traversal order.
    pub samples: Vec<usize>,
    /// Metric arclength position of each sample along its loop.
    pub arc_positions: Vec<f64>,
    /// Loop index per sample.
    pub loop_of: Vec<usize>,
    /// Half-open sample index range per loop.
    pub loop_ranges: Vec<(usize, usize)>,
    /// Total metric length per loop.
    pub loop_lengths: Vec<f64>,
    /// Largest consecutive arc gap.
    pub spacing: f64,
    vertex_to_sample: HashMap<usize, usize>,
}

impl BoundaryFrame {
    /// Subsample the mesh boundary at arc spacing as close to `target` as the
    /// boundary discretization allows. The result always keeps consecutive
    /// spacing at most `2h`.
    pub fn build(mesh: &Mesh, target_spacing: f64) -> Result<Arc<Self>, DdrError> {
        let max_allowed = 2.0 * mesh.h * (1.0 + 1e-9);
        if target_spacing > max_allowed {
            return Err(DdrError::SpacingTooCoarse { got: target_spacing, max: 2.0 * mesh.h });
        }
        if !(target_spacing > 0.0) {
            return Err(DdrError::SpacingTooCoarse { got: target_spacing, max: 2.0 * mesh.h });
        }
        let mut samples = Vec::new();
        let mut arc_positions = Vec::new();
        let mut loop_of = Vec::new();
        let mut loop_ranges = Vec::new();
        let mut loop_lengths = Vec::new();
        let mut spacing = 0.0f64;
        for (l, order) in mesh.boundary_order.iter().enumerate() {
            let total = mesh.loop_length(l);
            let per = total / order.len() as f64;
            let stride = ((target_spacing / per).floor() as usize).max(1);
            let start = samples.len();
            let mut k = 0;
            while k < order.len() {
                let v = order[k];
                samples.push(v);
                arc_positions.push(mesh.arc_position(v).expect("boundary vertex"));
                loop_of.push(l);
                k += stride;
            }
            loop_ranges.push((start, samples.len()));
            loop_lengths.push(total);
            let count = samples.len() - start;
            for i in start..samples.len() {
                let next = if i + 1 < samples.len() && loop_of[i + 1] == l {
                    arc_positions[i + 1]
                } else {
                    total + arc_positions[start]
                };
                spacing = spacing.max(next - arc_positions[i]);
            }
            debug_assert!(count >= 1);
        }
        let vertex_to_sample =
            samples.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        Ok(Arc::new(BoundaryFrame {
            samples,
            arc_positions,
            loop_of,
            loop_ranges,
            loop_lengths,
            spacing,
            vertex_to_sample,
        }))
    }

    /// Rebuild a frame from explicit sample vertex ids (as stored in an
    /// archive file). The ids must be boundary vertices listed loop by loop
    /// in traversal order.
    pub fn from_samples(mesh: &Mesh, ids: &[usize]) -> Result<Arc<Self>, DdrError> {
        let mut samples = Vec::with_capacity(ids.len());
        let mut arc_positions = Vec::with_capacity(ids.len());
        let mut loop_of = Vec::with_capacity(ids.len());
        let mut spacing = 0.0f64;
        for &v in ids {
            let (l, _) = mesh
                .loop_position(v)
                .ok_or_else(|| DdrError::Format(format!("sample {v} is not a boundary vertex")))?;
            if let Some(&prev) = loop_of.last() {
                if l < prev {
                    return Err(DdrError::Format("samples are not grouped by loop".into()));
                }
            }
            samples.push(v);
            arc_positions.push(mesh.arc_position(v).unwrap());
            loop_of.push(l);
        }
        if samples.is_empty() {
            return Err(DdrError::EmptyData);
        }
        // one range per mesh loop (possibly empty), aligned with loop index
        let loop_lengths: Vec<f64> = (0..mesh.loop_count()).map(|l| mesh.loop_length(l)).collect();
        let mut loop_ranges = Vec::with_capacity(mesh.loop_count());
        for l in 0..mesh.loop_count() {
            let start = loop_of.iter().position(|&x| x == l).unwrap_or(samples.len());
            let end = loop_of
                .iter()
                .rposition(|&x| x == l)
                .map(|i| i + 1)
                .unwrap_or(start);
            loop_ranges.push((start, end));
            for i in start..end {
                let next = if i + 1 < end {
                    arc_positions[i + 1]
                } else {
                    loop_lengths[l] + arc_positions[start]
                };
                let gap = next - arc_positions[i];
                if gap < 0.0 {
                    return Err(DdrError::Format("samples are not in traversal order".into()));
                }
                spacing = spacing.max(gap);
            }
        }
        let vertex_to_sample = samples.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        Ok(Arc::new(BoundaryFrame {
            samples,
            arc_positions,
            loop_of,
            loop_ranges,
            loop_lengths,
            spacing,
            vertex_to_sample,
        }))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample index of a boundary vertex, when it is a frame sample.
    pub fn sample_of_vertex(&self, v: usize) -> Option<usize> {
        self.vertex_to_sample.get(&v).copied()
    }

    /// Cyclic arclength distance between two samples (infinite across loops).
    pub fn arc_distance(&self, i: usize, j: usize) -> f64 {
        if self.loop_of[i] != self.loop_of[j] {
            return f64::INFINITY;
        }
        let total = self.loop_lengths[self.loop_of[i]];
        let d = (self.arc_positions[i] - self.arc_positions[j]).abs();
        d.min(total - d)
    }

    /// Frame sample nearest to a boundary vertex by cyclic arc distance.
    pub fn nearest_sample(&self, mesh: &Mesh, v: usize) -> Option<usize> {
        let (l, _) = mesh.loop_position(v)?;
        let arc = mesh.arc_position(v)?;
        let (lo, hi) = self.loop_ranges[l];
        let total = self.loop_lengths[l];
        (lo..hi).min_by(|&a, &b| {
            let da = (self.arc_positions[a] - arc).abs();
            let da = da.min(total - da);
            let db = (self.arc_positions[b] - arc).abs();
            let db = db.min(total - db);
            da.total_cmp(&db).then(a.cmp(&b))
        })
    }

    /// Structural equality used to gate cross-archive operations.
    pub fn matches(&self, other: &BoundaryFrame) -> bool {
        self.samples == other.samples
            && self
                .arc_positions
                .iter()
                .zip(&other.arc_positions)
                .all(|(a, b)| (a - b).abs() <= 1e-9)
    }
}

/// Identity of a DDF source: a mesh vertex, or externally supplied data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceId {
    Vertex(usize),
    External,
}

impl SourceId {
    pub fn to_i64(self) -> i64 {
        match self {
            SourceId::Vertex(v) => v as i64,
            SourceId::External => -1,
        }
    }

    pub fn from_i64(v: i64) -> Self {
        if v < 0 {
            SourceId::External
        } else {
            SourceId::Vertex(v as usize)
        }
    }

    pub fn vertex(self) -> Option<usize> {
        match self {
            SourceId::Vertex(v) => Some(v),
            SourceId::External => None,
        }
    }
}

/// Sampled distance difference function of one source: the full k x k
/// antisymmetric matrix over the frame samples.
#[derive(Debug, Clone)]
pub struct DdfMatrix {
    pub frame: Arc<BoundaryFrame>,
    pub source: SourceId,
    /// Row-major `k * k` values, `values[i * k + j] = d(x, y_i) - d(x, y_j)`.
    pub values: Vec<f64>,
}

impl DdfMatrix {
    pub fn k(&self) -> usize {
        self.frame.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.k() + j]
    }

    /// Build from per-sample boundary distances (exact differences).
    pub fn from_boundary_distances(
        frame: Arc<BoundaryFrame>,
        source: SourceId,
        d: &[f64],
    ) -> Self {
        let k = frame.len();
        assert_eq!(d.len(), k);
        let mut values = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                values[i * k + j] = d[i] - d[j];
            }
        }
        DdfMatrix { frame, source, values }
    }

    /// Boundary distances of a field restricted to the frame samples.
    pub fn restrict_field(frame: &BoundaryFrame, field: &DistanceField) -> Vec<f64> {
        frame.samples.iter().map(|&v| field.dist[v]).collect()
    }

    /// The generating vector anchored at sample 0: `a[i] = values[i][0]`.
    pub fn anchored(&self) -> Vec<f64> {
        let k = self.k();
        (0..k).map(|i| self.values[i * k]).collect()
    }

    /// Verify zero diagonal, antisymmetry and the additive cocycle identity
    /// by reconstructing the generating vector. `tol = 0` demands exactness,
    /// which every matrix produced from graph distances satisfies.
    pub fn verify_invariants(&self, tol: f64) -> Result<(), DdrError> {
        let k = self.k();
        let a = self.anchored();
        for i in 0..k {
            for j in 0..k {
                let expect = a[i] - a[j];
                let got = self.values[i * k + j];
                let residual = (got - expect).abs();
                if residual > tol {
                    return Err(DdrError::CocycleViolation { i, j, k: 0, residual });
                }
            }
        }
        Ok(())
    }
}

/// Distance difference function of a mesh vertex over the frame samples.
pub fn ddf(mesh: &Mesh, frame: &Arc<BoundaryFrame>, x: usize) -> Result<DdfMatrix, DdrError> {
    let field = distance_field(mesh, x)?;
    let d = DdfMatrix::restrict_field(frame, &field);
    Ok(DdfMatrix::from_boundary_distances(frame.clone(), SourceId::Vertex(x), &d))
}

/// Sup-norm distance `max_{i,j} |a[i][j] - b[i][j]|` over the shared frame.
pub fn sup_dist(a: &DdfMatrix, b: &DdfMatrix) -> Result<f64, DdrError> {
    if !a.frame.matches(&b.frame) {
        return Err(DdrError::FrameMismatch);
    }
    let mut best = 0.0f64;
    for (x, y) in a.values.iter().zip(&b.values) {
        best = best.max((x - y).abs());
    }
    Ok(best)
}

/// Sup-norm distance from anchored generating vectors: the range of their
/// difference. Exactly equals `sup_dist` on the materialized matrices.
pub fn sup_dist_anchored(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if a.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Nearest matrix in the data set under the sup-norm; ties take the smallest
/// index. Returns the achieved distance.
pub fn match_query(data: &[DdfMatrix], query: &DdfMatrix) -> Result<(usize, f64), DdrError> {
    if data.is_empty() {
        return Err(DdrError::EmptyData);
    }
    let mut best: Option<(f64, usize)> = None;
    for (idx, m) in data.iter().enumerate() {
        let d = sup_dist(m, query)?;
        if best.map_or(true, |(bd, bi)| (d, idx) < (bd, bi)) {
            best = Some((d, idx));
        }
    }
    let (d, idx) = best.unwrap();
    Ok((idx, d))
}

/// A batch of DDF vectors over one frame: the in-memory form of an archive.
/// Vectors are anchored at sample 0, exactly as a file round trip produces.
#[derive(Debug, Clone)]
pub struct DdfArchive {
    pub frame: Arc<BoundaryFrame>,
    pub sources: Vec<SourceId>,
    pub vectors: Vec<Vec<f64>>,
}

impl DdfArchive {
    /// Assemble DDFs for many sources, parallelized over sources.
    pub fn assemble(
        mesh: &Mesh,
        frame: &Arc<BoundaryFrame>,
        sources: &[usize],
    ) -> Result<Self, DdrError> {
        let vectors: Result<Vec<Vec<f64>>, DdrError> = sources
            .par_iter()
            .map(|&s| {
                let field = distance_field(mesh, s)?;
                let d = DdfMatrix::restrict_field(frame, &field);
                let a0 = d[0];
                Ok(d.iter().map(|x| x - a0).collect())
            })
            .collect();
        Ok(DdfArchive {
            frame: frame.clone(),
            sources: sources.iter().map(|&s| SourceId::Vertex(s)).collect(),
            vectors: vectors?,
        })
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    /// Materialize the full matrix of one entry.
    pub fn matrix(&self, idx: usize) -> DdfMatrix {
        DdfMatrix::from_boundary_distances(
            self.frame.clone(),
            self.sources[idx],
            &self.vectors[idx],
        )
    }

    /// Index of the entry for a given source vertex.
    pub fn index_of_vertex(&self, v: usize) -> Option<usize> {
        self.sources.iter().position(|&s| s == SourceId::Vertex(v))
    }

    /// Binary DDF1 archive: magic, k, m, k sample ids (u64 LE), m source ids
    /// (i64 LE, -1 external), then m full k x k matrices (f64 LE, row-major).
    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        let k = self.frame.len();
        w.write_all(b"DDF1")?;
        w.write_all(&(k as u64).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for &s in &self.frame.samples {
            w.write_all(&(s as u64).to_le_bytes())?;
        }
        for &s in &self.sources {
            w.write_all(&s.to_i64().to_le_bytes())?;
        }
        let mut row = vec![0u8; k * 8];
        for vec in &self.vectors {
            for i in 0..k {
                for j in 0..k {
                    let v = vec[i] - vec[j];
                    row[j * 8..j * 8 + 8].copy_from_slice(&v.to_le_bytes());
                }
                w.write_all(&row)?;
            }
        }
        Ok(())
    }

    /// Read a DDF1 archive against an existing frame (sample ids must agree).
    /// Each matrix is reduced to its anchored vector and verified against the
    /// cocycle identity within `tol`.
    pub fn read_from(
        r: &mut impl Read,
        frame: &Arc<BoundaryFrame>,
        tol: f64,
    ) -> Result<Self, DdrError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"DDF1" {
            return Err(DdrError::Format(format!(
                "bad magic {:?}, expected DDF1",
                String::from_utf8_lossy(&magic)
            )));
        }
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf)?;
        let k = u64::from_le_bytes(buf) as usize;
        r.read_exact(&mut buf)?;
        let m = u64::from_le_bytes(buf) as usize;
        if k != frame.len() {
            return Err(DdrError::FrameMismatch);
        }
        for &expect in &frame.samples {
            r.read_exact(&mut buf)?;
            if u64::from_le_bytes(buf) as usize != expect {
                return Err(DdrError::FrameMismatch);
            }
        }
        let mut sources = Vec::with_capacity(m);
        for _ in 0..m {
            r.read_exact(&mut buf)?;
            sources.push(SourceId::from_i64(i64::from_le_bytes(buf)));
        }
        let mut vectors = Vec::with_capacity(m);
        let mut mat = vec![0.0f64; k * k];
        let mut bytes = vec![0u8; k * k * 8];
        for _ in 0..m {
            r.read_exact(&mut bytes)?;
            for (slot, chunk) in mat.iter_mut().zip(bytes.chunks_exact(8)) {
                *slot = f64::from_le_bytes(chunk.try_into().unwrap());
            }
            let a: Vec<f64> = (0..k).map(|i| mat[i * k]).collect();
            for i in 0..k {
                for j in 0..k {
                    let residual = (mat[i * k + j] - (a[i] - a[j])).abs();
                    if residual > tol {
                        return Err(DdrError::CocycleViolation { i, j, k: 0, residual });
                    }
                }
            }
            vectors.push(a);
        }
        Ok(DdfArchive { frame: frame.clone(), sources, vectors })
    }

    pub fn save(&self, path: &Path) -> Result<(), DdrError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        Ok(())
    }

    pub fn load(path: &Path, frame: &Arc<BoundaryFrame>, tol: f64) -> Result<Self, DdrError> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut f, frame, tol)
    }

    /// Read just the frame sample ids of an archive file.
    pub fn read_sample_ids(path: &Path) -> Result<Vec<usize>, DdrError> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 4];
        f.read_exact(&mut magic)?;
        if &magic != b"DDF1" {
            return Err(DdrError::Format("bad magic".into()));
        }
        let mut buf = [0u8; 8];
        f.read_exact(&mut buf)?;
        let k = u64::from_le_bytes(buf) as usize;
        f.read_exact(&mut buf)?;
        let mut ids = Vec::with_capacity(k);
        for _ in 0..k {
            f.read_exact(&mut buf)?;
            ids.push(u64::from_le_bytes(buf) as usize);
        }
        Ok(ids)
    }
}

/// Empirical bi-Lipschitz profile: for random vertex pairs with
/// `0 < d(x, y) <= rho`, the ratio `sup_dist / d`. The upper bound 2 holds
/// exactly; the observed lower bound estimates the local inverse modulus.
pub fn bilipschitz_profile(
    mesh: &Mesh,
    frame: &Arc<BoundaryFrame>,
    pairs: usize,
    rho: f64,
    rng: &mut impl rand::Rng,
) -> Result<Vec<(f64, f64)>, DdrError> {
    let n = mesh.vertex_count();
    let mut out = Vec::with_capacity(pairs);
    let mut guard = 0usize;
    while out.len() < pairs && guard < pairs * 50 {
        guard += 1;
        let x = rng.gen_range(0..n);
        let fx = distance_field(mesh, x)?;
        let candidates: Vec<usize> =
            (0..n).filter(|&v| fx.dist[v] > 0.0 && fx.dist[v] <= rho).collect();
        if candidates.is_empty() {
            continue;
        }
        let y = candidates[rng.gen_range(0..candidates.len())];
        let fy = distance_field(mesh, y)?;
        let ax = DdfMatrix::restrict_field(frame, &fx);
        let ay = DdfMatrix::restrict_field(frame, &fy);
        let sup = sup_dist_anchored(&ax, &ay);
        let d = fx.dist[y];
        // the 2-Lipschitz bound must hold exactly
        if sup > 2.0 * d {
            return Err(DdrError::Format(format!(
                "2-Lipschitz bound violated: sup {sup} > 2 d {d}"
            )));
        }
        out.push((d, sup / d));
    }
    Ok(out)
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
    fn frame_spacing_within_two_h() {
        let mesh = disk_mesh(0.05);
        let frame = BoundaryFrame::build(&mesh, 0.1).unwrap();
        assert!(frame.spacing <= 2.0 * mesh.h * (1.0 + 1e-9));
        assert!(BoundaryFrame::build(&mesh, 0.25).is_err());
    }

    #[test]
    fn ddf_invariants_exact() {
        let mesh = disk_mesh(0.1);
        let frame = BoundaryFrame::build(&mesh, 0.2).unwrap();
        let x = mesh.nearest_vertex(Point::new(0.3, -0.1));
        let m = ddf(&mesh, &frame, x).unwrap();
        m.verify_invariants(0.0).unwrap();
        let k = m.k();
        for i in 0..k {
            assert_eq!(m.at(i, i), 0.0);
            for j in 0..k {
                assert_eq!(m.at(i, j), -m.at(j, i));
            }
        }
    }

    #[test]
    fn center_ddf_entries_stay_within_metrication() {
        let mesh = disk_mesh(0.05);
        let frame = BoundaryFrame::build(&mesh, 0.1).unwrap();
        let c = mesh.nearest_vertex(Point::new(0.0, 0.0));
        let m = ddf(&mesh, &frame, c).unwrap();
        // all boundary points are at continuum distance 1; discrete entries
        // deviate only by the direction-dependent metrication error
        let worst = m.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!(worst <= 0.03, "center DDF entries reach {worst}");
    }

    #[test]
    fn collinear_ddf_value() {
        let mesh = disk_mesh(0.02);
        let frame = BoundaryFrame::build(&mesh, 0.04).unwrap();
        let x = mesh.nearest_vertex(Point::new(0.5, 0.0));
        let m = ddf(&mesh, &frame, x).unwrap();
        let yi = frame
            .nearest_sample(&mesh, mesh.nearest_vertex(Point::new(1.0, 0.0)))
            .unwrap();
        let zi = frame
            .nearest_sample(&mesh, mesh.nearest_vertex(Point::new(-1.0, 0.0)))
            .unwrap();
        let v = m.at(yi, zi);
        assert!((v - (-1.0)).abs() <= 0.01 + 4.0 * mesh.h, "D_x(y,z) = {v}, want -1");
    }

    #[test]
    fn boundary_source_row_is_nonpositive() {
        let mesh = disk_mesh(0.1);
        let frame = BoundaryFrame::build(&mesh, 0.2).unwrap();
        let x = frame.samples[3];
        let m = ddf(&mesh, &frame, x).unwrap();
        let i = frame.sample_of_vertex(x).unwrap();
        for j in 0..m.k() {
            assert!(m.at(i, j) <= 0.0, "row of a boundary source must be <= 0");
        }
    }

    #[test]
    fn sup_dist_routes_agree_exactly() {
        let mesh = disk_mesh(0.1);
        let frame = BoundaryFrame::build(&mesh, 0.2).unwrap();
        let a = ddf(&mesh, &frame, mesh.nearest_vertex(Point::new(0.2, 0.1))).unwrap();
        let b = ddf(&mesh, &frame, mesh.nearest_vertex(Point::new(-0.4, 0.3))).unwrap();
        // brute-force max over all sample pairs vs the anchored range route
        let brute = sup_dist(&a, &b).unwrap();
        let fast = sup_dist_anchored(&a.anchored(), &b.anchored());
        assert_eq!(brute, fast);
        assert_eq!(sup_dist(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn two_lipschitz_exact_on_random_pairs() {
        let mesh = disk_mesh(0.1);
        let frame = BoundaryFrame::build(&mesh, 0.2).unwrap();
        use rand::Rng;
        let mut rng = crate::seeded_rng(9);
        for _ in 0..50 {
            let x = rng.gen_range(0..mesh.vertex_count());
            let y = rng.gen_range(0..mesh.vertex_count());
            let fx = distance_field(&mesh, x).unwrap();
            let fy = distance_field(&mesh, y).unwrap();
            let sup = sup_dist_anchored(
                &DdfMatrix::restrict_field(&frame, &fx),
                &DdfMatrix::restrict_field(&frame, &fy),
            );
            assert!(sup <= 2.0 * fx.dist[y], "2-Lipschitz bound violated");
        }
    }

    #[test]
    fn match_returns_self_with_zero_distance() {
        let mesh = disk_mesh(0.1);
        let frame = BoundaryFrame::build(&mesh, 0.2).unwrap();
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(0.4, 0.2),
            Point::new(-0.3, -0.5),
        ];
        let data: Vec<DdfMatrix> = pts
            .iter()
            .map(|&p| ddf(&mesh, &frame, mesh.nearest_vertex(p)).unwrap())
            .collect();
        let (idx, d) = match_query(&data, &data[1]).unwrap();
        assert_eq!(idx, 1);
        assert_eq!(d, 0.0);
        assert!(match_query(&[], &data[0]).is_err());
    }

    #[test]
    fn archive_round_trip_exact() {
        let mesh = disk_mesh(0.1);
        let frame = BoundaryFrame::build(&mesh, 0.2).unwrap();
        let sources: Vec<usize> = [
            Point::new(0.0, 0.0),
            Point::new(0.5, 0.0),
            Point::new(-0.2, 0.4),
        ]
        .iter()
        .map(|&p| mesh.nearest_vertex(p))
        .collect();
        let archive = DdfArchive::assemble(&mesh, &frame, &sources).unwrap();
        let mut buf = Vec::new();
        archive.write_to(&mut buf).unwrap();
        assert_eq!(&buf[0..4], b"DDF1");
        let back = DdfArchive::read_from(&mut buf.as_slice(), &frame, 0.0).unwrap();
        assert_eq!(back.sources, archive.sources);
        assert_eq!(back.vectors, archive.vectors);
    }

    #[test]
    fn corrupt_archive_is_rejected() {
        let mesh = disk_mesh(0.2);
        let frame = BoundaryFrame::build(&mesh, 0.4).unwrap();
        let bad = b"NOPE".to_vec();
        assert!(DdfArchive::read_from(&mut bad.as_slice(), &frame, 0.0).is_err());
    }

    #[test]
    fn bilipschitz_ratios_bounded_by_two() {
        let mesh = disk_mesh(0.1);
        let frame = BoundaryFrame::build(&mesh, 0.2).unwrap();
        let mut rng = crate::seeded_rng(21);
        let profile = bilipschitz_profile(&mesh, &frame, 30, 0.2, &mut rng).unwrap();
        assert!(!profile.is_empty());
        for &(d, ratio) in &profile {
            assert!(d > 0.0 && d <= 0.2);
            assert!(ratio <= 2.0);
        }
        // empirical lower-Lipschitz floor on the disk at probe scale 0.2
        let min_ratio = profile.iter().fold(f64::INFINITY, |a, &(_, r)| a.min(r));
        assert!(min_ratio >= 0.5, "min ratio {min_ratio} below regression floor");
    }
}
