//! First-order structure of distance fields: g-unit descent directions and
//! discrete cut detection, both from a local quadratic least-squares fit.
//!
//! The gradient of `d(., source)` at a smooth point is minus the g-unit
//! initial direction of the shortest path. A quadratic model over the
//! stencil neighborhood restores first-order accuracy that parent-edge
//! directions would quantize away, and absorbs the smooth curvature of the
//! distance function, so the fit residual isolates conical kinks where two
//! descent directions compete.

use nalgebra::{Matrix6, Vector6};

use crate::dist::DistanceField;
use crate::domain::MetricDomain;
use crate::error::EngineError;
use crate::geom::{Mat2, Point};
use crate::mesh::Mesh;

/// A g-unit tangent vector at a mesh vertex.
#[derive(Debug, Clone, Copy)]
pub struct Direction {
    pub base: usize,
    pub vector: Point,
}

#[derive(Debug, Clone, Copy)]
pub struct LocalFit {
    /// Differential of the distance function (a covector in the chart):
    /// the linear coefficients of the quadratic model.
    pub gradient: Point,
    /// Root-mean-square residual of the quadratic model over the stencil.
    pub rms_residual: f64,
}

fn quadratic_coeffs(
    mesh: &Mesh,
    dist: &[f64],
    at: usize,
) -> Result<(Vector6<f64>, f64), EngineError> {
    let p0 = mesh.vertices[at];
    let d0 = dist[at];
    let scale = mesh.stencil_radius as f64 * mesh.h;
    let mut m = Matrix6::<f64>::zeros();
    let mut rhs = Vector6::<f64>::zeros();
    let mut count = 0usize;
    for (w, _) in mesh.neighbors(at) {
        let dp = (mesh.vertices[w] - p0) / scale;
        let dd = dist[w] - d0;
        let row = Vector6::new(1.0, dp.x, dp.y, dp.x * dp.x, dp.x * dp.y, dp.y * dp.y);
        m += row * row.transpose();
        rhs += row * dd;
        count += 1;
    }
    if count < 8 {
        return Err(EngineError::RankDeficient(at));
    }
    let lu = m.lu();
    let coeffs = lu.solve(&rhs).ok_or(EngineError::RankDeficient(at))?;
    let mut ss = 0.0;
    for (w, _) in mesh.neighbors(at) {
        let dp = (mesh.vertices[w] - p0) / scale;
        let dd = dist[w] - d0;
        let pred = coeffs[0]
            + coeffs[1] * dp.x
            + coeffs[2] * dp.y
            + coeffs[3] * dp.x * dp.x
            + coeffs[4] * dp.x * dp.y
            + coeffs[5] * dp.y * dp.y;
        ss += (dd - pred) * (dd - pred);
    }
    Ok((coeffs, (ss / count as f64).sqrt()))
}

/// Quadratic least-squares model of `dist` over the stencil of `at`.
pub fn local_fit(mesh: &Mesh, field: &DistanceField, at: usize) -> Result<LocalFit, EngineError> {
    if mesh.is_boundary(at) {
        return Err(EngineError::NotInterior(at));
    }
    if !mesh.has_full_stencil(at) {
        return Err(EngineError::PartialStencil(at));
    }
    let scale = mesh.stencil_radius as f64 * mesh.h;
    let (coeffs, rms) = quadratic_coeffs(mesh, &field.dist, at)?;
    Ok(LocalFit {
        gradient: Point::new(coeffs[1] / scale, coeffs[2] / scale),
        rms_residual: rms,
    })
}

/// Evaluate a distance field at an arbitrary point by the local quadratic
/// model around the nearest full-stencil vertex. `None` when the point has
/// no certified neighborhood (boundary or clipped stencil).
pub fn interpolate_field(mesh: &Mesh, dist: &[f64], x: Point) -> Option<f64> {
    let v = mesh.nearest_vertex(x);
    if mesh.is_boundary(v) || !mesh.has_full_stencil(v) {
        return None;
    }
    let scale = mesh.stencil_radius as f64 * mesh.h;
    let (c, _) = quadratic_coeffs(mesh, dist, v).ok()?;
    let dp = (x - mesh.vertices[v]) / scale;
    Some(
        dist[v]
            + c[0]
            + c[1] * dp.x
            + c[2] * dp.y
            + c[3] * dp.x * dp.x
            + c[4] * dp.x * dp.y
            + c[5] * dp.y * dp.y,
    )
}

/// g-unit direction from `at` toward the field source, computed as minus the
/// g-gradient of the distance field, renormalized in g.
pub fn direction_at(
    mesh: &Mesh,
    field: &DistanceField,
    at: usize,
    domain: &MetricDomain,
) -> Result<Direction, EngineError> {
    if at == field.source {
        return Err(EngineError::SourceInStencil(at));
    }
    let fit = local_fit(mesh, field, at)?;
    let g = domain.metric_at(mesh.vertices[at]);
    let g_inv = invert2(&g).ok_or(EngineError::RankDeficient(at))?;
    let grad_vec = g_inv * fit.gradient;
    // eikonal property: the g-norm of the gradient of a distance function is
    // 1 where the function is smooth
    let norm = (g * grad_vec).dot(&grad_vec).sqrt();
    if norm < 0.5 {
        return Err(EngineError::CutProximity { vertex: at, norm });
    }
    Ok(Direction { base: at, vector: -grad_vec / norm })
}

/// True when the stencil-local quadratic fit residual exceeds
/// `tau_cut * h`: two competing descent directions make the distance
/// function non-smooth at `at`.
pub fn detect_cut(
    mesh: &Mesh,
    field: &DistanceField,
    at: usize,
    tau_cut: f64,
) -> Result<bool, EngineError> {
    // the distance function is conical at the source itself; the test is
    // meaningless when the source sits inside the stencil
    let reach = mesh.stencil_radius as f64 * mesh.h * (1.0 + 1e-9);
    let d = mesh.vertices[field.source] - mesh.vertices[at];
    if d.x.abs() <= reach && d.y.abs() <= reach {
        return Err(EngineError::SourceInStencil(at));
    }
    let fit = local_fit(mesh, field, at)?;
    Ok(fit.rms_residual > tau_cut * mesh.h)
}

fn invert2(m: &Mat2) -> Option<Mat2> {
    let det = m.determinant();
    if det.abs() < 1e-300 {
        return None;
    }
    Some(Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det)
}
