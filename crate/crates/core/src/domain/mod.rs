//! Ground-truth geometries: domain shapes with smooth SPD metric fields,
//! plus gauge maps for manufacturing isometric pairs.

mod gauge;
mod metric;
mod shape;

pub use gauge::GaugeSpec;
pub use metric::MetricSpec;
pub use shape::{BoundaryLoop, CurvePiece, DomainShape, CONTAIN_TOL};

use crate::error::DomainError;
use crate::geom::{Mat2, Point};
use rand::Rng;

/// A 2-D parametric domain with boundary plus a smooth SPD metric field.
#[derive(Debug, Clone)]
pub struct MetricDomain {
    pub shape: DomainShape,
    pub metric: MetricSpec,
    pub name: String,
}

impl MetricDomain {
    pub fn new(shape: DomainShape, metric: MetricSpec, name: impl Into<String>) -> Self {
        MetricDomain { shape, metric, name: name.into() }
    }

    pub fn metric_at(&self, p: Point) -> Mat2 {
        self.metric.eval(p)
    }

    /// g-inner product of two tangent vectors at `p`.
    pub fn inner(&self, p: Point, u: Point, v: Point) -> f64 {
        (self.metric_at(p) * v).dot(&u)
    }

    pub fn g_norm(&self, p: Point, v: Point) -> f64 {
        self.inner(p, v, v).sqrt()
    }

    /// Minimum eigenvalue of the metric tensor at `p` (must stay positive).
    pub fn min_eigenvalue(&self, p: Point) -> f64 {
        let g = self.metric_at(p);
        let tr = g.trace();
        let det = g.determinant();
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        tr / 2.0 - disc
    }

    /// Check the SPD invariant at `n` random domain points.
    pub fn validate_spd(&self, n: usize, rng: &mut impl Rng) -> Result<(), DomainError> {
        for _ in 0..n {
            let p = self.sample_interior(rng);
            let eig = self.min_eigenvalue(p);
            if eig <= 0.0 {
                return Err(DomainError::NotSpd { x: p.x, y: p.y, eig });
            }
        }
        Ok(())
    }

    /// Rejection-sample a point of the closed domain.
    pub fn sample_interior(&self, rng: &mut impl Rng) -> Point {
        let (min, max) = self.shape.bounding_box();
        loop {
            let p = Point::new(rng.gen_range(min.x..max.x), rng.gen_range(min.y..max.y));
            if self.shape.contains(p) {
                return p;
            }
        }
    }
}

/// Validate the gauge invariants against a domain: the boundary is fixed
/// pointwise and forward/inverse round-trips stay in the domain.
pub fn validate_gauge(
    domain: &MetricDomain,
    gauge: &GaugeSpec,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<(), DomainError> {
    if gauge.fixes_boundary() {
        for loop_ in domain.shape.boundary_loops() {
            for k in 0..samples {
                let b = loop_.eval(k as f64 / samples as f64);
                let moved = (gauge.forward(b) - b).norm();
                if moved > 1e-10 {
                    return Err(DomainError::GaugeNotBijective { x: b.x, y: b.y });
                }
            }
        }
    }
    for _ in 0..samples {
        let p = domain.sample_interior(rng);
        let q = gauge.forward(p);
        if !domain.shape.contains(q) || (gauge.inverse(q) - p).norm() > 1e-9 {
            return Err(DomainError::GaugeNotBijective { x: p.x, y: p.y });
        }
    }
    Ok(())
}

/// Pull the metric of `domain` back by `gauge`: the result carries
/// `g'(p) = J(p)^T g(psi(p)) J(p)`, so the gauge is an isometry from the
/// new domain onto the old one.
pub fn pullback_domain(
    domain: &MetricDomain,
    gauge: &GaugeSpec,
) -> Result<MetricDomain, DomainError> {
    // refuse singular jacobians up front
    let mut rng = crate::seeded_rng(0x9a5e);
    for _ in 0..256 {
        let p = domain.sample_interior(&mut rng);
        let det = gauge.jacobian(p).determinant();
        if det.abs() < 1e-12 {
            return Err(DomainError::SingularJacobian { x: p.x, y: p.y, det });
        }
    }
    let metric = MetricSpec::Pullback {
        base: Box::new(domain.metric.clone()),
        gauge: gauge.clone(),
    };
    Ok(MetricDomain {
        shape: domain.shape.clone(),
        metric,
        name: format!("{}~{}", domain.name, gauge.name()),
    })
}
