//! Domain shapes: closed planar regions with piecewise-analytic boundary loops.

use crate::error::DomainError;
use crate::geom::{
    intervals_cover_unit, point_in_polygon, segment_disk_interval, segment_point_dist2,
    segment_rect_interval, segments_cross, Point,
};

/// Containment tolerance for the closed domain. Boundary samples produced by
/// the resampler must pass the `contains` test.
pub const CONTAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum DomainShape {
    /// Unit disk centered at the origin.
    Disk,
    /// Unit disk with a concentric circular hole of radius `r_in`.
    Annulus { r_in: f64 },
    /// Two disks of radius `lobe_radius` centered at `(+-lobe_center, 0)`
    /// joined by a rectangular neck of half-width `neck_half_width`.
    Dumbbell { lobe_center: f64, lobe_radius: f64, neck_half_width: f64 },
    /// Simple polygon (counterclockwise) minus hole polygons.
    PolygonWithHoles { outer: Vec<Point>, holes: Vec<Vec<Point>> },
}

/// One analytic piece of a boundary loop.
#[derive(Debug, Clone)]
pub enum CurvePiece {
    /// Circular arc `center + r (cos a, sin a)` for `a` from `a0` to `a1`
    /// (traversal direction given by the sign of `a1 - a0`).
    Arc { center: Point, r: f64, a0: f64, a1: f64 },
    /// Straight segment from `a` to `b`.
    Seg { a: Point, b: Point },
}

impl CurvePiece {
    pub fn eval(&self, t: f64) -> Point {
        match self {
            CurvePiece::Arc { center, r, a0, a1 } => {
                let a = a0 + (a1 - a0) * t;
                Point::new(center.x + r * a.cos(), center.y + r * a.sin())
            }
            CurvePiece::Seg { a, b } => a + (b - a) * t,
        }
    }

    /// Euclidean length of the piece.
    pub fn euclid_len(&self) -> f64 {
        match self {
            CurvePiece::Arc { r, a0, a1, .. } => r * (a1 - a0).abs(),
            CurvePiece::Seg { a, b } => (b - a).norm(),
        }
    }
}

/// A closed boundary loop as a chain of analytic pieces.
#[derive(Debug, Clone)]
pub struct BoundaryLoop {
    pub pieces: Vec<CurvePiece>,
}

impl BoundaryLoop {
    pub fn euclid_len(&self) -> f64 {
        self.pieces.iter().map(|p| p.euclid_len()).sum()
    }

    /// Evaluate by Euclidean-arclength-proportional parameter `t` in `[0, 1)`.
    pub fn eval(&self, t: f64) -> Point {
        let total = self.euclid_len();
        let mut s = (t.rem_euclid(1.0)) * total;
        for piece in &self.pieces {
            let l = piece.euclid_len();
            if s <= l || std::ptr::eq(piece, self.pieces.last().unwrap()) {
                return piece.eval((s / l).min(1.0));
            }
            s -= l;
        }
        self.pieces.last().unwrap().eval(1.0)
    }
}

impl DomainShape {
    pub fn validate(&self) -> Result<(), DomainError> {
        match self {
            DomainShape::Disk => Ok(()),
            DomainShape::Annulus { r_in } => {
                if *r_in <= 0.0 || *r_in >= 1.0 {
                    Err(DomainError::BadParameter(format!(
                        "annulus inner radius must be in (0, 1), got {r_in}"
                    )))
                } else {
                    Ok(())
                }
            }
            DomainShape::Dumbbell { lobe_center, lobe_radius, neck_half_width } => {
                let ok = *lobe_radius > 0.0
                    && *neck_half_width > 0.0
                    && neck_half_width < lobe_radius
                    && (lobe_radius * lobe_radius - neck_half_width * neck_half_width).sqrt()
                        < *lobe_center;
                if ok {
                    Ok(())
                } else {
                    Err(DomainError::BadParameter(format!(
                        "dumbbell parameters ({lobe_center}, {lobe_radius}, {neck_half_width}) \
                         do not describe two lobes with a strict neck"
                    )))
                }
            }
            DomainShape::PolygonWithHoles { outer, holes } => {
                if outer.len() < 3 || holes.iter().any(|h| h.len() < 3) {
                    Err(DomainError::BadParameter(
                        "polygon loops need at least 3 vertices".into(),
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Axis-aligned bounding box of the closed domain.
    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            DomainShape::Disk => (Point::new(-1.0, -1.0), Point::new(1.0, 1.0)),
            DomainShape::Annulus { .. } => (Point::new(-1.0, -1.0), Point::new(1.0, 1.0)),
            DomainShape::Dumbbell { lobe_center, lobe_radius, .. } => (
                Point::new(-lobe_center - lobe_radius, -lobe_radius),
                Point::new(lobe_center + lobe_radius, *lobe_radius),
            ),
            DomainShape::PolygonWithHoles { outer, .. } => {
                let mut min = Point::new(f64::INFINITY, f64::INFINITY);
                let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for p in outer {
                    min.x = min.x.min(p.x);
                    min.y = min.y.min(p.y);
                    max.x = max.x.max(p.x);
                    max.y = max.y.max(p.y);
                }
                (min, max)
            }
        }
    }

    /// Membership in the closed domain (boundary included, `CONTAIN_TOL` slack).
    pub fn contains(&self, p: Point) -> bool {
        match self {
            DomainShape::Disk => p.norm_squared() <= (1.0 + CONTAIN_TOL) * (1.0 + CONTAIN_TOL),
            DomainShape::Annulus { r_in } => {
                let r2 = p.norm_squared();
                r2 <= (1.0 + CONTAIN_TOL) * (1.0 + CONTAIN_TOL)
                    && r2 >= (r_in - CONTAIN_TOL).max(0.0).powi(2)
            }
            DomainShape::Dumbbell { lobe_center, lobe_radius, neck_half_width } => {
                let rr = (lobe_radius + CONTAIN_TOL) * (lobe_radius + CONTAIN_TOL);
                let right = Point::new(*lobe_center, 0.0);
                let left = Point::new(-lobe_center, 0.0);
                (p - right).norm_squared() <= rr
                    || (p - left).norm_squared() <= rr
                    || (p.x.abs() <= lobe_center + CONTAIN_TOL
                        && p.y.abs() <= neck_half_width + CONTAIN_TOL)
            }
            DomainShape::PolygonWithHoles { outer, holes } => {
                let near_edge = |loop_pts: &[Point]| {
                    let n = loop_pts.len();
                    (0..n).any(|i| {
                        segment_point_dist2(loop_pts[i], loop_pts[(i + 1) % n], p)
                            <= CONTAIN_TOL * CONTAIN_TOL
                    })
                };
                if near_edge(outer) || holes.iter().any(|h| near_edge(h)) {
                    return true;
                }
                point_in_polygon(p, outer) && !holes.iter().any(|h| point_in_polygon(p, h))
            }
        }
    }

    /// True when the whole segment `a`..`b` stays inside the closed domain.
    pub fn segment_inside(&self, a: Point, b: Point) -> bool {
        if !self.contains(a) || !self.contains(b) {
            return false;
        }
        match self {
            // Convex: the chord of two inside points is inside.
            DomainShape::Disk => true,
            DomainShape::Annulus { r_in } => {
                let hole = (r_in - CONTAIN_TOL).max(0.0);
                segment_point_dist2(a, b, Point::new(0.0, 0.0)) >= hole * hole
            }
            DomainShape::Dumbbell { lobe_center, lobe_radius, neck_half_width } => {
                let mut cover = Vec::with_capacity(3);
                let r = lobe_radius + CONTAIN_TOL;
                if let Some(iv) =
                    segment_disk_interval(a, b, Point::new(*lobe_center, 0.0), r)
                {
                    cover.push(iv);
                }
                if let Some(iv) =
                    segment_disk_interval(a, b, Point::new(-lobe_center, 0.0), r)
                {
                    cover.push(iv);
                }
                if let Some(iv) = segment_rect_interval(
                    a,
                    b,
                    Point::new(-lobe_center - CONTAIN_TOL, -neck_half_width - CONTAIN_TOL),
                    Point::new(lobe_center + CONTAIN_TOL, neck_half_width + CONTAIN_TOL),
                ) {
                    cover.push(iv);
                }
                intervals_cover_unit(&mut cover, 1e-9)
            }
            DomainShape::PolygonWithHoles { outer, holes } => {
                let crosses = |loop_pts: &[Point]| {
                    let n = loop_pts.len();
                    (0..n).any(|i| {
                        segments_cross(a, b, loop_pts[i], loop_pts[(i + 1) % n], 1e-12)
                    })
                };
                if crosses(outer) || holes.iter().any(|h| crosses(h)) {
                    return false;
                }
                // Edge-grazing chords: spot-check interior points.
                [0.25, 0.5, 0.75].iter().all(|&t| self.contains(a + (b - a) * t))
            }
        }
    }

    /// Boundary loops. The first loop is the outer boundary (counterclockwise);
    /// holes follow (clockwise), so the domain is always on the left.
    pub fn boundary_loops(&self) -> Vec<BoundaryLoop> {
        use std::f64::consts::PI;
        match self {
            DomainShape::Disk => vec![BoundaryLoop {
                pieces: vec![CurvePiece::Arc {
                    center: Point::new(0.0, 0.0),
                    r: 1.0,
                    a0: 0.0,
                    a1: 2.0 * PI,
                }],
            }],
            DomainShape::Annulus { r_in } => vec![
                BoundaryLoop {
                    pieces: vec![CurvePiece::Arc {
                        center: Point::new(0.0, 0.0),
                        r: 1.0,
                        a0: 0.0,
                        a1: 2.0 * PI,
                    }],
                },
                BoundaryLoop {
                    pieces: vec![CurvePiece::Arc {
                        center: Point::new(0.0, 0.0),
                        r: *r_in,
                        a0: 2.0 * PI,
                        a1: 0.0,
                    }],
                },
            ],
            DomainShape::Dumbbell { lobe_center, lobe_radius, neck_half_width } => {
                let c = *lobe_center;
                let rr = *lobe_radius;
                let w = *neck_half_width;
                let s = (rr * rr - w * w).sqrt();
                let beta = (w / rr).asin();
                let right = Point::new(c, 0.0);
                let left = Point::new(-c, 0.0);
                vec![BoundaryLoop {
                    pieces: vec![
                        // Right lobe, everything but the arc facing the neck.
                        CurvePiece::Arc { center: right, r: rr, a0: PI + beta, a1: 3.0 * PI - beta },
                        // Top neck edge, right to left.
                        CurvePiece::Seg { a: Point::new(c - s, w), b: Point::new(-c + s, w) },
                        // Left lobe.
                        CurvePiece::Arc { center: left, r: rr, a0: beta, a1: 2.0 * PI - beta },
                        // Bottom neck edge, left to right.
                        CurvePiece::Seg { a: Point::new(-c + s, -w), b: Point::new(c - s, -w) },
                    ],
                }]
            }
            DomainShape::PolygonWithHoles { outer, holes } => {
                let to_loop = |pts: &Vec<Point>| BoundaryLoop {
                    pieces: (0..pts.len())
                        .map(|i| CurvePiece::Seg { a: pts[i], b: pts[(i + 1) % pts.len()] })
                        .collect(),
                };
                let mut loops = vec![to_loop(outer)];
                loops.extend(holes.iter().map(to_loop));
                loops
            }
        }
    }

    /// Exact Euclidean distance from `p` to the boundary.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        let mut best = f64::INFINITY;
        for loop_ in self.boundary_loops() {
            for piece in &loop_.pieces {
                let d = match piece {
                    CurvePiece::Seg { a, b } => segment_point_dist2(*a, *b, p).sqrt(),
                    CurvePiece::Arc { center, r, a0, a1 } => {
                        let rel = p - center;
                        let ang = rel.y.atan2(rel.x);
                        let (lo, hi) = (a0.min(*a1), a0.max(*a1));
                        let mut d = f64::INFINITY;
                        for k in -1..=1 {
                            let a = ang + 2.0 * std::f64::consts::PI * k as f64;
                            if a >= lo && a <= hi {
                                d = d.min((rel.norm() - r).abs());
                            }
                        }
                        d.min((p - piece.eval(0.0)).norm())
                            .min((p - piece.eval(1.0)).norm())
                    }
                };
                best = best.min(d);
            }
        }
        best
    }

    /// Canonical name used in mesh files.
    pub fn name(&self) -> String {
        match self {
            DomainShape::Disk => "disk".into(),
            DomainShape::Annulus { r_in } => format!("annulus:{r_in}"),
            DomainShape::Dumbbell { lobe_center, lobe_radius, neck_half_width } => {
                format!("dumbbell:{lobe_center},{lobe_radius},{neck_half_width}")
            }
            DomainShape::PolygonWithHoles { outer, holes } => {
                let fmt_loop = |pts: &Vec<Point>| {
                    pts.iter()
                        .map(|p| format!("{},{}", p.x, p.y))
                        .collect::<Vec<_>>()
                        .join(";")
                };
                let mut s = format!("polygon:{}", fmt_loop(outer));
                for h in holes {
                    s.push_str(&format!("|hole:{}", fmt_loop(h)));
                }
                s
            }
        }
    }

    pub fn parse(name: &str) -> Result<Self, DomainError> {
        let shape = if name == "disk" {
            DomainShape::Disk
        } else if let Some(rest) = name.strip_prefix("annulus:") {
            let r_in = rest
                .parse::<f64>()
                .map_err(|_| DomainError::UnknownDomain(name.into()))?;
            DomainShape::Annulus { r_in }
        } else if let Some(rest) = name.strip_prefix("dumbbell:") {
            let parts: Vec<f64> = rest
                .split(',')
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| DomainError::UnknownDomain(name.into()))?;
            if parts.len() != 3 {
                return Err(DomainError::UnknownDomain(name.into()));
            }
            DomainShape::Dumbbell {
                lobe_center: parts[0],
                lobe_radius: parts[1],
                neck_half_width: parts[2],
            }
        } else if let Some(rest) = name.strip_prefix("polygon:") {
            let mut outer = Vec::new();
            let mut holes = Vec::new();
            for (idx, part) in rest.split('|').enumerate() {
                let body = if idx == 0 {
                    part
                } else {
                    part.strip_prefix("hole:")
                        .ok_or_else(|| DomainError::UnknownDomain(name.into()))?
                };
                let pts = body
                    .split(';')
                    .map(|pair| {
                        let (x, y) = pair
                            .split_once(',')
                            .ok_or_else(|| DomainError::UnknownDomain(name.into()))?;
                        Ok(Point::new(
                            x.parse::<f64>()
                                .map_err(|_| DomainError::UnknownDomain(name.into()))?,
                            y.parse::<f64>()
                                .map_err(|_| DomainError::UnknownDomain(name.into()))?,
                        ))
                    })
                    .collect::<Result<Vec<_>, DomainError>>()?;
                if idx == 0 {
                    outer = pts;
                } else {
                    holes.push(pts);
                }
            }
            DomainShape::PolygonWithHoles { outer, holes }
        } else {
            return Err(DomainError::UnknownDomain(name.into()));
        };
        shape.validate()?;
        Ok(shape)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_contains_boundary() {
        assert!(DomainShape::Disk.contains(Point::new(1.0, 0.0)));
        assert!(!DomainShape::Disk.contains(Point::new(1.0 + 1e-6, 0.0)));
    }

    #[test]
    fn annulus_rejects_hole_chord() {
        let shape = DomainShape::Annulus { r_in: 0.3 };
        assert!(!shape.segment_inside(Point::new(-0.5, 0.0), Point::new(0.5, 0.0)));
        assert!(shape.segment_inside(Point::new(-0.5, 0.5), Point::new(0.5, 0.5)));
    }

    #[test]
    fn dumbbell_loop_closes() {
        let shape = DomainShape::Dumbbell {
            lobe_center: 0.55,
            lobe_radius: 0.45,
            neck_half_width: 0.18,
        };
        shape.validate().unwrap();
        let loops = shape.boundary_loops();
        assert_eq!(loops.len(), 1);
        let pieces = &loops[0].pieces;
        for i in 0..pieces.len() {
            let end = pieces[i].eval(1.0);
            let start = pieces[(i + 1) % pieces.len()].eval(0.0);
            assert!((end - start).norm() < 1e-12, "gap between pieces {i} and next");
        }
        // every boundary point is in the closed domain
        for k in 0..200 {
            let p = loops[0].eval(k as f64 / 200.0);
            assert!(shape.contains(p), "boundary point {p:?} not contained");
        }
    }

    #[test]
    fn dumbbell_segment_through_neck() {
        let shape = DomainShape::Dumbbell {
            lobe_center: 0.55,
            lobe_radius: 0.45,
            neck_half_width: 0.18,
        };
        // along the axis: inside through the neck
        assert!(shape.segment_inside(Point::new(-0.6, 0.0), Point::new(0.6, 0.0)));
        // above the neck: leaves the domain between the lobes
        assert!(!shape.segment_inside(Point::new(-0.55, 0.35), Point::new(0.55, 0.35)));
    }

    #[test]
    fn names_round_trip() {
        for shape in [
            DomainShape::Disk,
            DomainShape::Annulus { r_in: 0.3 },
            DomainShape::Dumbbell {
                lobe_center: 0.55,
                lobe_radius: 0.45,
                neck_half_width: 0.18,
            },
        ] {
            let back = DomainShape::parse(&shape.name()).unwrap();
            assert_eq!(shape, back);
        }
    }
}
