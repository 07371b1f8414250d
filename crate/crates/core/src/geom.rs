//! Small planar-geometry helpers shared across modules.

use nalgebra::{Matrix2, Vector2};

pub type Point = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Rotation by `angle` radians.
pub fn rotation(angle: f64) -> Mat2 {
    let (s, c) = angle.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// Derivative of `rotation` with respect to the angle.
pub fn rotation_deriv(angle: f64) -> Mat2 {
    let (s, c) = angle.sin_cos();
    Mat2::new(-s, -c, c, -s)
}

/// Squared Euclidean distance from `p` to the segment `a`..`b`.
pub fn segment_point_dist2(a: Point, b: Point, p: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm_squared();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm_squared()
}

/// Parameter interval of the line `a + t (b - a)` inside the closed disk
/// `|p - c| <= r`, clipped to `[0, 1]`. Returns `None` when they miss.
pub fn segment_disk_interval(a: Point, b: Point, c: Point, r: f64) -> Option<(f64, f64)> {
    let d = b - a;
    let f = a - c;
    let qa = d.norm_squared();
    if qa == 0.0 {
        return if f.norm_squared() <= r * r { Some((0.0, 1.0)) } else { None };
    }
    let qb = 2.0 * f.dot(&d);
    let qc = f.norm_squared() - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = (-qb - sq) / (2.0 * qa);
    let t1 = (-qb + sq) / (2.0 * qa);
    let lo = t0.max(0.0);
    let hi = t1.min(1.0);
    if lo <= hi { Some((lo, hi)) } else { None }
}

/// Parameter interval of the segment inside an axis-aligned rectangle
/// (slab clipping). Returns `None` when they miss.
pub fn segment_rect_interval(a: Point, b: Point, min: Point, max: Point) -> Option<(f64, f64)> {
    let d = b - a;
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    for axis in 0..2 {
        if d[axis] == 0.0 {
            if a[axis] < min[axis] || a[axis] > max[axis] {
                return None;
            }
        } else {
            let mut t0 = (min[axis] - a[axis]) / d[axis];
            let mut t1 = (max[axis] - a[axis]) / d[axis];
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            lo = lo.max(t0);
            hi = hi.min(t1);
            if lo > hi {
                return None;
            }
        }
    }
    Some((lo, hi))
}

/// True when the union of intervals covers `[0, 1]` up to `tol` gaps.
pub fn intervals_cover_unit(intervals: &mut Vec<(f64, f64)>, tol: f64) -> bool {
    if intervals.is_empty() {
        return false;
    }
    intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut reach = 0.0_f64;
    for &(lo, hi) in intervals.iter() {
        if lo > reach + tol {
            return false;
        }
        reach = reach.max(hi);
        if reach >= 1.0 - tol {
            return true;
        }
    }
    reach >= 1.0 - tol
}

/// Proper segment intersection test (shared endpoints do not count),
/// with an absolute tolerance on the cross products.
pub fn segments_cross(a: Point, b: Point, c: Point, d: Point, tol: f64) -> bool {
    let orient = |p: Point, q: Point, r: Point| (q - p).perp(&(r - p));
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    ((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol))
        && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol))
}

/// Even-odd point-in-polygon test on a closed loop of vertices.
pub fn point_in_polygon(p: Point, loop_pts: &[Point]) -> bool {
    let mut inside = false;
    let n = loop_pts.len();
    for i in 0..n {
        let a = loop_pts[i];
        let b = loop_pts[(i + 1) % n];
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}
