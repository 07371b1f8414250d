//! Boundary-fixing diffeomorphisms used to manufacture isometric manifold pairs.

use crate::error::DomainError;
use crate::geom::{rotation, rotation_deriv, Mat2, Point};

/// A diffeomorphism of a domain onto itself with an analytic jacobian.
///
/// All built-in gauges are rotations by a radius-dependent angle, so the
/// inverse is analytic as well. Every gauge except `RigidRotation` is the
/// identity on the boundary of the domain it is designed for.
#[derive(Debug, Clone, PartialEq)]
pub enum GaugeSpec {
    Identity,
    /// `(r, theta) -> (r, theta + beta (1 - r^2))`; fixes the unit circle.
    RadialTwist { beta: f64 },
    /// Twist vanishing on both circles of an annulus with inner radius `r_in`,
    /// normalized so the peak rotation angle is `beta`.
    RingTwist { beta: f64, r_in: f64 },
    /// Compactly supported twist inside the disk `|p - center| < radius`;
    /// fixes the boundary of any domain containing that disk.
    LocalTwist { center: [f64; 2], radius: f64, beta: f64 },
    /// Rotation of the whole plane. Does NOT fix the boundary; used as a
    /// deliberately invalid input in negative controls.
    RigidRotation { angle: f64 },
}

impl GaugeSpec {
    /// Rotation angle and its derivative with respect to `s = |p - c|^2`,
    /// together with the rotation center.
    fn angle_profile(&self, p: Point) -> (Point, f64, f64) {
        match self {
            GaugeSpec::Identity => (Point::new(0.0, 0.0), 0.0, 0.0),
            GaugeSpec::RadialTwist { beta } => {
                let c = Point::new(0.0, 0.0);
                let s = (p - c).norm_squared();
                (c, beta * (1.0 - s), -beta)
            }
            GaugeSpec::RingTwist { beta, r_in } => {
                let c = Point::new(0.0, 0.0);
                let s = (p - c).norm_squared();
                let a = r_in * r_in;
                // peak of (1-s)(s-a) over [a, 1] is at s = (1+a)/2
                let peak = (1.0 - a) * (1.0 - a) / 4.0;
                let scale = beta / peak;
                (c, scale * (1.0 - s) * (s - a), scale * (1.0 + a - 2.0 * s))
            }
            GaugeSpec::LocalTwist { center, radius, beta } => {
                let c = Point::new(center[0], center[1]);
                let t = (p - c).norm_squared() / (radius * radius);
                if t >= 1.0 {
                    (c, 0.0, 0.0)
                } else {
                    let u = 1.0 - t;
                    (c, beta * u * u * u, -3.0 * beta * u * u / (radius * radius))
                }
            }
            GaugeSpec::RigidRotation { angle } => (Point::new(0.0, 0.0), *angle, 0.0),
        }
    }

    pub fn forward(&self, p: Point) -> Point {
        let (c, alpha, _) = self.angle_profile(p);
        c + rotation(alpha) * (p - c)
    }

    /// Analytic jacobian of `forward` at `p`.
    pub fn jacobian(&self, p: Point) -> Mat2 {
        let (c, alpha, dalpha_ds) = self.angle_profile(p);
        let q = p - c;
        // d alpha / dp = dalpha_ds * 2 q
        rotation(alpha) + rotation_deriv(alpha) * q * (2.0 * dalpha_ds * q.transpose())
    }

    /// Central-difference jacobian; numerical cross-check for the analytic one.
    pub fn jacobian_fd(&self, p: Point, step: f64) -> Mat2 {
        let mut j = Mat2::zeros();
        for axis in 0..2 {
            let mut dp = Point::new(0.0, 0.0);
            dp[axis] = step;
            let col = (self.forward(p + dp) - self.forward(p - dp)) / (2.0 * step);
            j.set_column(axis, &col);
        }
        j
    }

    /// Exact inverse (all gauges preserve the distance to their center).
    pub fn inverse(&self, q: Point) -> Point {
        let (c, alpha, _) = self.angle_profile(q);
        c + rotation(-alpha) * (q - c)
    }

    /// Whether the gauge is the identity on the boundary of its target domain.
    pub fn fixes_boundary(&self) -> bool {
        !matches!(self, GaugeSpec::RigidRotation { .. })
    }

    pub fn name(&self) -> String {
        match self {
            GaugeSpec::Identity => "identity".into(),
            GaugeSpec::RadialTwist { beta } => format!("radial-twist:{beta}"),
            GaugeSpec::RingTwist { beta, r_in } => format!("ring-twist:{beta},{r_in}"),
            GaugeSpec::LocalTwist { center, radius, beta } => {
                format!("local-twist:{},{},{radius},{beta}", center[0], center[1])
            }
            GaugeSpec::RigidRotation { angle } => format!("rotate:{angle}"),
        }
    }

    pub fn parse(name: &str) -> Result<Self, DomainError> {
        let nums = |rest: &str, n: usize| -> Result<Vec<f64>, DomainError> {
            let parts: Vec<f64> = rest
                .split(',')
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| DomainError::UnknownGauge(name.into()))?;
            if parts.len() != n {
                return Err(DomainError::UnknownGauge(name.into()));
            }
            Ok(parts)
        };
        if name == "identity" {
            Ok(GaugeSpec::Identity)
        } else if let Some(rest) = name.strip_prefix("radial-twist:") {
            let v = nums(rest, 1)?;
            Ok(GaugeSpec::RadialTwist { beta: v[0] })
        } else if let Some(rest) = name.strip_prefix("ring-twist:") {
            let v = nums(rest, 2)?;
            Ok(GaugeSpec::RingTwist { beta: v[0], r_in: v[1] })
        } else if let Some(rest) = name.strip_prefix("local-twist:") {
            let v = nums(rest, 4)?;
            Ok(GaugeSpec::LocalTwist { center: [v[0], v[1]], radius: v[2], beta: v[3] })
        } else if let Some(rest) = name.strip_prefix("rotate:") {
            let v = nums(rest, 1)?;
            Ok(GaugeSpec::RigidRotation { angle: v[0] })
        } else {
            Err(DomainError::UnknownGauge(name.into()))
        }
    }
}
