//! Built-in scenario catalog.
//!
//! `disk` is the convex sanity case, `annulus` the non-convex case with an
//! analytic geodesic oracle, `dumbbell` exercises paths bending along a
//! concave boundary, and `conformal-disk` puts a smooth conformal bump on
//! the flat disk.

use crate::domain::{DomainShape, GaugeSpec, MetricDomain, MetricSpec};
use crate::error::DomainError;

/// A catalog entry: the base geometry plus the canonical gauge used for
/// isometric pair construction, the non-isometric control metric, and a
/// deliberately boundary-moving gauge for negative boundary tests.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub domain: MetricDomain,
    /// Boundary-fixing gauge for the isometric pair experiment.
    pub gauge: GaugeSpec,
    /// A metric on the same shape that is genuinely not isometric to the base.
    pub control_metric: MetricSpec,
    /// Gauge that moves the boundary: invalid input for the pipeline.
    pub broken_gauge: GaugeSpec,
}

/// Analytic tangent-arc-tangent distance between `(-a, 0)` and `(a, 0)` in
/// the Euclidean annulus with inner radius `r`: the geodesic runs straight
/// to the hole, wraps it, and leaves symmetrically.
pub fn annulus_oracle_distance(a: f64, r: f64) -> f64 {
    2.0 * (a * a - r * r).sqrt() + r * (std::f64::consts::PI - 2.0 * (r / a).acos())
}

pub fn scenario(name: &str) -> Result<Scenario, DomainError> {
    let bump = |center: [f64; 2], radius: f64| MetricSpec::ConformalBump {
        amplitude: 0.3,
        center,
        radius,
    };
    match name {
        "disk" => Ok(Scenario {
            name: name.into(),
            domain: MetricDomain::new(DomainShape::Disk, MetricSpec::Euclidean, "disk"),
            gauge: GaugeSpec::LocalTwist { center: [0.3, 0.15], radius: 0.25, beta: 0.3 },
            control_metric: bump([0.25, 0.1], 0.5),
            broken_gauge: GaugeSpec::RigidRotation { angle: 0.3 },
        }),
        "annulus" => Ok(Scenario {
            name: name.into(),
            domain: MetricDomain::new(
                DomainShape::Annulus { r_in: 0.3 },
                MetricSpec::Euclidean,
                "annulus",
            ),
            gauge: GaugeSpec::LocalTwist { center: [0.55, 0.0], radius: 0.2, beta: 0.3 },
            control_metric: bump([0.65, 0.0], 0.3),
            broken_gauge: GaugeSpec::RigidRotation { angle: 0.3 },
        }),
        "dumbbell" => Ok(Scenario {
            name: name.into(),
            domain: MetricDomain::new(
                DomainShape::Dumbbell {
                    lobe_center: 0.55,
                    lobe_radius: 0.45,
                    neck_half_width: 0.18,
                },
                MetricSpec::Euclidean,
                "dumbbell",
            ),
            gauge: GaugeSpec::LocalTwist { center: [0.55, 0.1], radius: 0.15, beta: 0.35 },
            control_metric: bump([0.55, 0.0], 0.3),
            broken_gauge: GaugeSpec::RigidRotation { angle: 0.3 },
        }),
        "conformal-disk" => Ok(Scenario {
            name: name.into(),
            domain: MetricDomain::new(
                DomainShape::Disk,
                bump([0.25, 0.1], 0.5),
                "conformal-disk",
            ),
            gauge: GaugeSpec::LocalTwist { center: [-0.25, -0.1], radius: 0.25, beta: 0.3 },
            // the flat disk is the non-isometric control for the bump
            control_metric: MetricSpec::Euclidean,
            broken_gauge: GaugeSpec::RigidRotation { angle: 0.3 },
        }),
        other => Err(DomainError::UnknownDomain(other.into())),
    }
}

pub fn scenario_names() -> &'static [&'static str] {
    &["disk", "annulus", "dumbbell", "conformal-disk"]
}
