//! Smooth SPD metric tensor fields on planar domains.

use crate::domain::gauge::GaugeSpec;
use crate::error::DomainError;
use crate::geom::{Mat2, Point};

#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec {
    /// Identity tensor everywhere.
    Euclidean,
    /// Conformal metric `e^{2u} I` with a compactly supported bump
    /// `u(p) = amplitude (1 - t^2)^3`, `t = |p - center| / radius < 1`.
    ConformalBump { amplitude: f64, center: [f64; 2], radius: f64 },
    /// Pullback `J^T (g o psi) J` of a base metric by a gauge `psi`.
    Pullback { base: Box<MetricSpec>, gauge: GaugeSpec },
}

impl MetricSpec {
    pub fn eval(&self, p: Point) -> Mat2 {
        match self {
            MetricSpec::Euclidean => Mat2::identity(),
            MetricSpec::ConformalBump { amplitude, center, radius } => {
                let t2 = (p - Point::new(center[0], center[1])).norm_squared()
                    / (radius * radius);
                if t2 >= 1.0 {
                    Mat2::identity()
                } else {
                    let u = amplitude * (1.0 - t2).powi(3);
                    Mat2::identity() * (2.0 * u).exp()
                }
            }
            MetricSpec::Pullback { base, gauge } => {
                let j = gauge.jacobian(p);
                j.transpose() * base.eval(gauge.forward(p)) * j
            }
        }
    }

    /// Conformal factor `e^{u}` relating g-arclength to Euclidean arclength,
    /// valid only for conformal metrics; used by analytic oracles in tests.
    pub fn is_euclidean(&self) -> bool {
        matches!(self, MetricSpec::Euclidean)
    }

    pub fn name(&self) -> String {
        match self {
            MetricSpec::Euclidean => "euclidean".into(),
            MetricSpec::ConformalBump { amplitude, center, radius } => {
                format!("conformal-bump:{amplitude},{},{},{radius}", center[0], center[1])
            }
            MetricSpec::Pullback { base, gauge } => {
                format!("pullback[{};{}]", base.name(), gauge.name())
            }
        }
    }

    pub fn parse(name: &str) -> Result<Self, DomainError> {
        if name == "euclidean" {
            Ok(MetricSpec::Euclidean)
        } else if let Some(rest) = name.strip_prefix("conformal-bump:") {
            let parts: Vec<f64> = rest
                .split(',')
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| DomainError::UnknownMetric(name.into()))?;
            if parts.len() != 4 {
                return Err(DomainError::UnknownMetric(name.into()));
            }
            Ok(MetricSpec::ConformalBump {
                amplitude: parts[0],
                center: [parts[1], parts[2]],
                radius: parts[3],
            })
        } else if let Some(rest) = name.strip_prefix("pullback[") {
            let inner = rest
                .strip_suffix(']')
                .ok_or_else(|| DomainError::UnknownMetric(name.into()))?;
            // the base metric may itself be a pullback; split on the last ';'
            // that sits at bracket depth zero
            let mut depth = 0usize;
            let mut split = None;
            for (i, ch) in inner.char_indices() {
                match ch {
                    '[' => depth += 1,
                    ']' => depth = depth.saturating_sub(1),
                    ';' if depth == 0 => split = Some(i),
                    _ => {}
                }
            }
            let split = split.ok_or_else(|| DomainError::UnknownMetric(name.into()))?;
            let base = MetricSpec::parse(&inner[..split])?;
            let gauge = GaugeSpec::parse(&inner[split + 1..])?;
            Ok(MetricSpec::Pullback { base: Box::new(base), gauge })
        } else {
            Err(DomainError::UnknownMetric(name.into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_is_identity() {
        assert_eq!(MetricSpec::Euclidean.eval(Point::new(0.3, -0.2)), Mat2::identity());
    }

    #[test]
    fn bump_is_compactly_supported() {
        let m = MetricSpec::ConformalBump { amplitude: 0.3, center: [0.25, 0.1], radius: 0.5 };
        assert_eq!(m.eval(Point::new(0.9, 0.5)), Mat2::identity());
        let inside = m.eval(Point::new(0.25, 0.1));
        assert!((inside[(0, 0)] - (0.6f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn names_round_trip() {
        let metrics = [
            MetricSpec::Euclidean,
            MetricSpec::ConformalBump { amplitude: 0.3, center: [0.25, 0.1], radius: 0.5 },
            MetricSpec::Pullback {
                base: Box::new(MetricSpec::ConformalBump {
                    amplitude: 0.3,
                    center: [0.0, 0.0],
                    radius: 0.5,
                }),
                gauge: GaugeSpec::RadialTwist { beta: 0.1 },
            },
        ];
        for m in metrics {
            assert_eq!(MetricSpec::parse(&m.name()).unwrap(), m);
        }
    }
}
