//! Experiment configuration: every threshold that can appear in a verdict
//! lives here and is echoed into reports.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Tunable thresholds with their documented ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Cut-detection quadratic-fit residual threshold relative to h, in (0, 1).
    pub tau_cut: f64,
    /// Transversality angle floor in degrees, in (0, 90).
    pub theta_min_deg: f64,
    /// Argmax proximity for geodesic membership, in frame spacings, >= 1.
    pub delta_max_frames: f64,
    /// Acceptable |lambda - 1| for the isometry verdict, in (0, 0.5).
    pub lambda_tol: f64,
    /// Acceptable per-point lambda spread, in (0, 0.5).
    pub lambda_spread: f64,
    /// Best/second-best ratio above which a match is ambiguous, in (0, 1].
    pub ratio_test: f64,
    /// Bi-Lipschitz probe scale, > 0.
    pub rho: f64,
    /// Finite-difference step for dphi derivatives, in units of h, in (0, 5].
    pub t_step_h: f64,
    /// Nearest-point row tolerance; 0 is exact for graph data.
    pub tol_near: f64,
    /// Distance-preservation defect allowance, in units of h.
    pub dist_defect_h: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            tau_cut: 0.07,
            theta_min_deg: 10.0,
            delta_max_frames: 2.0,
            lambda_tol: 0.02,
            lambda_spread: 0.03,
            ratio_test: 0.9,
            rho: 0.2,
            t_step_h: 4.0,
            tol_near: 0.0,
            dist_defect_h: 3.0,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, field: &'static str, message: String| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::Invalid { field, message })
            }
        };
        check(
            self.tau_cut > 0.0 && self.tau_cut < 1.0,
            "tau_cut",
            format!("must be in (0, 1), got {}", self.tau_cut),
        )?;
        check(
            self.theta_min_deg > 0.0 && self.theta_min_deg < 90.0,
            "theta_min_deg",
            format!("must be in (0, 90), got {}", self.theta_min_deg),
        )?;
        check(
            self.delta_max_frames >= 1.0,
            "delta_max_frames",
            format!("must be >= 1, got {}", self.delta_max_frames),
        )?;
        check(
            self.lambda_tol > 0.0 && self.lambda_tol < 0.5,
            "lambda_tol",
            format!("must be in (0, 0.5), got {}", self.lambda_tol),
        )?;
        check(
            self.lambda_spread > 0.0 && self.lambda_spread < 0.5,
            "lambda_spread",
            format!("must be in (0, 0.5), got {}", self.lambda_spread),
        )?;
        check(
            self.ratio_test > 0.0 && self.ratio_test <= 1.0,
            "ratio_test",
            format!("must be in (0, 1], got {}", self.ratio_test),
        )?;
        check(self.rho > 0.0, "rho", format!("must be positive, got {}", self.rho))?;
        check(
            self.t_step_h > 0.0 && self.t_step_h <= 5.0,
            "t_step_h",
            format!("must be in (0, 5], got {}", self.t_step_h),
        )?;
        check(
            self.tol_near >= 0.0,
            "tol_near",
            format!("must be nonnegative, got {}", self.tol_near),
        )?;
        check(
            self.dist_defect_h > 0.0,
            "dist_defect_h",
            format!("must be positive, got {}", self.dist_defect_h),
        )?;
        Ok(())
    }
}

/// Full description of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub h: f64,
    pub stencil_radius: usize,
    /// Boundary frame spacing; defaults to 2h when absent.
    pub frame_spacing: Option<f64>,
    /// Interior source grid spacing for DDF archives.
    pub source_grid: f64,
    #[serde(default)]
    pub thresholds: Thresholds,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: "disk".into(),
            h: 0.02,
            stencil_radius: 3,
            frame_spacing: None,
            source_grid: 0.2,
            thresholds: Thresholds::default(),
            seed: 7,
        }
    }
}

impl ExperimentConfig {
    pub fn frame_spacing(&self) -> f64 {
        self.frame_spacing.unwrap_or(2.0 * self.h)
    }

    pub fn t_step(&self) -> f64 {
        self.thresholds.t_step_h * self.h
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(ConfigError::Invalid {
                field: "h",
                message: format!("spacing must be positive, got {}", self.h),
            });
        }
        if self.stencil_radius < 1 {
            return Err(ConfigError::Invalid {
                field: "stencil_radius",
                message: format!("must be at least 1, got {}", self.stencil_radius),
            });
        }
        if let Some(fs) = self.frame_spacing {
            if !(fs > 0.0) || fs > 2.0 * self.h * (1.0 + 1e-9) {
                return Err(ConfigError::Invalid {
                    field: "frame_spacing",
                    message: format!("must be in (0, 2h], got {fs} with h = {}", self.h),
                });
            }
        }
        if !(self.source_grid > 0.0) {
            return Err(ConfigError::Invalid {
                field: "source_grid",
                message: format!("must be positive, got {}", self.source_grid),
            });
        }
        self.thresholds.validate()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_losslessly() {
        let cfg = ExperimentConfig {
            scenario: "annulus".into(),
            h: 0.005,
            stencil_radius: 3,
            frame_spacing: Some(0.01),
            source_grid: 0.05,
            thresholds: Thresholds { tau_cut: 0.2, ..Thresholds::default() },
            seed: 42,
        };
        let text = cfg.to_json();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.h = -0.1;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.frame_spacing = Some(cfg.h * 4.0);
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.thresholds.t_step_h = 9.0;
        assert!(cfg.validate().is_err());
    }
}
