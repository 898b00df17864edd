use serde::{Deserialize, Serialize};

use crate::error::{RegError, Result};
use crate::objectives::ObjectiveConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    /// Normalized steepest descent with step halving on loss increase.
    GradientDescent,
    /// Adam moments on the preconditioned gradient, same acceptance rule.
    AdaptiveMoment,
}

/// Optimization schedule for [`register`](super::register) and [`finetune`](super::finetune).
///
/// Step sizes are the largest per-iteration displacement change, in voxels of the
/// level being updated. Gradients are rescaled before stepping, so these do not
/// depend on the magnitude of the loss terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub objective: ObjectiveConfig,
    pub iters_per_level: usize,
    pub step_size: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub finetune_iters: usize,
    pub finetune_step: f64,
    /// Gaussian width (level voxels) applied to gradients before stepping; 0 disables.
    pub grad_smoothing: f64,
    /// Amplitude of the seeded uniform perturbation of the coarsest increment.
    pub init_jitter: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            objective: ObjectiveConfig::default(),
            iters_per_level: 80,
            step_size: 0.5,
            optimizer: Optimizer::GradientDescent,
            seed: 0,
            finetune_iters: 20,
            finetune_step: 0.05,
            grad_smoothing: 1.0,
            init_jitter: 0.0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        self.objective.validate()?;
        if self.iters_per_level == 0 {
            return Err(RegError::InvalidConfig("iters_per_level must be >= 1".into()));
        }
        for (name, v) in [("step_size", self.step_size), ("finetune_step", self.finetune_step)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(RegError::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("grad_smoothing", self.grad_smoothing),
            ("init_jitter", self.init_jitter),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(RegError::InvalidConfig(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: EngineConfig =
            toml::from_str(text).map_err(|e| RegError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::Mode;

    #[test]
    fn toml_overrides() {
        let cfg = EngineConfig::from_toml(
            r#"
            iters_per_level = 12
            optimizer = "adaptive-moment"
            [objective]
            mode = "train"
            lambda = 0.0
            "#,
        )
        .unwrap();
        assert_eq!(cfg.iters_per_level, 12);
        assert_eq!(cfg.optimizer, Optimizer::AdaptiveMoment);
        assert_eq!(cfg.objective.mode, Mode::Train);
        assert_eq!(cfg.objective.sigma, 1.0);
        assert_eq!(cfg.finetune_iters, 20);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(EngineConfig::from_toml("step_size = 0.0").is_err());
        assert!(EngineConfig::from_toml("iters_per_level = 0").is_err());
        assert!(EngineConfig::from_toml("bogus = 1").is_err());
        assert!(EngineConfig::from_toml("[objective]\nwindow = 4").is_err());
    }
}
