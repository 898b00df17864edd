use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{RegError, Result};

/// Which total objective is optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Similarity plus smoothness only; no Jacobian term, no landmarks.
    Pretrain,
    /// Similarity, weighted landmark distance and full regularization.
    Train,
    /// Similarity and full regularization, no landmarks.
    Finetune,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Pretrain => "pretrain",
            Mode::Train => "train",
            Mode::Finetune => "finetune",
        })
    }
}

impl FromStr for Mode {
    type Err = RegError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pretrain" => Ok(Mode::Pretrain),
            "train" => Ok(Mode::Train),
            "finetune" => Ok(Mode::Finetune),
            other => Err(RegError::InvalidConfig(format!("unknown mode `{other}`"))),
        }
    }
}

/// How the per-level smoothness and folding sums enter the total objective.
///
/// `Sum` is the literal sum over voxels. `VoxelMean` divides each level's bracket
/// by that level's voxel count, which puts the regularizer on the same scale as the
/// (already averaged) similarity and landmark terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegNormalization {
    Sum,
    VoxelMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveConfig {
    /// Weight of the regularization loss.
    pub sigma: f64,
    /// Weight of the landmark loss.
    pub mu: f64,
    /// Weight of the negative-Jacobian penalty inside the regularizer.
    pub lambda: f64,
    /// NCC window edge length (odd).
    pub window: usize,
    pub mode: Mode,
    pub level_count: usize,
    pub reg_normalization: RegNormalization,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            sigma: 1.0,
            mu: 0.01,
            lambda: 1e-4,
            window: 3,
            mode: Mode::Finetune,
            level_count: 4,
            reg_normalization: RegNormalization::VoxelMean,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(RegError::InvalidConfig(format!(
                "window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if self.level_count == 0 {
            return Err(RegError::InvalidConfig("level_count must be >= 1".into()));
        }
        for (name, v) in [("sigma", self.sigma), ("mu", self.mu), ("lambda", self.lambda)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(RegError::InvalidConfig(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Jacobian-penalty weight actually applied in the active mode.
    pub fn effective_lambda(&self) -> f64 {
        match self.mode {
            Mode::Pretrain => 0.0,
            _ => self.lambda,
        }
    }

    /// Weight in front of the whole regularizer in the active mode.
    pub fn effective_sigma(&self) -> f64 {
        match self.mode {
            Mode::Pretrain => 1.0,
            _ => self.sigma,
        }
    }

    pub fn effective_mu(&self) -> f64 {
        match self.mode {
            Mode::Train => self.mu,
            _ => 0.0,
        }
    }

    /// Weight of the similarity and regularization terms at `level` (1-based): `1 / 2^(L-i)`.
    pub fn level_weight(&self, level: usize) -> f64 {
        0.5f64.powi((self.level_count - level) as i32)
    }

    /// Weight of the landmark term at `level`: `2^(L-i)`.
    pub fn landmark_weight(&self, level: usize) -> f64 {
        2f64.powi((self.level_count - level) as i32)
    }
}
