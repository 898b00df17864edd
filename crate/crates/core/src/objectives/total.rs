use serde::Serialize;

use super::config::{Mode, ObjectiveConfig, RegNormalization};
use super::landmarks::{landmark_mse, landmark_mse_gradient};
use super::ncc::ncc_with_gradient;
use super::regularizers::{l2_grad_reg, l2_grad_reg_gradient, njd_penalty, njd_penalty_gradient};
use crate::error::{RegError, Result};
use crate::fields::warp::{warp_unchecked, warp_with_gradient};
use crate::fields::DisplacementField;
use crate::grids::{downsample_landmarks, downsample_volume, level_factor, LandmarkSet, Volume};

/// Images (and optional landmarks) at one pyramid level.
#[derive(Debug, Clone)]
pub struct LevelData {
    pub fixed: Volume,
    pub moving: Volume,
    pub landmarks: Option<(LandmarkSet, LandmarkSet)>,
}

/// Paired image pyramids, coarsest level first.
#[derive(Debug, Clone)]
pub struct Pyramid {
    levels: Vec<LevelData>,
}

impl Pyramid {
    /// Downsample both images (and landmarks) by `0.5^(L-i)` for `i = 1..=L`.
    pub fn build(
        fixed: &Volume,
        moving: &Volume,
        landmarks: Option<(&LandmarkSet, &LandmarkSet)>,
        level_count: usize,
    ) -> Result<Pyramid> {
        if fixed.dims() != moving.dims() {
            return Err(RegError::DimMismatch {
                left: fixed.dims().0,
                right: moving.dims().0,
            });
        }
        if level_count == 0 {
            return Err(RegError::InvalidConfig("level_count must be >= 1".into()));
        }
        if let Some((lf, lm)) = landmarks {
            lf.check_paired(lm)?;
        }
        let mut levels = Vec::with_capacity(level_count);
        for level in 1..=level_count {
            let factor = level_factor(level, level_count);
            levels.push(LevelData {
                fixed: downsample_volume(fixed, factor)?,
                moving: downsample_volume(moving, factor)?,
                landmarks: landmarks.map(|(lf, lm)| {
                    (downsample_landmarks(lf, factor), downsample_landmarks(lm, factor))
                }),
            });
        }
        Ok(Pyramid { levels })
    }

    /// Assemble a pyramid from explicit per-level data (coarsest first).
    pub fn from_levels(levels: Vec<LevelData>) -> Result<Pyramid> {
        for l in &levels {
            if l.fixed.dims() != l.moving.dims() {
                return Err(RegError::DimMismatch {
                    left: l.fixed.dims().0,
                    right: l.moving.dims().0,
                });
            }
            if let Some((lf, lm)) = &l.landmarks {
                lf.check_paired(lm)?;
            }
        }
        Ok(Pyramid { levels })
    }

    pub fn levels(&self) -> &[LevelData] {
        &self.levels
    }

    /// Level `i`, 1-based.
    pub fn level(&self, i: usize) -> &LevelData {
        &self.levels[i - 1]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn has_landmarks(&self) -> bool {
        self.levels.iter().all(|l| l.landmarks.is_some())
    }
}

/// Per-level loss summands.
///
/// The `*_term` fields hold the raw quantities (NCC value, landmark MSE, smoothness
/// sum, folding sum); `total` is this level's weighted contribution under the active mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelLoss {
    pub level: usize,
    pub ncc_term: f64,
    pub weak_term: f64,
    pub l2_term: f64,
    pub jd_term: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossSummary {
    pub levels: Vec<LevelLoss>,
    pub total: f64,
}

impl LossSummary {
    /// `-sum_i 2^-(L-i) NCC_i`.
    pub fn self_loss(&self, cfg: &ObjectiveConfig) -> f64 {
        self.levels
            .iter()
            .map(|l| -cfg.level_weight(l.level) * l.ncc_term)
            .sum()
    }

    /// `sum_i 2^(L-i) MSE_i`.
    pub fn weak_loss(&self, cfg: &ObjectiveConfig) -> f64 {
        self.levels
            .iter()
            .map(|l| cfg.landmark_weight(l.level) * l.weak_term)
            .sum()
    }
}

fn reg_divisor(cfg: &ObjectiveConfig, field: &DisplacementField) -> f64 {
    match cfg.reg_normalization {
        RegNormalization::Sum => 1.0,
        RegNormalization::VoxelMean => field.dims().len() as f64,
    }
}

fn check_level(data: &LevelData, field: &DisplacementField, cfg: &ObjectiveConfig) -> Result<()> {
    field.check_dims(data.fixed.dims())?;
    if cfg.mode == Mode::Train && data.landmarks.is_none() {
        return Err(RegError::MissingLandmarks);
    }
    Ok(())
}

/// Loss of one level's terms for `field`, optionally with the gradient w.r.t. `field`.
pub(crate) fn level_objective(
    data: &LevelData,
    field: &DisplacementField,
    cfg: &ObjectiveConfig,
    level: usize,
    want_grad: bool,
) -> (LevelLoss, Option<DisplacementField>) {
    let dims = field.dims();
    let sim_w = cfg.level_weight(level);
    let reg_scale = cfg.effective_sigma() * sim_w / reg_divisor(cfg, field);
    let lambda = cfg.effective_lambda();
    let mu = cfg.effective_mu();

    let mut grad = want_grad.then(|| vec![[0.0; 3]; dims.len()]);

    let ncc = if let Some(g) = grad.as_mut() {
        let (warped, img_grad) = warp_with_gradient(&data.moving, field);
        let (value, dncc) = ncc_with_gradient(&warped, data.fixed.data(), dims, cfg.window, true);
        let dncc = dncc.expect("gradient requested");
        for ((slot, d), ig) in g.iter_mut().zip(&dncc).zip(&img_grad) {
            for c in 0..3 {
                slot[c] -= sim_w * d * ig[c];
            }
        }
        value
    } else {
        let warped = warp_unchecked(&data.moving, field);
        ncc_with_gradient(warped.data(), data.fixed.data(), dims, cfg.window, false).0
    };

    // The landmark MSE is reported whenever landmarks exist, but only weighted in train mode.
    let weak = match &data.landmarks {
        Some((lf, lm)) => {
            if let (Some(g), true) = (grad.as_mut(), mu > 0.0) {
                landmark_mse_gradient(field, lf, lm, mu * cfg.landmark_weight(level), g);
            }
            landmark_mse(field, lf, lm)
        }
        None => 0.0,
    };

    let l2 = l2_grad_reg(field);
    let jd = njd_penalty(field);
    if let Some(g) = grad.as_mut() {
        l2_grad_reg_gradient(field, reg_scale, g);
        if lambda > 0.0 {
            njd_penalty_gradient(field, reg_scale * lambda, g);
        }
    }

    let total = -sim_w * ncc + mu * cfg.landmark_weight(level) * weak + reg_scale * (lambda * jd + l2);
    let loss = LevelLoss {
        level,
        ncc_term: ncc,
        weak_term: weak,
        l2_term: l2,
        jd_term: jd,
        total,
    };
    (
        loss,
        grad.map(|g| DisplacementField::from_parts_unchecked(dims, g)),
    )
}

fn check_state(pyramid: &Pyramid, fields: &[DisplacementField], cfg: &ObjectiveConfig) -> Result<()> {
    cfg.validate()?;
    if pyramid.len() != cfg.level_count || fields.len() != cfg.level_count {
        return Err(RegError::MissingLevel {
            expected: cfg.level_count,
            got: pyramid.len().min(fields.len()),
        });
    }
    for (data, f) in pyramid.levels().iter().zip(fields) {
        check_level(data, f, cfg)?;
    }
    Ok(())
}

/// Total objective of the active mode over all levels.
///
/// * pretrain: `L_self + sum_i w_i L2_i`
/// * train: `L_self + mu L_weak + sigma L_reg`
/// * finetune: `L_self + sigma L_reg`
pub fn total_loss(
    pyramid: &Pyramid,
    fields: &[DisplacementField],
    cfg: &ObjectiveConfig,
) -> Result<LossSummary> {
    check_state(pyramid, fields, cfg)?;
    let levels: Vec<LevelLoss> = pyramid
        .levels()
        .iter()
        .zip(fields)
        .enumerate()
        .map(|(i, (data, f))| level_objective(data, f, cfg, i + 1, false).0)
        .collect();
    let total = levels.iter().map(|l| l.total).sum();
    Ok(LossSummary { levels, total })
}

/// Gradient of [`total_loss`] with respect to the field at `level` (1-based).
pub fn loss_gradient(
    pyramid: &Pyramid,
    fields: &[DisplacementField],
    cfg: &ObjectiveConfig,
    level: usize,
) -> Result<DisplacementField> {
    check_state(pyramid, fields, cfg)?;
    if level == 0 || level > cfg.level_count {
        return Err(RegError::InvalidConfig(format!(
            "level {level} outside 1..={}",
            cfg.level_count
        )));
    }
    let (_, g) = level_objective(pyramid.level(level), &fields[level - 1], cfg, level, true);
    Ok(g.expect("gradient requested"))
}
