//! Coarse-to-fine registration driver.
//!
//! Level `i` starts from the previous level's field promoted with
//! [`upsample_field_to`] and optimizes only an additive increment, so
//! `phi_i = up(phi_{i-1}) + delta_i`. Coarser increments are frozen while a finer one
//! is optimized. [`finetune`] later revisits all increments jointly.

mod config;
mod ensemble;
mod optimizer;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use config::{EngineConfig, Optimizer};
pub use ensemble::{ensemble, ensemble_uniform};

use crate::error::{RegError, Result};
use crate::evaluation::{evaluate, EvaluationReport};
use crate::fields::resample::upsample_adjoint;
use crate::fields::{compose_add, upsample_field_to, warp_volume, DisplacementField};
use crate::grids::{LandmarkSet, Volume};
use crate::objectives::ncc::ncc_with_gradient;
use crate::objectives::total::level_objective;
use crate::objectives::{total_loss, LossSummary, Mode, ObjectiveConfig, Pyramid};
use optimizer::{descend, DescentSettings};

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub dims: [usize; 3],
    /// This level's weighted loss at entry and after every accepted step.
    pub loss_trace: Vec<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Level NCC of the moving image warped by the promoted coarser field alone.
    pub ncc_promoted: f64,
    /// Level NCC after optimizing this level's increment.
    pub ncc_final: f64,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Serialize)]
pub struct FinetuneReport {
    /// Total loss at entry and after every accepted step.
    pub loss_trace: Vec<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegistrationReport {
    pub mode: Mode,
    pub levels: Vec<LevelReport>,
    pub finetune: Option<FinetuneReport>,
    /// Objective of `mode` over all levels for the returned fields.
    pub final_loss: LossSummary,
    pub evaluation: Option<EvaluationReport>,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct RegistrationResult {
    /// Finest-level field; the only one used to warp the moving image.
    pub final_field: DisplacementField,
    /// Fields of every level, coarsest first.
    pub per_level_fields: Vec<DisplacementField>,
    pub warped: Volume,
    pub report: RegistrationReport,
}

fn level_ncc(data: &crate::objectives::LevelData, field: &DisplacementField, window: usize) -> f64 {
    let warped = crate::fields::warp::warp_unchecked(&data.moving, field);
    ncc_with_gradient(warped.data(), data.fixed.data(), field.dims(), window, false).0
}

fn add_fields(a: &DisplacementField, b: &DisplacementField) -> DisplacementField {
    compose_add(a, b).expect("matching dims")
}

fn jitter(dims: crate::grids::Dims, amplitude: f64, seed: u64) -> DisplacementField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DisplacementField::from_fn(dims, |_, _, _| {
        [(); 3].map(|_| amplitude * (2.0 * rng.random::<f64>() - 1.0))
    })
}

/// Register `moving` onto `fixed` coarse to fine.
///
/// Landmarks are required in train mode; in other modes they are only used to fill
/// the evaluation part of the report.
pub fn register(
    fixed: &Volume,
    moving: &Volume,
    landmarks: Option<(&LandmarkSet, &LandmarkSet)>,
    cfg: &EngineConfig,
) -> Result<RegistrationResult> {
    cfg.validate()?;
    let start = Instant::now();
    let obj = &cfg.objective;
    if fixed.dims() != moving.dims() {
        return Err(RegError::DimMismatch {
            left: fixed.dims().0,
            right: moving.dims().0,
        });
    }
    if obj.mode == Mode::Train && landmarks.is_none() {
        return Err(RegError::MissingLandmarks);
    }
    let pyramid = Pyramid::build(fixed, moving, landmarks, obj.level_count)?;

    let settings = DescentSettings {
        iters: cfg.iters_per_level,
        step: cfg.step_size,
        optimizer: cfg.optimizer,
        smoothing: cfg.grad_smoothing,
    };
    let mut fields: Vec<DisplacementField> = Vec::with_capacity(obj.level_count);
    let mut level_reports = Vec::with_capacity(obj.level_count);
    for level in 1..=obj.level_count {
        let level_start = Instant::now();
        let data = pyramid.level(level);
        let dims = data.fixed.dims();
        let base = match fields.last() {
            Some(prev) => upsample_field_to(prev, dims),
            None => DisplacementField::zeros(dims),
        };
        let ncc_promoted = level_ncc(data, &base, obj.window);
        let init = if level == 1 && cfg.init_jitter > 0.0 {
            jitter(dims, cfg.init_jitter, cfg.seed)
        } else {
            DisplacementField::zeros(dims)
        };
        let mut params = vec![init];
        let trace = descend(&mut params, &[1.0], &settings, |p, want| {
            let phi = add_fields(&base, &p[0]);
            let (loss, grad) = level_objective(data, &phi, obj, level, want);
            (loss.total, grad.map(|g| vec![g]))
        });
        let phi = add_fields(&base, &params[0]);
        level_reports.push(LevelReport {
            level,
            dims: dims.0,
            ncc_promoted,
            ncc_final: level_ncc(data, &phi, obj.window),
            loss_trace: trace.losses,
            accepted_steps: trace.accepted,
            rejected_steps: trace.rejected,
            elapsed: level_start.elapsed(),
        });
        fields.push(phi);
    }

    let final_field = fields.last().expect("at least one level").clone();
    let warped = warp_volume(moving, &final_field)?;
    let final_loss = total_loss(&pyramid, &fields, obj)?;
    let evaluation = match landmarks {
        Some((lf, lm)) => Some(evaluate(Some(&final_field), lf, lm, Some(fixed.spacing()))?),
        None => None,
    };
    Ok(RegistrationResult {
        final_field,
        per_level_fields: fields,
        warped,
        report: RegistrationReport {
            mode: obj.mode,
            levels: level_reports,
            finetune: None,
            final_loss,
            evaluation,
            elapsed: start.elapsed(),
        },
    })
}

/// Split `phi_i = up(phi_{i-1}) + delta_i` back into increments.
fn increments(fields: &[DisplacementField]) -> Vec<DisplacementField> {
    let mut out = Vec::with_capacity(fields.len());
    for (i, f) in fields.iter().enumerate() {
        if i == 0 {
            out.push(f.clone());
        } else {
            let up = upsample_field_to(&fields[i - 1], f.dims());
            out.push(add_fields(f, &up.scaled(-1.0)));
        }
    }
    out
}

fn compose_levels(deltas: &[DisplacementField]) -> Vec<DisplacementField> {
    let mut fields: Vec<DisplacementField> = Vec::with_capacity(deltas.len());
    for d in deltas {
        let phi = match fields.last() {
            Some(prev) => add_fields(&upsample_field_to(prev, d.dims()), d),
            None => d.clone(),
        };
        fields.push(phi);
    }
    fields
}

/// Pair-specific refinement: continue optimizing every level's increment jointly
/// under the similarity + regularization objective (no landmark term).
///
/// Steps are only kept when they lower that objective, so the returned fields never
/// score worse than the input. Landmarks, if given, only refresh the evaluation report.
pub fn finetune(
    result: &RegistrationResult,
    fixed: &Volume,
    moving: &Volume,
    landmarks: Option<(&LandmarkSet, &LandmarkSet)>,
    cfg: &EngineConfig,
) -> Result<RegistrationResult> {
    cfg.validate()?;
    if cfg.finetune_iters == 0 {
        return Ok(result.clone());
    }
    let start = Instant::now();
    let obj = ObjectiveConfig {
        mode: Mode::Finetune,
        ..cfg.objective.clone()
    };
    if result.per_level_fields.len() != obj.level_count {
        return Err(RegError::MissingLevel {
            expected: obj.level_count,
            got: result.per_level_fields.len(),
        });
    }
    let pyramid = Pyramid::build(fixed, moving, None, obj.level_count)?;
    for (data, f) in pyramid.levels().iter().zip(&result.per_level_fields) {
        f.check_dims(data.fixed.dims())?;
    }

    let count = obj.level_count;
    // a unit change of delta_k moves the finest field by up to 2^(L-k) voxels
    let reach: Vec<f64> = (1..=count).map(|k| 2f64.powi((count - k) as i32)).collect();
    let settings = DescentSettings {
        iters: cfg.finetune_iters,
        step: cfg.finetune_step,
        optimizer: cfg.optimizer,
        smoothing: cfg.grad_smoothing,
    };
    let mut deltas = increments(&result.per_level_fields);
    let trace = descend(&mut deltas, &reach, &settings, |d, want| {
        let fields = compose_levels(d);
        let mut total = 0.0;
        let mut grads = Vec::with_capacity(count);
        for (i, (data, phi)) in pyramid.levels().iter().zip(&fields).enumerate() {
            let (loss, g) = level_objective(data, phi, &obj, i + 1, want);
            total += loss.total;
            grads.push(g);
        }
        if !want {
            return (total, None);
        }
        // back-propagate through phi_i = up(phi_{i-1}) + delta_i, finest first
        let mut out: Vec<DisplacementField> = Vec::with_capacity(count);
        let mut carried: Option<DisplacementField> = None;
        for i in (0..count).rev() {
            let mut g = grads[i].take().expect("gradient requested");
            if let Some(c) = carried.take() {
                g = add_fields(&g, &upsample_adjoint(&c, g.dims()));
            }
            carried = Some(g.clone());
            out.push(g);
        }
        out.reverse();
        (total, Some(out))
    });

    let fields = compose_levels(&deltas);
    let final_field = fields.last().expect("at least one level").clone();
    let warped = warp_volume(moving, &final_field)?;
    let final_loss = total_loss(&pyramid, &fields, &obj)?;
    let evaluation = match landmarks {
        Some((lf, lm)) => Some(evaluate(Some(&final_field), lf, lm, Some(fixed.spacing()))?),
        None => None,
    };
    let mut report = result.report.clone();
    report.finetune = Some(FinetuneReport {
        loss_trace: trace.losses,
        accepted_steps: trace.accepted,
        rejected_steps: trace.rejected,
        elapsed: start.elapsed(),
    });
    report.final_loss = final_loss;
    report.mode = Mode::Finetune;
    report.evaluation = evaluation.or(report.evaluation);
    report.elapsed += start.elapsed();
    Ok(RegistrationResult {
        final_field,
        per_level_fields: fields,
        warped,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::njd_count;
    use crate::io::synth::{synth_pair, SynthPair, SynthSpec};

    fn small_pair(max_disp: f64, seed: u64) -> SynthPair {
        synth_pair(&SynthSpec {
            dims: [18, 24, 20],
            max_disp,
            landmarks: 10,
            seed,
        })
        .unwrap()
    }

    fn quick() -> EngineConfig {
        EngineConfig {
            iters_per_level: 30,
            finetune_iters: 10,
            ..EngineConfig::default()
        }
    }

    #[test]
    fn identical_images_stay_at_identity() {
        let p = small_pair(0.0, 1);
        let r = register(&p.fixed, &p.moving, None, &quick()).unwrap();
        assert!(r.final_field.max_norm() < 0.1);
        assert_eq!(njd_count(&r.final_field), 0);
    }

    #[test]
    fn level_ncc_never_worse_than_promoted_field() {
        let p = small_pair(2.5, 4);
        let lm = Some((&p.fixed_landmarks, &p.moving_landmarks));
        for mode in [Mode::Pretrain, Mode::Train, Mode::Finetune] {
            let mut cfg = quick();
            cfg.objective.mode = mode;
            let r = register(&p.fixed, &p.moving, lm, &cfg).unwrap();
            for l in &r.report.levels {
                assert!(l.ncc_final >= l.ncc_promoted, "{mode} level {}: {l:?}", l.level);
                assert!(l.loss_trace.windows(2).all(|w| w[1] < w[0]));
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let p = small_pair(2.0, 2);
        let cfg = EngineConfig {
            init_jitter: 0.2,
            seed: 5,
            ..quick()
        };
        let a = register(&p.fixed, &p.moving, None, &cfg).unwrap();
        let b = register(&p.fixed, &p.moving, None, &cfg).unwrap();
        assert_eq!(a.final_field, b.final_field);
        let c = register(&p.fixed, &p.moving, None, &EngineConfig { seed: 6, ..cfg }).unwrap();
        assert_ne!(a.final_field, c.final_field);
    }

    #[test]
    fn finetune_zero_iterations_is_identity() {
        let p = small_pair(2.0, 3);
        let r = register(&p.fixed, &p.moving, None, &quick()).unwrap();
        let cfg = EngineConfig {
            finetune_iters: 0,
            ..quick()
        };
        let same = finetune(&r, &p.fixed, &p.moving, None, &cfg).unwrap();
        assert_eq!(same.final_field, r.final_field);
        assert_eq!(same.per_level_fields, r.per_level_fields);
    }

    #[test]
    fn finetune_trace_is_non_increasing() {
        let p = small_pair(2.0, 7);
        let lm = Some((&p.fixed_landmarks, &p.moving_landmarks));
        let mut cfg = quick();
        cfg.objective.mode = Mode::Train;
        let r = register(&p.fixed, &p.moving, lm, &cfg).unwrap();
        let ft = finetune(&r, &p.fixed, &p.moving, lm, &cfg).unwrap();
        let trace = &ft.report.finetune.as_ref().unwrap().loss_trace;
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        let pyr = Pyramid::build(&p.fixed, &p.moving, None, 4).unwrap();
        let obj = ObjectiveConfig {
            mode: Mode::Finetune,
            ..cfg.objective.clone()
        };
        let entry = total_loss(&pyr, &r.per_level_fields, &obj).unwrap().total;
        let exit = total_loss(&pyr, &ft.per_level_fields, &obj).unwrap().total;
        assert!(exit <= entry);
        assert!((trace[0] - entry).abs() < 1e-9);
    }

    #[test]
    fn reported_level_losses_use_the_level_schedule() {
        let p = small_pair(2.0, 8);
        let lm = Some((&p.fixed_landmarks, &p.moving_landmarks));
        let mut cfg = quick();
        cfg.objective.mode = Mode::Train;
        let r = register(&p.fixed, &p.moving, lm, &cfg).unwrap();
        let o = &cfg.objective;
        let weights = [0.125, 0.25, 0.5, 1.0];
        let lm_weights = [8.0, 4.0, 2.0, 1.0];
        for (l, f) in r.report.final_loss.levels.iter().zip(&r.per_level_fields) {
            let i = l.level - 1;
            assert_eq!(o.level_weight(l.level), weights[i]);
            assert_eq!(o.landmark_weight(l.level), lm_weights[i]);
            let voxels = f.dims().len() as f64;
            let expected = -weights[i] * l.ncc_term
                + o.mu * lm_weights[i] * l.weak_term
                + o.sigma * weights[i] / voxels * (o.lambda * l.jd_term + l.l2_term);
            assert!((l.total - expected).abs() < 1e-12, "level {}", l.level);
        }
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let p = small_pair(1.0, 1);
        let other = Volume::zeros([18, 24, 21]);
        assert!(matches!(
            register(&p.fixed, &other, None, &quick()),
            Err(RegError::DimMismatch { .. })
        ));
        let mut cfg = quick();
        cfg.objective.mode = Mode::Train;
        assert!(matches!(
            register(&p.fixed, &p.moving, None, &cfg),
            Err(RegError::MissingLandmarks)
        ));
        let tiny = Volume::zeros([4, 4, 4]);
        assert!(matches!(
            register(&tiny, &tiny, None, &quick()),
            Err(RegError::PyramidTooDeep { .. })
        ));
    }

    #[test]
    fn increments_roundtrip() {
        let fields = vec![
            DisplacementField::from_fn([3, 3, 3], |x, y, z| [x as f64 * 0.1, y as f64, -(z as f64)]),
            DisplacementField::from_fn([5, 5, 5], |x, _, _| [0.2, x as f64 * 0.05, 0.0]),
        ];
        let back = compose_levels(&increments(&fields));
        for (a, b) in fields.iter().zip(&back) {
            for (u, v) in a.vectors().iter().zip(b.vectors()) {
                for c in 0..3 {
                    assert!((u[c] - v[c]).abs() < 1e-12);
                }
            }
        }
    }
}
