//! Landmark and field quality metrics.
//!
//! "MAE" here is the mean Euclidean distance between corresponding landmarks
//! (target registration error), reported in voxel units unless spacing is supplied.

use serde::Serialize;

use crate::error::{RegError, Result};
use crate::fields::{jacobian_determinant, warp_landmarks, DisplacementField};
use crate::grids::LandmarkSet;

fn distance(a: [f64; 3], b: [f64; 3], spacing: [f64; 3]) -> f64 {
    (0..3)
        .map(|c| ((a[c] - b[c]) * spacing[c]).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn distances(a: &LandmarkSet, b: &LandmarkSet, spacing: [f64; 3]) -> Result<Vec<f64>> {
    a.check_paired(b)?;
    Ok(a.coords()
        .zip(b.coords())
        .map(|(p, q)| distance(p, q, spacing))
        .collect())
}

/// Mean Euclidean distance between paired landmarks.
pub fn mae(a: &LandmarkSet, b: &LandmarkSet) -> Result<f64> {
    let d = distances(a, b, [1.0; 3])?;
    if d.is_empty() {
        return Ok(0.0);
    }
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}

/// Fraction of landmarks whose error strictly decreased.
pub fn robustness(before: &[f64], after: &[f64]) -> Result<f64> {
    if before.is_empty() {
        return Err(RegError::InvalidConfig(
            "robustness needs at least one landmark".into(),
        ));
    }
    if before.len() != after.len() {
        return Err(RegError::UnpairedLandmarks(format!(
            "{} errors before vs {} after",
            before.len(),
            after.len()
        )));
    }
    let improved = before.iter().zip(after).filter(|(b, a)| a < b).count();
    Ok(improved as f64 / before.len() as f64)
}

/// Number of voxels whose Jacobian determinant is `<= 0`.
pub fn njd_count(f: &DisplacementField) -> usize {
    jacobian_determinant(f)
        .data()
        .iter()
        .filter(|&&d| d <= 0.0)
        .count()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandmarkError {
    pub id: i64,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub mae_before: f64,
    pub mae: f64,
    pub robustness: f64,
    pub njd: usize,
    pub units: &'static str,
    /// MAE after registration in millimetres, when voxel spacing is known.
    pub mae_mm: Option<f64>,
    pub per_landmark_errors: Vec<LandmarkError>,
}

/// Compare landmark errors before and after pushing the fixed landmarks through `field`.
/// `None` for the field means the identity transform.
pub fn evaluate(
    field: Option<&DisplacementField>,
    fixed: &LandmarkSet,
    moving: &LandmarkSet,
    spacing: Option<[f64; 3]>,
) -> Result<EvaluationReport> {
    let before = distances(fixed, moving, [1.0; 3])?;
    let warped = match field {
        Some(f) => warp_landmarks(f, fixed),
        None => fixed.clone(),
    };
    let after = distances(&warped, moving, [1.0; 3])?;
    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let mae_mm = match spacing {
        Some(s) => Some(mean(&distances(&warped, moving, s)?)),
        None => None,
    };
    Ok(EvaluationReport {
        mae_before: mean(&before),
        mae: mean(&after),
        robustness: if before.is_empty() {
            0.0
        } else {
            robustness(&before, &after)?
        },
        njd: field.map_or(0, njd_count),
        units: "voxel",
        mae_mm,
        per_landmark_errors: fixed
            .points()
            .iter()
            .zip(before.iter().zip(&after))
            .map(|(p, (&b, &a))| LandmarkError {
                id: p.id,
                before: b,
                after: a,
            })
            .collect(),
    })
}
