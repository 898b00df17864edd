use crate::error::{RegError, Result};
use crate::fields::DisplacementField;

const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Voxel-wise weighted average `sum_k w_k f_k`.
///
/// Voxels where every member agrees keep that vector untouched, so averaging copies
/// of one field returns it bit for bit.
pub fn ensemble(fields: &[DisplacementField], weights: &[f64]) -> Result<DisplacementField> {
    let first = fields
        .first()
        .ok_or_else(|| RegError::InvalidConfig("ensemble needs at least one field".into()))?;
    if weights.len() != fields.len() {
        return Err(RegError::InvalidConfig(format!(
            "{} weights for {} fields",
            weights.len(),
            fields.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(RegError::NonFinite("ensemble weight"));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(RegError::WeightSum(sum));
    }
    for f in &fields[1..] {
        f.check_dims(first.dims())?;
    }

    let mut out = first.scaled(weights[0]);
    for (i, v) in out.vectors_mut().iter_mut().enumerate() {
        let base = first.vectors()[i];
        if fields[1..].iter().all(|f| f.vectors()[i] == base) {
            *v = base;
            continue;
        }
        for (f, &w) in fields[1..].iter().zip(&weights[1..]) {
            let u = f.vectors()[i];
            for c in 0..3 {
                v[c] += w * u[c];
            }
        }
    }
    Ok(out)
}

/// [`ensemble`] with equal weights.
pub fn ensemble_uniform(fields: &[DisplacementField]) -> Result<DisplacementField> {
    let n = fields.len().max(1);
    ensemble(fields, &vec![1.0 / n as f64; fields.len()])
}
