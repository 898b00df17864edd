use crate::error::{RegError, Result};
use crate::fields::{interpolate_vector, DisplacementField};
use crate::grids::{LandmarkSet, Stencil};

/// Mean squared distance between fixed landmarks pushed through `f` and their moving partners.
pub(crate) fn landmark_mse(f: &DisplacementField, fixed: &LandmarkSet, moving: &LandmarkSet) -> f64 {
    if fixed.is_empty() {
        return 0.0;
    }
    let total: f64 = fixed
        .coords()
        .zip(moving.coords())
        .map(|(p, m)| {
            let d = interpolate_vector(f, p);
            (0..3).map(|c| (p[c] + d[c] - m[c]).powi(2)).sum::<f64>()
        })
        .sum();
    total / fixed.len() as f64
}

/// Adds `scale * d landmark_mse / d f` into `out`.
pub(crate) fn landmark_mse_gradient(
    f: &DisplacementField,
    fixed: &LandmarkSet,
    moving: &LandmarkSet,
    scale: f64,
    out: &mut [[f64; 3]],
) {
    if fixed.is_empty() {
        return;
    }
    let k = 2.0 * scale / fixed.len() as f64;
    for (p, m) in fixed.coords().zip(moving.coords()) {
        let s = Stencil::at(f.dims(), p);
        let d = interpolate_vector(f, p);
        let resid = [p[0] + d[0] - m[0], p[1] + d[1] - m[1], p[2] + d[2] - m[2]];
        for corner in 0..8 {
            let w = k * s.w[corner];
            let slot = &mut out[s.idx[corner]];
            for c in 0..3 {
                slot[c] += w * resid[c];
            }
        }
    }
}

/// Deep weakly-supervised landmark loss: `sum_i 2^(L-i) MSE_i`, slices coarsest first.
pub fn weak_loss(
    fields: &[DisplacementField],
    fixed: &[LandmarkSet],
    moving: &[LandmarkSet],
) -> Result<f64> {
    let count = fields.len();
    if fixed.len() != count || moving.len() != count {
        return Err(RegError::MissingLevel {
            expected: count,
            got: fixed.len().min(moving.len()),
        });
    }
    let mut loss = 0.0;
    for (i, ((f, lf), lm)) in fields.iter().zip(fixed).zip(moving).enumerate() {
        lf.check_paired(lm)?;
        loss += 2f64.powi((count - 1 - i) as i32) * landmark_mse(f, lf, lm);
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::Landmark;

    fn levels(offset_level: Option<usize>) -> (Vec<DisplacementField>, Vec<LandmarkSet>, Vec<LandmarkSet>) {
        let fields = vec![DisplacementField::zeros([8, 8, 8]); 4];
        let lf = LandmarkSet::from_coords([[2.0, 3.0, 4.0]]);
        let mut fixed = Vec::new();
        let mut moving = Vec::new();
        for i in 0..4 {
            fixed.push(lf.clone());
            if Some(i) == offset_level {
                moving.push(lf.translated([3.0, 4.0, 0.0]));
            } else {
                moving.push(lf.clone());
            }
        }
        (fields, fixed, moving)
    }

    #[test]
    fn aligned_is_zero() {
        let (f, a, b) = levels(None);
        assert_eq!(weak_loss(&f, &a, &b).unwrap(), 0.0);
    }

    #[test]
    fn level_weighting() {
        let (f, a, b) = levels(Some(3));
        assert_eq!(weak_loss(&f, &a, &b).unwrap(), 25.0);
        let (f, a, b) = levels(Some(0));
        assert_eq!(weak_loss(&f, &a, &b).unwrap(), 200.0);
    }

    #[test]
    fn unpaired_ids() {
        let (f, a, mut b) = levels(None);
        b[2] = LandmarkSet::new(vec![Landmark {
            id: 9,
            coord: [2.0, 3.0, 4.0],
        }])
        .unwrap();
        assert!(matches!(weak_loss(&f, &a, &b), Err(RegError::UnpairedLandmarks(_))));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f = DisplacementField::from_fn([5, 4, 6], |x, y, z| {
            [0.1 * x as f64, (y as f64 * 0.5).sin(), -0.05 * (x * z) as f64]
        });
        let fixed = LandmarkSet::from_coords([[1.3, 2.2, 3.7], [3.9, 0.4, 1.1], [-0.5, 1.5, 5.5]]);
        let moving = LandmarkSet::from_coords([[2.0, 2.0, 3.0], [4.5, 1.0, 0.0], [0.0, 1.0, 5.0]]);
        let mut g = vec![[0.0; 3]; f.dims().len()];
        landmark_mse_gradient(&f, &fixed, &moving, 1.0, &mut g);
        let h = 1e-6;
        for i in 0..f.dims().len() {
            for c in 0..3 {
                let mut hi = f.clone();
                let mut lo = f.clone();
                hi.vectors_mut()[i][c] += h;
                lo.vectors_mut()[i][c] -= h;
                let fd = (landmark_mse(&hi, &fixed, &moving) - landmark_mse(&lo, &fixed, &moving)) / (2.0 * h);
                assert!((fd - g[i][c]).abs() < 1e-7);
            }
        }
    }
}
