//! Windowed normalized cross-correlation and its derivative.
//!
//! Each voxel's window is the `w^3` cube around it, truncated at the grid border.
//! Windows whose variance falls below [`VARIANCE_FLOOR`] in either image score 0.

use crate::error::{RegError, Result};
use crate::grids::{Dims, Volume};

pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Sum over the truncated `(2r+1)`-wide window along each axis.
pub(crate) fn box_sum(data: &[f64], dims: Dims, r: usize) -> Vec<f64> {
    let mut cur = data.to_vec();
    let mut prefix = Vec::new();
    for axis in 0..3 {
        let n = dims.0[axis];
        if n == 1 {
            continue;
        }
        let stride = dims.stride(axis);
        let mut next = vec![0.0; cur.len()];
        for start in 0..cur.len() {
            if dims.coords(start)[axis] != 0 {
                continue;
            }
            prefix.clear();
            prefix.push(0.0);
            let mut acc = 0.0;
            for k in 0..n {
                acc += cur[start + k * stride];
                prefix.push(acc);
            }
            for k in 0..n {
                let lo = k.saturating_sub(r);
                let hi = (k + r).min(n - 1);
                next[start + k * stride] = prefix[hi + 1] - prefix[lo];
            }
        }
        cur = next;
    }
    cur
}

fn axis_count(pos: usize, n: usize, r: usize) -> f64 {
    ((pos + r).min(n - 1) - pos.saturating_sub(r) + 1) as f64
}

/// NCC value and, optionally, `d NCC / d a` at every voxel.
pub(crate) fn ncc_with_gradient(
    a: &[f64],
    b: &[f64],
    dims: Dims,
    window: usize,
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    let r = window / 2;
    let len = dims.len();
    let sq = |v: &[f64]| v.iter().map(|x| x * x).collect::<Vec<_>>();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let sa = box_sum(a, dims, r);
    let sb = box_sum(b, dims, r);
    let saa = box_sum(&sq(a), dims, r);
    let sbb = box_sum(&sq(b), dims, r);
    let sab = box_sum(&ab, dims, r);

    let mut total = 0.0;
    let (mut alpha, mut beta, mut gamma) = if want_grad {
        (vec![0.0; len], vec![0.0; len], vec![0.0; len])
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };
    for i in 0..len {
        let [x, y, z] = dims.coords(i);
        let n = axis_count(x, dims.nx(), r) * axis_count(y, dims.ny(), r) * axis_count(z, dims.nz(), r);
        let ma = sa[i] / n;
        let mb = sb[i] / n;
        let va = saa[i] - sa[i] * ma;
        let vb = sbb[i] - sb[i] * mb;
        if va / n < VARIANCE_FLOOR || vb / n < VARIANCE_FLOOR {
            continue;
        }
        let cross = sab[i] - sa[i] * mb;
        let denom = (va * vb).sqrt();
        total += (cross / denom).clamp(-1.0, 1.0);
        if want_grad {
            let al = 1.0 / denom;
            let be = cross / (va * denom);
            alpha[i] = al;
            beta[i] = be;
            gamma[i] = be * ma - al * mb;
        }
    }
    let inv_n = 1.0 / len as f64;
    let value = total * inv_n;
    if !want_grad {
        return (value, None);
    }
    let sal = box_sum(&alpha, dims, r);
    let sbe = box_sum(&beta, dims, r);
    let sga = box_sum(&gamma, dims, r);
    let grad = (0..len)
        .map(|q| (b[q] * sal[q] - a[q] * sbe[q] + sga[q]) * inv_n)
        .collect();
    (value, Some(grad))
}

/// Mean windowed NCC between two volumes, in `[-1, 1]`.
pub fn local_ncc(a: &Volume, b: &Volume, window: usize) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(RegError::DimMismatch {
            left: a.dims().0,
            right: b.dims().0,
        });
    }
    if window == 0 || window.is_multiple_of(2) {
        return Err(RegError::InvalidConfig(format!(
            "NCC window must be odd, got {window}"
        )));
    }
    Ok(ncc_with_gradient(a.data(), b.data(), a.dims(), window, false).0)
}

/// Deep self-supervised similarity loss: `-sum_i 2^-(L-i) NCC(warped_i, fixed_i)`.
///
/// Slices are ordered coarsest first and must hold exactly `level_count` levels.
pub fn self_loss(warped: &[Volume], fixed: &[Volume], window: usize, level_count: usize) -> Result<f64> {
    if warped.len() != level_count || fixed.len() != level_count {
        return Err(RegError::MissingLevel {
            expected: level_count,
            got: warped.len().min(fixed.len()),
        });
    }
    let mut loss = 0.0;
    for (i, (w, f)) in warped.iter().zip(fixed).enumerate() {
        let weight = 0.5f64.powi((level_count - 1 - i) as i32);
        loss -= weight * local_ncc(w, f, window)?;
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(dims: [usize; 3]) -> Volume {
        Volume::from_fn(dims, |x, y, z| {
            (x as f64 * 1.3).sin() + (y as f64 * 0.7 + z as f64).cos() * 0.5 + (x * y % 5) as f64 * 0.1
        })
    }

    #[test]
    fn box_sum_matches_brute_force() {
        let d = Dims::new(5, 4, 6);
        let v: Vec<f64> = (0..d.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        for r in [1, 2] {
            let fast = box_sum(&v, d, r);
            for i in 0..d.len() {
                let [x, y, z] = d.coords(i);
                let mut acc = 0.0;
                for zz in z.saturating_sub(r)..=(z + r).min(d.nz() - 1) {
                    for yy in y.saturating_sub(r)..=(y + r).min(d.ny() - 1) {
                        for xx in x.saturating_sub(r)..=(x + r).min(d.nx() - 1) {
                            acc += v[d.index(xx, yy, zz)];
                        }
                    }
                }
                assert!((acc - fast[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn self_correlation_is_one() {
        let a = textured([6, 5, 4]);
        assert!((local_ncc(&a, &a, 3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn affine_invariance() {
        let a = textured([6, 5, 4]);
        let b = Volume::from_vec(a.dims(), a.data().iter().map(|v| 2.0 * v + 3.0).collect());
        assert!((local_ncc(&a, &b, 3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn anticorrelation() {
        let a = textured([6, 5, 4]);
        let b = Volume::from_vec(a.dims(), a.data().iter().map(|v| -v).collect());
        assert!((local_ncc(&a, &b, 3).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_windows_score_zero() {
        let a = Volume::zeros([4, 4, 4]);
        let b = textured([4, 4, 4]);
        assert_eq!(local_ncc(&a, &b, 3).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_dims() {
        assert!(local_ncc(&Volume::zeros([2, 2, 2]), &Volume::zeros([2, 2, 3]), 3).is_err());
    }

    #[test]
    fn self_loss_weights() {
        let a = textured([6, 6, 6]);
        let flat = Volume::zeros([6, 6, 6]);
        let levels = vec![a.clone(); 4];
        assert!((self_loss(&levels, &levels, 3, 4).unwrap() + 1.875).abs() < 1e-12);

        let warped = vec![flat.clone(), flat.clone(), flat.clone(), a.clone()];
        let fixed = vec![a.clone(), a.clone(), a.clone(), a.clone()];
        assert!((self_loss(&warped, &fixed, 3, 4).unwrap() + 1.0).abs() < 1e-12);

        let none = vec![flat.clone(); 4];
        assert_eq!(self_loss(&none, &fixed, 3, 4).unwrap(), 0.0);

        assert!(matches!(
            self_loss(&levels[..3], &levels[..3], 3, 4),
            Err(RegError::MissingLevel { .. })
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = Dims::new(5, 4, 5);
        let a: Vec<f64> = (0..d.len()).map(|i| (i as f64 * 0.71).sin() + 0.1 * i as f64).collect();
        let b: Vec<f64> = (0..d.len()).map(|i| (i as f64 * 0.29).cos()).collect();
        let (_, g) = ncc_with_gradient(&a, &b, d, 3, true);
        let g = g.unwrap();
        let h = 1e-6;
        for q in [0, 7, 33, d.len() - 1] {
            let mut hi = a.clone();
            let mut lo = a.clone();
            hi[q] += h;
            lo[q] -= h;
            let fd = (ncc_with_gradient(&hi, &b, d, 3, false).0 - ncc_with_gradient(&lo, &b, d, 3, false).0)
                / (2.0 * h);
            assert!((fd - g[q]).abs() < 1e-8 * (1.0 + fd.abs()), "{q}: {fd} vs {}", g[q]);
        }
    }
}
