use crate::fields::jacobian::{cofactors, deformation_gradient, det3, diff_stencil};
use crate::fields::DisplacementField;

/// Sum over voxels of squared forward differences of every component.
/// Differences that would leave the grid are dropped.
pub fn l2_grad_reg(f: &DisplacementField) -> f64 {
    let dims = f.dims();
    let v = f.vectors();
    let mut acc = 0.0;
    for i in 0..dims.len() {
        let pos = dims.coords(i);
        for axis in 0..3 {
            if pos[axis] + 1 < dims.0[axis] {
                let n = v[i + dims.stride(axis)];
                for c in 0..3 {
                    let d = n[c] - v[i][c];
                    acc += d * d;
                }
            }
        }
    }
    acc
}

/// Adds `scale * d l2_grad_reg / d f` into `out`.
pub(crate) fn l2_grad_reg_gradient(f: &DisplacementField, scale: f64, out: &mut [[f64; 3]]) {
    let dims = f.dims();
    let v = f.vectors();
    for i in 0..dims.len() {
        let pos = dims.coords(i);
        for axis in 0..3 {
            if pos[axis] + 1 < dims.0[axis] {
                let j = i + dims.stride(axis);
                for c in 0..3 {
                    let d = 2.0 * scale * (v[j][c] - v[i][c]);
                    out[j][c] += d;
                    out[i][c] -= d;
                }
            }
        }
    }
}

/// Hinge on negative Jacobian determinants: `sum_p max(0, -det(I + grad f))`.
pub fn njd_penalty(f: &DisplacementField) -> f64 {
    (0..f.dims().len())
        .map(|i| (-det3(&deformation_gradient(f, i))).max(0.0))
        .sum()
}

/// Adds `scale * d njd_penalty / d f` into `out` (subgradient 0 where det = 0).
pub(crate) fn njd_penalty_gradient(f: &DisplacementField, scale: f64, out: &mut [[f64; 3]]) {
    let dims = f.dims();
    for i in 0..dims.len() {
        let m = deformation_gradient(f, i);
        if det3(&m) >= 0.0 {
            continue;
        }
        let cof = cofactors(&m);
        let pos = dims.coords(i);
        for axis in 0..3 {
            let Some((lo, hi, coef)) = diff_stencil(pos[axis], dims.0[axis]) else {
                continue;
            };
            let stride = dims.stride(axis);
            let base = i - pos[axis] * stride;
            for comp in 0..3 {
                // d(-det)/d f_comp[hi] = -C[comp][axis] * coef
                let g = scale * cof[comp][axis] * coef;
                out[base + hi * stride][comp] -= g;
                out[base + lo * stride][comp] += g;
            }
        }
    }
}

/// Level-weighted smoothness plus folding penalty, literal sums over voxels.
///
/// `fields` are ordered coarsest first; level `i` of `L` carries weight `1 / 2^(L-i)`.
pub fn reg_loss(fields: &[DisplacementField], lambda: f64) -> f64 {
    let count = fields.len();
    fields
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let w = 0.5f64.powi((count - 1 - i) as i32);
            w * (lambda * njd_penalty(f) + l2_grad_reg(f))
        })
        .sum()
}
