use super::field::DisplacementField;
use crate::grids::{Dims, Volume};

/// Finite-difference stencil along one axis: derivative = `coef * (v[hi] - v[lo])`.
///
/// Central in the interior, one-sided on the two faces, `None` on a single-voxel axis.
#[inline]
pub(crate) fn diff_stencil(pos: usize, n: usize) -> Option<(usize, usize, f64)> {
    if n < 2 {
        None
    } else if pos == 0 {
        Some((0, 1, 1.0))
    } else if pos == n - 1 {
        Some((n - 2, n - 1, 1.0))
    } else {
        Some((pos - 1, pos + 1, 0.5))
    }
}

/// Spatial derivatives `J[i][j] = d f_i / d x_j` at voxel `idx`.
#[inline]
pub(crate) fn displacement_gradient(f: &DisplacementField, idx: usize) -> [[f64; 3]; 3] {
    let dims = f.dims();
    let pos = dims.coords(idx);
    let v = f.vectors();
    let mut j = [[0.0; 3]; 3];
    for axis in 0..3 {
        if let Some((lo, hi, coef)) = diff_stencil(pos[axis], dims.0[axis]) {
            let stride = dims.stride(axis);
            let base = idx - pos[axis] * stride;
            let a = v[base + lo * stride];
            let b = v[base + hi * stride];
            for (i, row) in j.iter_mut().enumerate() {
                row[axis] = coef * (b[i] - a[i]);
            }
        }
    }
    j
}

#[inline]
pub(crate) fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Cofactor matrix, `C[i][j] = d det / d m[i][j]`.
#[inline]
pub(crate) fn cofactors(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    [
        [
            m[1][1] * m[2][2] - m[1][2] * m[2][1],
            m[1][2] * m[2][0] - m[1][0] * m[2][2],
            m[1][0] * m[2][1] - m[1][1] * m[2][0],
        ],
        [
            m[0][2] * m[2][1] - m[0][1] * m[2][2],
            m[0][0] * m[2][2] - m[0][2] * m[2][0],
            m[0][1] * m[2][0] - m[0][0] * m[2][1],
        ],
        [
            m[0][1] * m[1][2] - m[0][2] * m[1][1],
            m[0][2] * m[1][0] - m[0][0] * m[1][2],
            m[0][0] * m[1][1] - m[0][1] * m[1][0],
        ],
    ]
}

#[inline]
pub(crate) fn deformation_gradient(f: &DisplacementField, idx: usize) -> [[f64; 3]; 3] {
    let mut m = displacement_gradient(f, idx);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] += 1.0;
    }
    m
}

/// `det(I + grad f)` at every voxel.
pub fn jacobian_determinant(f: &DisplacementField) -> Volume {
    let dims: Dims = f.dims();
    let data = (0..dims.len())
        .map(|i| det3(&deformation_gradient(f, i)))
        .collect();
    Volume::from_parts_unchecked(dims, data, [1.0; 3])
}
