use super::field::DisplacementField;
use crate::error::{RegError, Result};
use crate::grids::{Dims, Stencil};

/// Double the grid along every axis and rescale displacements to the finer voxel units.
pub fn upsample_field(f: &DisplacementField) -> DisplacementField {
    upsample_field_to(f, Dims(f.dims().0.map(|n| 2 * n)))
}

/// Resample onto a grid one pyramid level finer with extent `target`.
///
/// Fine voxel `q` reads the coarse field at `q / 2` (the inverse of the pyramid's
/// coordinate map, so odd extents stay aligned) and the vector is multiplied by 2.
pub fn upsample_field_to(f: &DisplacementField, target: Dims) -> DisplacementField {
    let coarse = f.dims();
    let vectors = (0..target.len())
        .map(|i| {
            let [x, y, z] = target.coords(i);
            let s = Stencil::at(coarse, [x as f64 * 0.5, y as f64 * 0.5, z as f64 * 0.5]);
            let mut out = [0.0; 3];
            for k in 0..8 {
                let v = f.vectors()[s.idx[k]];
                for c in 0..3 {
                    out[c] += s.w[k] * v[c];
                }
            }
            out.map(|c| 2.0 * c)
        })
        .collect();
    DisplacementField::from_parts_unchecked(target, vectors)
}

/// Adjoint of [`upsample_field_to`]: maps a gradient on the fine grid back to the coarse grid.
pub(crate) fn upsample_adjoint(fine_grad: &DisplacementField, coarse: Dims) -> DisplacementField {
    let fine = fine_grad.dims();
    let mut out = vec![[0.0; 3]; coarse.len()];
    for (i, g) in fine_grad.vectors().iter().enumerate() {
        let [x, y, z] = fine.coords(i);
        let s = Stencil::at(coarse, [x as f64 * 0.5, y as f64 * 0.5, z as f64 * 0.5]);
        for k in 0..8 {
            let w = 2.0 * s.w[k];
            let slot = &mut out[s.idx[k]];
            for c in 0..3 {
                slot[c] += w * g[c];
            }
        }
    }
    DisplacementField::from_parts_unchecked(coarse, out)
}

/// Voxel-wise vector sum.
pub fn compose_add(
    coarse_upsampled: &DisplacementField,
    increment: &DisplacementField,
) -> Result<DisplacementField> {
    if coarse_upsampled.dims() != increment.dims() {
        return Err(RegError::DimMismatch {
            left: coarse_upsampled.dims().0,
            right: increment.dims().0,
        });
    }
    let vectors = coarse_upsampled
        .vectors()
        .iter()
        .zip(increment.vectors())
        .map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
        .collect();
    Ok(DisplacementField::from_parts_unchecked(
        coarse_upsampled.dims(),
        vectors,
    ))
}
