use super::field::DisplacementField;
use crate::error::{RegError, Result};
use crate::grids::{interp, LandmarkSet, Stencil, Volume};

/// Pull-back warp: `out(p) = v(p + f(p))`, trilinear with border clamping.
pub fn warp_volume(v: &Volume, f: &DisplacementField) -> Result<Volume> {
    f.check_dims(v.dims())?;
    Ok(warp_unchecked(v, f))
}

pub(crate) fn warp_unchecked(v: &Volume, f: &DisplacementField) -> Volume {
    let dims = v.dims();
    let data = f
        .vectors()
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let [x, y, z] = dims.coords(i);
            interp::sample(
                v.data(),
                dims,
                [x as f64 + d[0], y as f64 + d[1], z as f64 + d[2]],
            )
        })
        .collect();
    Volume::from_parts_unchecked(dims, data, v.spacing())
}

/// Warped intensities together with the moving-image gradient at each sample point.
pub(crate) fn warp_with_gradient(v: &Volume, f: &DisplacementField) -> (Vec<f64>, Vec<[f64; 3]>) {
    let dims = v.dims();
    f.vectors()
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let [x, y, z] = dims.coords(i);
            interp::sample_with_gradient(
                v.data(),
                dims,
                [x as f64 + d[0], y as f64 + d[1], z as f64 + d[2]],
            )
        })
        .unzip()
}

/// Trilinearly interpolated displacement at a continuous point.
pub fn interpolate_vector(f: &DisplacementField, p: [f64; 3]) -> [f64; 3] {
    let s = Stencil::at(f.dims(), p);
    let mut out = [0.0; 3];
    for k in 0..8 {
        let v = f.vectors()[s.idx[k]];
        for c in 0..3 {
            out[c] += s.w[k] * v[c];
        }
    }
    out
}

/// Push each fixed-space landmark through the field: `p + F(p)`.
pub fn warp_landmarks(f: &DisplacementField, fixed: &LandmarkSet) -> LandmarkSet {
    fixed.map_coords(|p| {
        let d = interpolate_vector(f, p);
        [p[0] + d[0], p[1] + d[1], p[2] + d[2]]
    })
}

/// Like [`warp_landmarks`] but rejects non-finite coordinates.
pub fn try_warp_landmarks(f: &DisplacementField, fixed: &LandmarkSet) -> Result<LandmarkSet> {
    if fixed.coords().flatten().any(|c| !c.is_finite()) {
        return Err(RegError::NonFinite("landmark coordinate"));
    }
    Ok(warp_landmarks(f, fixed))
}
