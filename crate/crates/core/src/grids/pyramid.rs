use super::interp;
use super::landmarks::LandmarkSet;
use super::volume::{Dims, Volume};
use crate::error::{RegError, Result};

/// Scale factor of pyramid level `level` (1-based, 1 is coarsest) out of `count`.
pub fn level_factor(level: usize, count: usize) -> f64 {
    0.5f64.powi((count - level) as i32)
}

/// Output extent for a resampling factor, rounding half up.
pub fn scaled_dims(dims: Dims, factor: f64) -> Dims {
    Dims(dims.0.map(|n| (n as f64 * factor).round() as usize))
}

/// Resample `v` onto a grid scaled by `factor`; output voxel `q` samples `v` at `q / factor`.
pub fn downsample_volume(v: &Volume, factor: f64) -> Result<Volume> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(RegError::InvalidConfig(format!(
            "downsample factor must lie in (0, 1], got {factor}"
        )));
    }
    if factor == 1.0 {
        return Ok(v.clone());
    }
    let out = scaled_dims(v.dims(), factor);
    if out.0.iter().any(|&n| n < 2) {
        return Err(RegError::PyramidTooDeep { dims: out.0 });
    }
    let inv = 1.0 / factor;
    let mut data = Vec::with_capacity(out.len());
    for z in 0..out.nz() {
        for y in 0..out.ny() {
            for x in 0..out.nx() {
                let p = [x as f64 * inv, y as f64 * inv, z as f64 * inv];
                data.push(interp::sample(v.data(), v.dims(), p));
            }
        }
    }
    let spacing = v.spacing().map(|s| s * inv);
    Ok(Volume::from_parts_unchecked(out, data, spacing))
}

pub fn downsample_landmarks(l: &LandmarkSet, factor: f64) -> LandmarkSet {
    l.map_coords(|c| c.map(|v| v * factor))
}
