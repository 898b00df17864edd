use std::ops::Range;

use crate::error::{RegError, Result};

/// Grid extent in voxels, ordered `[x, y, z]`.
///
/// Memory order is x-fastest: voxel `(x, y, z)` lives at `x + nx * (y + ny * z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims(pub [usize; 3]);

impl Dims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Dims([nx, ny, nz])
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.0[0]
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.0[1]
    }

    #[inline]
    pub fn nz(&self) -> usize {
        self.0[2]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0[0] * self.0[1] * self.0[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.0[0] * (y + self.0[1] * z)
    }

    #[inline]
    pub fn coords(&self, i: usize) -> [usize; 3] {
        let x = i % self.0[0];
        let r = i / self.0[0];
        [x, r % self.0[1], r / self.0[1]]
    }

    /// Linear-index stride along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.0[0],
            _ => self.0[0] * self.0[1],
        }
    }
}

impl From<[usize; 3]> for Dims {
    fn from(d: [usize; 3]) -> Self {
        Dims(d)
    }
}

/// A 3D scalar image.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: Dims,
    data: Vec<f64>,
    spacing: [f64; 3],
}

impl Volume {
    pub fn new(dims: impl Into<Dims>, data: Vec<f64>, spacing: [f64; 3]) -> Result<Self> {
        let dims = dims.into();
        if dims.0.contains(&0) {
            return Err(RegError::InvalidVolume(format!(
                "dims must be positive, got {:?}",
                dims.0
            )));
        }
        if data.len() != dims.len() {
            return Err(RegError::InvalidVolume(format!(
                "data length {} does not match dims {:?}",
                data.len(),
                dims.0
            )));
        }
        if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(RegError::InvalidVolume(format!(
                "spacing must be positive, got {spacing:?}"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(RegError::NonFinite("volume data"));
        }
        Ok(Volume {
            dims,
            data,
            spacing,
        })
    }

    /// Unit-spacing volume; panics on invalid input. Handy for tests and synthetic data.
    pub fn from_vec(dims: impl Into<Dims>, data: Vec<f64>) -> Self {
        Self::new(dims, data, [1.0; 3]).expect("invalid volume")
    }

    pub fn zeros(dims: impl Into<Dims>) -> Self {
        let dims = dims.into();
        Self::from_vec(dims, vec![0.0; dims.len()])
    }

    pub fn from_fn(dims: impl Into<Dims>, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let dims = dims.into();
        let mut data = Vec::with_capacity(dims.len());
        for z in 0..dims.nz() {
            for y in 0..dims.ny() {
                for x in 0..dims.nx() {
                    data.push(f(x, y, z));
                }
            }
        }
        Self::from_vec(dims, data)
    }

    pub(crate) fn from_parts_unchecked(dims: Dims, data: Vec<f64>, spacing: [f64; 3]) -> Self {
        debug_assert_eq!(data.len(), dims.len());
        Volume {
            dims,
            data,
            spacing,
        }
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn with_spacing(mut self, spacing: [f64; 3]) -> Self {
        self.spacing = spacing;
        self
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.data[self.dims.index(x, y, z)]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Extract `region` from `v`; voxels outside the source are zero.
///
/// Ranges are half-open and may start below zero or end past the source extent.
pub fn crop_pad(v: &Volume, region: [Range<i64>; 3]) -> Result<Volume> {
    for (axis, r) in region.iter().enumerate() {
        if r.end <= r.start {
            return Err(RegError::DegenerateRegion {
                axis,
                start: r.start,
                end: r.end,
            });
        }
    }
    let out_dims = Dims([
        (region[0].end - region[0].start) as usize,
        (region[1].end - region[1].start) as usize,
        (region[2].end - region[2].start) as usize,
    ]);
    let src = v.dims();
    let inside = |c: i64, axis: usize| c >= 0 && (c as usize) < src.0[axis];
    let mut data = vec![0.0; out_dims.len()];
    for z in 0..out_dims.nz() {
        let sz = region[2].start + z as i64;
        if !inside(sz, 2) {
            continue;
        }
        for y in 0..out_dims.ny() {
            let sy = region[1].start + y as i64;
            if !inside(sy, 1) {
                continue;
            }
            for x in 0..out_dims.nx() {
                let sx = region[0].start + x as i64;
                if inside(sx, 0) {
                    data[out_dims.index(x, y, z)] = v.get(sx as usize, sy as usize, sz as usize);
                }
            }
        }
    }
    Ok(Volume::from_parts_unchecked(out_dims, data, v.spacing()))
}

/// Affine rescale to `[0, 1]`. A constant volume maps to all zeros.
pub fn minmax_normalize(v: &Volume) -> Volume {
    let (lo, hi) = v.min_max();
    let range = hi - lo;
    let data = if range > 0.0 {
        v.data().iter().map(|&x| (x - lo) / range).collect()
    } else {
        vec![0.0; v.data().len()]
    };
    Volume::from_parts_unchecked(v.dims(), data, v.spacing())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let d = Dims::new(3, 4, 5);
        for i in 0..d.len() {
            let [x, y, z] = d.coords(i);
            assert_eq!(d.index(x, y, z), i);
        }
        assert_eq!(d.index(1, 0, 0), 1);
        assert_eq!(d.index(0, 1, 0), 3);
        assert_eq!(d.index(0, 0, 1), 12);
    }

    #[test]
    fn rejects_bad_volumes() {
        assert!(Volume::new([2, 2, 2], vec![0.0; 7], [1.0; 3]).is_err());
        assert!(Volume::new([2, 2, 2], vec![f64::NAN; 8], [1.0; 3]).is_err());
        assert!(Volume::new([0, 2, 2], vec![], [1.0; 3]).is_err());
        assert!(Volume::new([1, 1, 1], vec![0.0], [0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn crop_pad_brats_region() {
        let v = Volume::from_fn([240, 240, 155], |x, y, z| (x + y + z) as f64 + 1.0);
        let out = crop_pad(&v, [48..192, 32..224, -5..155]).unwrap();
        assert_eq!(out.dims().0, [144, 192, 160]);
        for z in 0..5 {
            for y in (0..192).step_by(17) {
                for x in (0..144).step_by(13) {
                    assert_eq!(out.get(x, y, z), 0.0);
                }
            }
        }
        assert_eq!(out.get(0, 0, 5), v.get(48, 32, 0));
        assert_eq!(out.get(143, 191, 159), v.get(191, 223, 154));
    }

    #[test]
    fn crop_pad_full_extent_is_identity() {
        let v = Volume::from_fn([3, 4, 2], |x, y, z| (x * 7 + y * 3 + z) as f64);
        assert_eq!(crop_pad(&v, [0..3, 0..4, 0..2]).unwrap(), v);
    }

    #[test]
    fn crop_pad_zero_slab() {
        let v = Volume::from_vec([4, 4, 4], vec![1.0; 64]);
        let out = crop_pad(&v, [-1..3, 0..4, 0..4]).unwrap();
        assert_eq!(out.dims().0, [4, 4, 4]);
        for z in 0..4 {
            for y in 0..4 {
                assert_eq!(out.get(0, y, z), 0.0);
                for x in 1..4 {
                    assert_eq!(out.get(x, y, z), 1.0);
                }
            }
        }
    }

    #[test]
    fn crop_pad_degenerate() {
        let v = Volume::zeros([2, 2, 2]);
        assert!(matches!(
            crop_pad(&v, [0..2, 1..1, 0..2]),
            Err(RegError::DegenerateRegion { axis: 1, .. })
        ));
    }

    #[test]
    fn crop_pad_back_recovers_inbounds() {
        let v = Volume::from_fn([5, 4, 3], |x, y, z| (x * 100 + y * 10 + z) as f64);
        let padded = crop_pad(&v, [-2..7, -1..5, -3..4]).unwrap();
        let back = crop_pad(&padded, [2..7, 1..5, 3..6]).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn minmax_cases() {
        let v = Volume::from_vec([3, 1, 1], vec![2.0, 4.0, 6.0]);
        assert_eq!(minmax_normalize(&v).data(), &[0.0, 0.5, 1.0]);

        let unit = Volume::from_vec([3, 1, 1], vec![0.0, 0.25, 1.0]);
        assert_eq!(minmax_normalize(&unit), unit);

        let flat = Volume::from_vec([3, 1, 1], vec![5.0; 3]);
        assert_eq!(minmax_normalize(&flat).data(), &[0.0; 3]);
    }
}
