//! Trilinear interpolation with border clamping.
//!
//! Coordinates outside `[0, n-1]` along an axis are clamped to the border, so
//! the interpolant is constant (zero derivative) in that direction outside the grid.

use super::volume::{Dims, Volume};
use crate::error::{RegError, Result};

#[derive(Debug, Clone, Copy)]
struct AxisCell {
    lo: usize,
    hi: usize,
    t: f64,
    /// False when the coordinate was clamped or the axis has a single voxel.
    active: bool,
}

#[inline]
fn axis_cell(c: f64, n: usize) -> AxisCell {
    if n == 1 {
        return AxisCell {
            lo: 0,
            hi: 0,
            t: 0.0,
            active: false,
        };
    }
    let max = (n - 1) as f64;
    let (cc, active) = if c < 0.0 {
        (0.0, false)
    } else if c > max {
        (max, false)
    } else {
        (c, true)
    };
    let lo = (cc.floor() as usize).min(n - 2);
    AxisCell {
        lo,
        hi: lo + 1,
        t: cc - lo as f64,
        active,
    }
}

/// The eight voxels and weights blended at a point. Corner `k` uses bit 0 for x,
/// bit 1 for y and bit 2 for z.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub idx: [usize; 8],
    pub w: [f64; 8],
}

impl Stencil {
    #[inline]
    pub fn at(dims: Dims, p: [f64; 3]) -> Stencil {
        let cx = axis_cell(p[0], dims.nx());
        let cy = axis_cell(p[1], dims.ny());
        let cz = axis_cell(p[2], dims.nz());
        let mut idx = [0usize; 8];
        let mut w = [0.0; 8];
        for k in 0..8 {
            let (x, wx) = if k & 1 == 0 { (cx.lo, 1.0 - cx.t) } else { (cx.hi, cx.t) };
            let (y, wy) = if k & 2 == 0 { (cy.lo, 1.0 - cy.t) } else { (cy.hi, cy.t) };
            let (z, wz) = if k & 4 == 0 { (cz.lo, 1.0 - cz.t) } else { (cz.hi, cz.t) };
            idx[k] = dims.index(x, y, z);
            w[k] = wx * wy * wz;
        }
        Stencil { idx, w }
    }

    #[inline]
    pub fn apply(&self, data: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..8 {
            acc += self.w[k] * data[self.idx[k]];
        }
        acc
    }
}

/// Trilinear value at `p`, no finiteness check. Nested lerps keep constants exact.
#[inline]
pub fn sample(data: &[f64], dims: Dims, p: [f64; 3]) -> f64 {
    let cx = axis_cell(p[0], dims.nx());
    let cy = axis_cell(p[1], dims.ny());
    let cz = axis_cell(p[2], dims.nz());
    let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);
    let row = |y: usize, z: usize| {
        lerp(
            data[dims.index(cx.lo, y, z)],
            data[dims.index(cx.hi, y, z)],
            cx.t,
        )
    };
    let c0 = lerp(row(cy.lo, cz.lo), row(cy.hi, cz.lo), cy.t);
    let c1 = lerp(row(cy.lo, cz.hi), row(cy.hi, cz.hi), cy.t);
    lerp(c0, c1, cz.t)
}

/// Trilinear value and its derivative with respect to the sample position.
///
/// On a lattice plane the derivative is taken from the cell above it (below at the
/// last voxel); clamped directions have zero derivative.
#[inline]
pub fn sample_with_gradient(data: &[f64], dims: Dims, p: [f64; 3]) -> (f64, [f64; 3]) {
    let c = [
        axis_cell(p[0], dims.nx()),
        axis_cell(p[1], dims.ny()),
        axis_cell(p[2], dims.nz()),
    ];
    let mut v = [0.0; 8];
    for (k, slot) in v.iter_mut().enumerate() {
        let x = if k & 1 == 0 { c[0].lo } else { c[0].hi };
        let y = if k & 2 == 0 { c[1].lo } else { c[1].hi };
        let z = if k & 4 == 0 { c[2].lo } else { c[2].hi };
        *slot = data[dims.index(x, y, z)];
    }
    let (tx, ty, tz) = (c[0].t, c[1].t, c[2].t);
    let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);

    // collapse x
    let c00 = lerp(v[0], v[1], tx);
    let c10 = lerp(v[2], v[3], tx);
    let c01 = lerp(v[4], v[5], tx);
    let c11 = lerp(v[6], v[7], tx);
    let c0 = lerp(c00, c10, ty);
    let c1 = lerp(c01, c11, ty);
    let value = lerp(c0, c1, tz);

    let gx = if c[0].active {
        let d00 = v[1] - v[0];
        let d10 = v[3] - v[2];
        let d01 = v[5] - v[4];
        let d11 = v[7] - v[6];
        lerp(lerp(d00, d10, ty), lerp(d01, d11, ty), tz)
    } else {
        0.0
    };
    let gy = if c[1].active {
        lerp(c10 - c00, c11 - c01, tz)
    } else {
        0.0
    };
    let gz = if c[2].active { c1 - c0 } else { 0.0 };
    (value, [gx, gy, gz])
}

/// Trilinear sample of `v` at continuous voxel coordinates `p`, clamping to the border.
pub fn trilinear_sample(v: &Volume, p: [f64; 3]) -> Result<f64> {
    if p.iter().any(|c| !c.is_finite()) {
        return Err(RegError::NonFinite("sample coordinate"));
    }
    Ok(sample(v.data(), v.dims(), p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> Volume {
        Volume::from_fn([4, 5, 3], |x, y, z| (x as f64) * 1.5 - (y as f64) * 0.25 + (z * z) as f64)
    }

    #[test]
    fn exact_on_lattice() {
        let v = ramp();
        assert_eq!(trilinear_sample(&v, [2.0, 3.0, 1.0]).unwrap(), v.get(2, 3, 1));
        assert_eq!(trilinear_sample(&v, [3.0, 4.0, 2.0]).unwrap(), v.get(3, 4, 2));
    }

    #[test]
    fn midpoint_of_neighbors() {
        let v = Volume::from_vec([2, 1, 1], vec![0.0, 1.0]);
        assert_eq!(trilinear_sample(&v, [0.5, 0.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn clamps_outside() {
        let v = ramp();
        assert_eq!(trilinear_sample(&v, [-3.0, 0.0, 0.0]).unwrap(), v.get(0, 0, 0));
        assert_eq!(trilinear_sample(&v, [10.0, 9.0, -2.0]).unwrap(), v.get(3, 4, 0));
    }

    #[test]
    fn rejects_nan() {
        assert!(trilinear_sample(&ramp(), [f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let v = ramp();
        let p = [1.3, 2.6, 0.7];
        let (val, g) = sample_with_gradient(v.data(), v.dims(), p);
        assert!((val - sample(v.data(), v.dims(), p)).abs() < 1e-14);
        let h = 1e-6;
        for a in 0..3 {
            let mut lo = p;
            let mut hi = p;
            lo[a] -= h;
            hi[a] += h;
            let fd = (sample(v.data(), v.dims(), hi) - sample(v.data(), v.dims(), lo)) / (2.0 * h);
            assert!((fd - g[a]).abs() < 1e-7, "axis {a}: {fd} vs {}", g[a]);
        }
        let (_, outside) = sample_with_gradient(v.data(), v.dims(), [-1.0, 2.5, 5.0]);
        assert_eq!(outside[0], 0.0);
        assert_eq!(outside[2], 0.0);
        assert!(outside[1] != 0.0);
    }
}
