//! Grid types, preprocessing, interpolation and pyramid construction.
//!
//! Voxel centers sit at integer coordinates and all coordinates are in voxel units
//! of the grid they refer to.

pub mod interp;
mod landmarks;
mod pyramid;
mod smooth;
mod volume;

pub use interp::{trilinear_sample, Stencil};
pub use landmarks::{Landmark, LandmarkSet};
pub use pyramid::{downsample_landmarks, downsample_volume, level_factor, scaled_dims};
pub use smooth::gaussian_smooth;
pub use volume::{crop_pad, minmax_normalize, Dims, Volume};

/// The preprocessing crop that maps 240x240x155 scans to 144x192x160.
pub const BRATS_REGION: [std::ops::Range<i64>; 3] = [48..192, 32..224, -5..155];
