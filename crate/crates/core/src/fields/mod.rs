//! Displacement fields: warping, promotion between pyramid levels, and Jacobian analysis.

mod field;
pub(crate) mod jacobian;
pub(crate) mod resample;
pub(crate) mod warp;

pub use field::DisplacementField;
pub use jacobian::jacobian_determinant;
pub use resample::{compose_add, upsample_field, upsample_field_to};
pub use warp::{interpolate_vector, try_warp_landmarks, warp_landmarks, warp_volume};
