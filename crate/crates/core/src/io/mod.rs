//! File formats, reports and synthetic data.

pub mod landmark_file;
pub mod report;
pub mod synth;
pub mod volume_file;

pub use landmark_file::{read_landmarks, write_landmarks};
pub use report::Report;
pub use volume_file::{read_field, read_volume, write_field, write_volume};
