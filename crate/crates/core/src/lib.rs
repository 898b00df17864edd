//! Coarse-to-fine deformable registration of 3D volumes.

pub mod cli;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod fields;
pub mod grids;
pub mod io;
pub mod objectives;

pub use error::{RegError, Result};
