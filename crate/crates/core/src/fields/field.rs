use crate::error::{RegError, Result};
use crate::grids::Dims;

/// Per-voxel displacement in voxel units of its own grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    dims: Dims,
    vectors: Vec<[f64; 3]>,
}

impl DisplacementField {
    pub fn new(dims: impl Into<Dims>, vectors: Vec<[f64; 3]>) -> Result<Self> {
        let dims = dims.into();
        if dims.0.contains(&0) {
            return Err(RegError::InvalidVolume(format!(
                "field dims must be positive, got {:?}",
                dims.0
            )));
        }
        if vectors.len() != dims.len() {
            return Err(RegError::InvalidVolume(format!(
                "field has {} vectors for dims {:?}",
                vectors.len(),
                dims.0
            )));
        }
        if vectors.iter().flatten().any(|c| !c.is_finite()) {
            return Err(RegError::NonFinite("displacement"));
        }
        Ok(DisplacementField { dims, vectors })
    }

    pub fn zeros(dims: impl Into<Dims>) -> Self {
        let dims = dims.into();
        DisplacementField {
            dims,
            vectors: vec![[0.0; 3]; dims.len()],
        }
    }

    pub fn constant(dims: impl Into<Dims>, v: [f64; 3]) -> Self {
        let dims = dims.into();
        DisplacementField {
            dims,
            vectors: vec![v; dims.len()],
        }
    }

    pub fn from_fn(dims: impl Into<Dims>, mut f: impl FnMut(usize, usize, usize) -> [f64; 3]) -> Self {
        let dims = dims.into();
        let vectors = (0..dims.len())
            .map(|i| {
                let [x, y, z] = dims.coords(i);
                f(x, y, z)
            })
            .collect();
        DisplacementField { dims, vectors }
    }

    pub(crate) fn from_parts_unchecked(dims: Dims, vectors: Vec<[f64; 3]>) -> Self {
        debug_assert_eq!(vectors.len(), dims.len());
        DisplacementField { dims, vectors }
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn vectors(&self) -> &[[f64; 3]] {
        &self.vectors
    }

    #[inline]
    pub fn vectors_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.vectors
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> [f64; 3] {
        self.vectors[self.dims.index(x, y, z)]
    }

    /// Scalar grid of one vector component.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.vectors.iter().map(|v| v[c]).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.vectors.iter().flatten().all(|&c| c == 0.0)
    }

    /// Largest vector length.
    pub fn max_norm(&self) -> f64 {
        self.vectors
            .iter()
            .map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
            .fold(0.0, f64::max)
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.vectors.iter().flatten().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scaled(&self, s: f64) -> DisplacementField {
        DisplacementField {
            dims: self.dims,
            vectors: self.vectors.iter().map(|v| v.map(|c| c * s)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.vectors.iter().flatten().all(|c| c.is_finite())
    }

    pub(crate) fn check_dims(&self, other: Dims) -> Result<()> {
        if self.dims != other {
            return Err(RegError::DimMismatch {
                left: self.dims.0,
                right: other.0,
            });
        }
        Ok(())
    }
}
