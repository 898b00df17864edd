use std::collections::HashSet;

use crate::error::{RegError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmark {
    pub id: i64,
    /// Continuous voxel coordinates `[x, y, z]`.
    pub coord: [f64; 3],
}

/// Ordered landmarks with unique ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LandmarkSet {
    points: Vec<Landmark>,
}

impl LandmarkSet {
    pub fn new(points: Vec<Landmark>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(points.len());
        for p in &points {
            if !seen.insert(p.id) {
                return Err(RegError::InvalidConfig(format!(
                    "duplicate landmark id {}",
                    p.id
                )));
            }
            if p.coord.iter().any(|c| !c.is_finite()) {
                return Err(RegError::NonFinite("landmark coordinate"));
            }
        }
        Ok(LandmarkSet { points })
    }

    /// Landmarks with ids `0..n`.
    pub fn from_coords(coords: impl IntoIterator<Item = [f64; 3]>) -> Self {
        let points = coords
            .into_iter()
            .enumerate()
            .map(|(i, coord)| Landmark {
                id: i as i64,
                coord,
            })
            .collect();
        LandmarkSet::new(points).expect("invalid landmark coordinates")
    }

    pub fn points(&self) -> &[Landmark] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn coords(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.points.iter().map(|p| p.coord)
    }

    /// Same ids in the same order.
    pub fn is_paired_with(&self, other: &LandmarkSet) -> bool {
        self.points.len() == other.points.len()
            && self
                .points
                .iter()
                .zip(&other.points)
                .all(|(a, b)| a.id == b.id)
    }

    pub fn check_paired(&self, other: &LandmarkSet) -> Result<()> {
        if self.points.len() != other.points.len() {
            return Err(RegError::UnpairedLandmarks(format!(
                "{} vs {} landmarks",
                self.points.len(),
                other.points.len()
            )));
        }
        for (a, b) in self.points.iter().zip(&other.points) {
            if a.id != b.id {
                return Err(RegError::UnpairedLandmarks(format!(
                    "id {} paired with id {}",
                    a.id, b.id
                )));
            }
        }
        Ok(())
    }

    /// Apply `f` to every coordinate, keeping ids.
    pub fn map_coords(&self, mut f: impl FnMut([f64; 3]) -> [f64; 3]) -> LandmarkSet {
        LandmarkSet {
            points: self
                .points
                .iter()
                .map(|p| Landmark {
                    id: p.id,
                    coord: f(p.coord),
                })
                .collect(),
        }
    }

    pub fn translated(&self, offset: [f64; 3]) -> LandmarkSet {
        self.map_coords(|c| [c[0] + offset[0], c[1] + offset[1], c[2] + offset[2]])
    }
}
