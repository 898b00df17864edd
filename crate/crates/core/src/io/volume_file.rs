//! Raw volume files: a small text header (`*.vhdr`) next to a little-endian f32
//! payload with the same stem and a `.raw` extension.
//!
//! ```text
//! dims = [36, 48, 40]
//! spacing = [1.0, 1.0, 1.0]
//! dtype = "f32"
//! order = "x-fastest"
//! components = 1
//! ```
//!
//! Vector fields use `components = 3` with the three components interleaved per voxel.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{RegError, Result};
use crate::fields::DisplacementField;
use crate::grids::{Dims, Volume};

pub const HEADER_EXTENSION: &str = "vhdr";
pub const PAYLOAD_EXTENSION: &str = "raw";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeHeader {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub dtype: String,
    pub order: String,
    #[serde(default = "one")]
    pub components: usize,
}

fn one() -> usize {
    1
}

impl VolumeHeader {
    pub fn new(dims: Dims, spacing: [f64; 3], components: usize) -> Self {
        VolumeHeader {
            dims: dims.0,
            spacing,
            dtype: "f32".into(),
            order: "x-fastest".into(),
            components,
        }
    }

    fn validate(&self, path: &Path) -> Result<()> {
        if self.dtype != "f32" {
            return Err(RegError::format(path, format!("unsupported dtype {:?}", self.dtype)));
        }
        if self.order != "x-fastest" {
            return Err(RegError::format(path, format!("unsupported order {:?}", self.order)));
        }
        if self.components != 1 && self.components != 3 {
            return Err(RegError::format(
                path,
                format!("components must be 1 or 3, got {}", self.components),
            ));
        }
        if self.dims.contains(&0) {
            return Err(RegError::format(path, format!("empty dims {:?}", self.dims)));
        }
        if self.spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(RegError::format(path, format!("bad spacing {:?}", self.spacing)));
        }
        Ok(())
    }

    pub fn payload_bytes(&self) -> usize {
        4 * self.components * self.dims.iter().product::<usize>()
    }
}

/// Sibling payload path for a header path.
pub fn payload_path(header: &Path) -> PathBuf {
    header.with_extension(PAYLOAD_EXTENSION)
}

fn check_header_path(path: &Path) -> Result<()> {
    if path.extension().is_some_and(|e| e == PAYLOAD_EXTENSION) {
        return Err(RegError::format(
            path,
            format!("expected a .{HEADER_EXTENSION} header path, not the payload"),
        ));
    }
    Ok(())
}

fn encode(values: impl Iterator<Item = f64>, path: &Path) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for v in values {
        let f = v as f32;
        if !f.is_finite() {
            return Err(RegError::format(path, format!("value {v} does not fit in f32")));
        }
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

fn write_pair(path: &Path, header: &VolumeHeader, payload: &[u8]) -> Result<()> {
    check_header_path(path)?;
    let text = toml::to_string(header).map_err(|e| RegError::format(path, e.to_string()))?;
    fs::write(path, text).map_err(|e| RegError::io(path, e))?;
    let raw = payload_path(path);
    fs::write(&raw, payload).map_err(|e| RegError::io(raw, e))
}

fn read_pair(path: &Path) -> Result<(VolumeHeader, Vec<f64>)> {
    check_header_path(path)?;
    let header = read_header(path)?;
    let raw = payload_path(path);
    let bytes = fs::read(&raw).map_err(|e| RegError::io(&raw, e))?;
    if bytes.len() != header.payload_bytes() {
        return Err(RegError::format(
            &raw,
            format!(
                "payload has {} bytes, header needs {}",
                bytes.len(),
                header.payload_bytes()
            ),
        ));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok((header, values))
}

pub fn read_header(path: &Path) -> Result<VolumeHeader> {
    let text = fs::read_to_string(path).map_err(|e| RegError::io(path, e))?;
    let header: VolumeHeader =
        toml::from_str(&text).map_err(|e| RegError::format(path, e.message().to_string()))?;
    header.validate(path)?;
    Ok(header)
}

/// Write a scalar volume; values are stored as f32.
pub fn write_volume(path: &Path, v: &Volume) -> Result<()> {
    let header = VolumeHeader::new(v.dims(), v.spacing(), 1);
    let payload = encode(v.data().iter().copied(), path)?;
    write_pair(path, &header, &payload)
}

pub fn read_volume(path: &Path) -> Result<Volume> {
    let (header, values) = read_pair(path)?;
    if header.components != 1 {
        return Err(RegError::format(
            path,
            format!("expected a scalar volume, found {} components", header.components),
        ));
    }
    Volume::new(header.dims, values, header.spacing).map_err(|e| RegError::format(path, e.to_string()))
}

/// Write a displacement field as an interleaved three-component volume.
pub fn write_field(path: &Path, f: &DisplacementField, spacing: [f64; 3]) -> Result<()> {
    let header = VolumeHeader::new(f.dims(), spacing, 3);
    let payload = encode(f.vectors().iter().flatten().copied(), path)?;
    write_pair(path, &header, &payload)
}

pub fn read_field(path: &Path) -> Result<DisplacementField> {
    let (header, values) = read_pair(path)?;
    if header.components != 3 {
        return Err(RegError::format(
            path,
            format!("expected a vector field, found {} components", header.components),
        ));
    }
    let vectors = values.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    DisplacementField::new(header.dims, vectors).map_err(|e| RegError::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volume_roundtrip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let v = Volume::new([3, 2, 4], (0..24).map(|i| (i as f64).sin() / 3.0).collect(), [1.0, 0.5, 2.0])
            .unwrap();
        let a = dir.path().join("a.vhdr");
        let b = dir.path().join("b.vhdr");
        write_volume(&a, &v).unwrap();
        let back = read_volume(&a).unwrap();
        assert_eq!(back.dims(), v.dims());
        assert_eq!(back.spacing(), v.spacing());
        for (x, y) in back.data().iter().zip(v.data()) {
            assert!((x - y).abs() < 1e-7);
        }
        write_volume(&b, &back).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(fs::read(payload_path(&a)).unwrap(), fs::read(payload_path(&b)).unwrap());
        assert_eq!(fs::read(payload_path(&a)).unwrap().len(), 4 * 24);
    }

    #[test]
    fn field_payload_is_interleaved() {
        let dir = tempfile::tempdir().unwrap();
        let f = DisplacementField::from_fn([2, 1, 1], |x, _, _| [x as f64, 10.0, -1.5]);
        let p = dir.path().join("f.vhdr");
        write_field(&p, &f, [1.0; 3]).unwrap();
        let raw = fs::read(payload_path(&p)).unwrap();
        let floats: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(floats, vec![0.0, 10.0, -1.5, 1.0, 10.0, -1.5]);
        assert_eq!(read_field(&p).unwrap(), f);
        assert!(read_volume(&p).is_err());
    }

    #[test]
    fn rejects_malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.vhdr");
        write_volume(&p, &Volume::zeros([2, 2, 2])).unwrap();
        fs::write(payload_path(&p), [0u8; 12]).unwrap();
        assert!(matches!(read_volume(&p), Err(RegError::Format { .. })));

        fs::write(&p, "dims = [2, 2, 2]\nspacing = [1.0, 1.0, 1.0]\ndtype = \"f64\"\norder = \"x-fastest\"\n").unwrap();
        assert!(matches!(read_volume(&p), Err(RegError::Format { .. })));
        fs::write(&p, "dims = [2, 2]\n").unwrap();
        assert!(matches!(read_volume(&p), Err(RegError::Format { .. })));
        assert!(matches!(
            read_volume(&dir.path().join("missing.vhdr")),
            Err(RegError::Io { .. })
        ));
        assert!(write_volume(&dir.path().join("x.raw"), &Volume::zeros([1, 1, 1])).is_err());
    }
}
