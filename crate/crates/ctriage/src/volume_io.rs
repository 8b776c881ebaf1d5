//! Raw volume format: little-endian `i16` voxels, slice-major, next to a
//! JSON sidecar `{patient_id, n_slices, height, width, slice_spacing_mm?}`.
//! A volume at `scan.raw` has its sidecar at `scan.json`; either file may be
//! named when loading.

use std::fs;
use std::path::{Path, PathBuf};

use ctriage_core::CtVolume;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeSidecar {
    pub patient_id: String,
    pub n_slices: usize,
    pub height: usize,
    pub width: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_spacing_mm: Option<f64>,
}

/// `(raw, sidecar)` paths for a volume named by either file.
pub fn volume_paths(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("raw"), path.with_extension("json"))
}

pub fn load_volume(path: impl AsRef<Path>) -> Result<CtVolume> {
    let (raw_path, sidecar_path) = volume_paths(path.as_ref());
    let sidecar_bytes = fs::read(&sidecar_path).map_err(|e| Error::io(&sidecar_path, e))?;
    let sidecar: VolumeSidecar =
        serde_json::from_slice(&sidecar_bytes).map_err(|source| Error::Sidecar {
            path: sidecar_path.clone(),
            source,
        })?;
    let raw = fs::read(&raw_path).map_err(|e| Error::io(&raw_path, e))?;
    let expected = (sidecar.n_slices as u64)
        .saturating_mul(sidecar.height as u64)
        .saturating_mul(sidecar.width as u64)
        .saturating_mul(2);
    if raw.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            path: raw_path,
            expected,
            actual: raw.len() as u64,
        });
    }
    let voxels = raw
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]))
        .collect();
    Ok(CtVolume::new(
        sidecar.patient_id,
        sidecar.n_slices,
        sidecar.height,
        sidecar.width,
        sidecar.slice_spacing_mm,
        voxels,
    )?)
}

pub fn write_volume(volume: &CtVolume, path: impl AsRef<Path>) -> Result<()> {
    let (raw_path, sidecar_path) = volume_paths(path.as_ref());
    let sidecar = VolumeSidecar {
        patient_id: volume.patient_id().to_owned(),
        n_slices: volume.n_slices(),
        height: volume.height(),
        width: volume.width(),
        slice_spacing_mm: volume.slice_spacing_mm(),
    };
    let mut json = serde_json::to_vec_pretty(&sidecar).expect("sidecar serializes");
    json.push(b'\n');
    fs::write(&sidecar_path, json).map_err(|e| Error::io(&sidecar_path, e))?;
    let raw: Vec<u8> = volume.voxels().iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(&raw_path, raw).map_err(|e| Error::io(&raw_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_pair(dir: &Path, sidecar: &str, raw: &[u8]) -> PathBuf {
        let path = dir.join("v.raw");
        fs::write(dir.join("v.json"), sidecar).unwrap();
        fs::write(&path, raw).unwrap();
        path
    }

    const SIDECAR: &str = r#"{"patient_id":"p0","n_slices":2,"height":2,"width":2}"#;

    #[test]
    fn zero_volume() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_pair(dir.path(), SIDECAR, &[0; 16]);
        let v = load_volume(&path).unwrap();
        assert_eq!(v.voxels(), &[0; 8]);
        assert_eq!(v.patient_id(), "p0");
        assert_eq!(v.slice_spacing_mm(), None);
        // the sidecar names the same volume
        assert_eq!(load_volume(dir.path().join("v.json")).unwrap(), v);
    }

    #[test]
    fn short_raw_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_pair(dir.path(), SIDECAR, &[0; 15]);
        match load_volume(&path) {
            Err(Error::SizeMismatch {
                expected, actual, ..
            }) => assert_eq!((expected, actual), (16, 15)),
            other => panic!("expected size mismatch, got {other:?}"),
        }
    }

    #[test]
    fn little_endian_voxels() {
        let dir = tempfile::tempdir().unwrap();
        let sidecar = r#"{"patient_id":"p","n_slices":1,"height":1,"width":2,"slice_spacing_mm":1.5}"#;
        let path = write_pair(dir.path(), sidecar, &[0x18, 0xfc, 0xff, 0x7f]);
        let v = load_volume(&path).unwrap();
        assert_eq!(v.voxels(), &[-1000, i16::MAX]);
        assert_eq!(v.slice_spacing_mm(), Some(1.5));
    }

    #[test]
    fn missing_and_malformed_sidecars() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_volume(dir.path().join("absent.raw")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("absent.json"));
        let path = write_pair(dir.path(), "{not json", &[0; 16]);
        assert!(matches!(load_volume(&path), Err(Error::Sidecar { .. })));
        let path = write_pair(
            dir.path(),
            r#"{"patient_id":"p","n_slices":0,"height":2,"width":2}"#,
            &[],
        );
        assert!(matches!(load_volume(&path), Err(Error::Core(_))));
    }
}
