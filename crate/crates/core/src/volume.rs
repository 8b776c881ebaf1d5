use alloc::string::String;
use alloc::vec::Vec;
use core::num::NonZeroUsize;

use crate::CoreError;

/// A CT volume of signed 16-bit Hounsfield units, stored slice-major
/// (`[slice][row][col]`).
#[derive(Debug, Clone, PartialEq)]
pub struct CtVolume {
    patient_id: String,
    n_slices: NonZeroUsize,
    height: NonZeroUsize,
    width: NonZeroUsize,
    slice_spacing_mm: Option<f64>,
    voxels: Vec<i16>,
}

impl CtVolume {
    pub fn new(
        patient_id: impl Into<String>,
        n_slices: usize,
        height: usize,
        width: usize,
        slice_spacing_mm: Option<f64>,
        voxels: Vec<i16>,
    ) -> Result<Self, CoreError> {
        let dims = (
            NonZeroUsize::new(n_slices),
            NonZeroUsize::new(height),
            NonZeroUsize::new(width),
        );
        let (Some(n), Some(h), Some(w)) = dims else {
            return Err(CoreError::EmptyVolume {
                n_slices,
                height,
                width,
            });
        };
        let expected = n_slices
            .checked_mul(height)
            .and_then(|v| v.checked_mul(width))
            .ok_or(CoreError::VoxelCount {
                expected: usize::MAX,
                actual: voxels.len(),
            })?;
        if voxels.len() != expected {
            return Err(CoreError::VoxelCount {
                expected,
                actual: voxels.len(),
            });
        }
        if let Some(s) = slice_spacing_mm {
            if !(s.is_finite() && s > 0.0) {
                return Err(CoreError::SliceSpacing(s));
            }
        }
        Ok(CtVolume {
            patient_id: patient_id.into(),
            n_slices: n,
            height: h,
            width: w,
            slice_spacing_mm,
            voxels,
        })
    }

    pub fn patient_id(&self) -> &str {
        &self.patient_id
    }

    pub fn n_slices(&self) -> usize {
        self.n_slices.get()
    }

    pub fn n_slices_nonzero(&self) -> NonZeroUsize {
        self.n_slices
    }

    pub fn height(&self) -> usize {
        self.height.get()
    }

    pub fn width(&self) -> usize {
        self.width.get()
    }

    pub fn slice_spacing_mm(&self) -> Option<f64> {
        self.slice_spacing_mm
    }

    pub fn voxels(&self) -> &[i16] {
        &self.voxels
    }

    pub fn slice_len(&self) -> usize {
        self.height() * self.width()
    }

    pub fn slice(&self, index: usize) -> Result<&[i16], CoreError> {
        if index >= self.n_slices() {
            return Err(CoreError::SliceIndex {
                index,
                n_slices: self.n_slices(),
            });
        }
        let len = self.slice_len();
        Ok(&self.voxels[index * len..(index + 1) * len])
    }

    pub fn into_voxels(self) -> Vec<i16> {
        self.voxels
    }
}
