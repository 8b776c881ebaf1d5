//! Model-ready slice tensors.
//!
//! A [`SliceTensor`] is the 512×512×3 image handed to a classifier: the
//! windowed slice, resized if the volume is not 512×512, with the grayscale
//! plane replicated across three channels. Only the plane is stored; the
//! channels are identical by construction.

use alloc::string::String;
use alloc::vec::Vec;

use crate::selection::{select_middle_slices, SliceWindow};
use crate::{CoreError, CtVolume, Windowing};

pub const TENSOR_SIDE: usize = 512;
pub const TENSOR_CHANNELS: usize = 3;
pub const PLANE_LEN: usize = TENSOR_SIDE * TENSOR_SIDE;
/// Length of the interleaved `H × W × C` buffer.
pub const HWC_LEN: usize = PLANE_LEN * TENSOR_CHANNELS;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SliceSource {
    pub patient_id: String,
    pub slice_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceTensor {
    source: SliceSource,
    plane: Vec<f32>,
}

impl SliceTensor {
    /// Wraps a 512×512 grayscale plane. Every value must lie in `[0, 255]`.
    pub fn from_plane(source: SliceSource, plane: Vec<f32>) -> Result<Self, CoreError> {
        if plane.len() != PLANE_LEN {
            return Err(CoreError::DimensionMismatch {
                expected: PLANE_LEN,
                actual: plane.len(),
            });
        }
        if plane.iter().any(|v| !(0.0..=255.0).contains(v)) {
            return Err(CoreError::NonFinite("slice tensor (values must be in [0, 255])"));
        }
        Ok(SliceTensor { source, plane })
    }

    pub fn filled(source: SliceSource, value: f32) -> Result<Self, CoreError> {
        Self::from_plane(source, alloc::vec![value; PLANE_LEN])
    }

    pub fn source(&self) -> &SliceSource {
        &self.source
    }

    pub fn plane(&self) -> &[f32] {
        &self.plane
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> Option<f32> {
        if row >= TENSOR_SIDE || col >= TENSOR_SIDE || channel >= TENSOR_CHANNELS {
            return None;
        }
        Some(self.plane[row * TENSOR_SIDE + col])
    }

    /// Mean intensity over the plane, accumulated in f64.
    pub fn mean(&self) -> f64 {
        self.plane.iter().map(|&v| f64::from(v)).sum::<f64>() / PLANE_LEN as f64
    }

    /// Fills `out` (length [`HWC_LEN`]) with the interleaved `H × W × 3` layout.
    pub fn write_hwc(&self, out: &mut [f32]) -> Result<(), CoreError> {
        if out.len() != HWC_LEN {
            return Err(CoreError::DimensionMismatch {
                expected: HWC_LEN,
                actual: out.len(),
            });
        }
        for (px, &v) in out.chunks_exact_mut(TENSOR_CHANNELS).zip(&self.plane) {
            px.fill(v);
        }
        Ok(())
    }

    pub fn to_hwc(&self) -> Vec<f32> {
        let mut out = alloc::vec![0.0; HWC_LEN];
        self.write_hwc(&mut out).expect("buffer sized to HWC_LEN");
        out
    }

    /// Plane rounded back to 8 bits (exact when no resize took place).
    pub fn to_gray_u8(&self) -> Vec<u8> {
        self.plane
            .iter()
            .map(|&v| libm::roundf(v).clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// Windowed 8-bit copy of one slice at its native resolution.
pub fn windowed_slice(
    volume: &CtVolume,
    slice_index: usize,
    windowing: Windowing,
) -> Result<Vec<u8>, CoreError> {
    Ok(volume
        .slice(slice_index)?
        .iter()
        .map(|&hu| windowing.apply(hu))
        .collect())
}

/// Bilinear resize with pixel-center alignment and edge clamping.
pub fn resize_bilinear(
    src: &[u8],
    src_h: usize,
    src_w: usize,
    dst_h: usize,
    dst_w: usize,
) -> Result<Vec<f32>, CoreError> {
    if src.len() != src_h * src_w || src.is_empty() {
        return Err(CoreError::DimensionMismatch {
            expected: src_h * src_w,
            actual: src.len(),
        });
    }
    let axis = |dst: usize, src_len: usize| -> Vec<(usize, usize, f32)> {
        let scale = src_len as f64 / dst as f64;
        (0..dst)
            .map(|d| {
                let pos = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (src_len - 1) as f64);
                let i0 = pos as usize;
                let i1 = (i0 + 1).min(src_len - 1);
                (i0, i1, (pos - i0 as f64) as f32)
            })
            .collect()
    };
    let rows = axis(dst_h, src_h);
    let cols = axis(dst_w, src_w);
    let mut out = Vec::with_capacity(dst_h * dst_w);
    for &(r0, r1, fy) in &rows {
        let top = &src[r0 * src_w..(r0 + 1) * src_w];
        let bottom = &src[r1 * src_w..(r1 + 1) * src_w];
        for &(c0, c1, fx) in &cols {
            let t = f32::from(top[c0]) + (f32::from(top[c1]) - f32::from(top[c0])) * fx;
            let b = f32::from(bottom[c0]) + (f32::from(bottom[c1]) - f32::from(bottom[c0])) * fx;
            out.push((t + (b - t) * fy).clamp(0.0, 255.0));
        }
    }
    Ok(out)
}

pub fn make_slice_tensor(
    volume: &CtVolume,
    slice_index: usize,
    windowing: impl Into<Windowing>,
) -> Result<SliceTensor, CoreError> {
    let windowed = windowed_slice(volume, slice_index, windowing.into())?;
    let (h, w) = (volume.height(), volume.width());
    let plane = if h == TENSOR_SIDE && w == TENSOR_SIDE {
        windowed.into_iter().map(f32::from).collect()
    } else {
        resize_bilinear(&windowed, h, w, TENSOR_SIDE, TENSOR_SIDE)?
    };
    Ok(SliceTensor {
        source: SliceSource {
            patient_id: volume.patient_id().into(),
            slice_index,
        },
        plane,
    })
}

#[derive(Debug, Clone)]
pub struct PreprocessedVolume {
    pub tensors: Vec<SliceTensor>,
    pub window: SliceWindow,
}

impl PreprocessedVolume {
    pub fn is_central(&self, slice_index: usize) -> bool {
        self.window.is_central(slice_index)
    }
}

/// One tensor per slice of the whole volume plus the central window.
pub fn preprocess_volume(
    volume: &CtVolume,
    windowing: impl Into<Windowing>,
) -> Result<PreprocessedVolume, CoreError> {
    let windowing = windowing.into();
    let tensors = (0..volume.n_slices())
        .map(|i| make_slice_tensor(volume, i, windowing))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PreprocessedVolume {
        tensors,
        window: select_middle_slices(volume.n_slices_nonzero()),
    })
}
