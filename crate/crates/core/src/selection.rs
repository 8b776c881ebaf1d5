//! Central-slice window along a volume's slice axis.

use core::num::NonZeroUsize;
use core::ops::Range;

/// Window length for volumes with at least this many slices.
pub const WIDE_WINDOW: usize = 80;
/// Window length for volumes with fewer than [`WIDE_WINDOW`] slices.
pub const NARROW_WINDOW: usize = 40;

/// Half-open `[start, end)` range of central slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SliceWindow {
    pub start: usize,
    pub end: usize,
    pub n_slices: usize,
}

impl SliceWindow {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn is_central(&self, slice_index: usize) -> bool {
        self.range().contains(&slice_index)
    }

    pub fn leading_margin(&self) -> usize {
        self.start
    }

    pub fn trailing_margin(&self) -> usize {
        self.n_slices - self.end
    }

    /// The volume is too short for the narrow window and is used whole.
    pub fn is_short_volume(&self) -> bool {
        self.n_slices < NARROW_WINDOW
    }
}

/// Middle 80 slices when there are at least 80, middle 40 when there are
/// at least 40, otherwise the whole volume. Odd remainders go to the
/// trailing margin.
pub fn select_middle_slices(n_slices: NonZeroUsize) -> SliceWindow {
    let n = n_slices.get();
    let len = if n >= WIDE_WINDOW {
        WIDE_WINDOW
    } else if n >= NARROW_WINDOW {
        NARROW_WINDOW
    } else {
        n
    };
    let start = (n - len) / 2;
    SliceWindow {
        start,
        end: start + len,
        n_slices: n,
    }
}
