use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("volume dimensions must be non-zero (got {n_slices}x{height}x{width})")]
    EmptyVolume {
        n_slices: usize,
        height: usize,
        width: usize,
    },
    #[error("voxel buffer holds {actual} values, dimensions require {expected}")]
    VoxelCount { expected: usize, actual: usize },
    #[error("slice spacing must be a positive finite number, got {0}")]
    SliceSpacing(f64),
    #[error("slice index {index} out of range for a volume of {n_slices} slices")]
    SliceIndex { index: usize, n_slices: usize },
    #[error("invalid window: center {center}, width {width}")]
    InvalidWindow { center: f64, width: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("not a probability simplex: {0}")]
    NotSimplex(String),
    #[error("probability {0} outside [0, 1]")]
    ProbabilityRange(f64),
    #[error("class index {index} out of range for {k} classes")]
    ClassIndex { index: usize, k: usize },
    #[error("no truth samples for class {0}")]
    EmptyClassRow(usize),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("invalid mock rule: {0}")]
    MockRule(String),
    #[error("unknown class token `{0}`")]
    UnknownClass(String),
}
