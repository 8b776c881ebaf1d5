//! Allocation-only building blocks for two-stage CT triage.
//!
//! Everything in this crate is pure and deterministic: Hounsfield-unit
//! windowing, central-slice selection, tensor assembly, the classifier head
//! operations, weighted patient voting and confusion-matrix metrics. File
//! formats, model runtimes and the command line live in the `ctriage` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod backend;
pub mod class;
pub mod error;
pub mod metrics;
pub mod mock;
pub mod ops;
pub mod ratio;
pub mod selection;
pub mod tensor;
pub mod volume;
pub mod vote;
pub mod window;

pub use backend::{BackendError, Concurrency, Stage1Backend, Stage2Backend};
pub use class::Class;
pub use error::CoreError;
pub use metrics::ConfusionMatrix;
pub use ops::{ClassProbabilities, DenseLayer, FeatureMap, InfectionProbability};
pub use ratio::Ratio;
pub use selection::{select_middle_slices, SliceWindow};
pub use tensor::{make_slice_tensor, preprocess_volume, SliceSource, SliceTensor};
pub use volume::CtVolume;
pub use vote::{vote, ClassTally, VoteCounts, VoteOutcome, VoteWeights};
pub use window::{window_hu, WindowSpec, Windowing};
