//! Batch CT-volume triage.
//!
//! Volumes are windowed into 512×512×3 slice tensors, every slice is
//! classified Normal / CAP / COVID-19 by a pluggable backend, and a weighted
//! vote over central and peripheral slices gives the patient label. A
//! separate binary backend labels infectious slices for dataset preparation.
//! The pure algorithms live in [`ctriage_core`]; this crate adds file
//! formats, ONNX backends, the worker pool, evaluation and the CLI.

pub mod cli;
pub mod error;
pub mod eval;
pub mod manifest;
pub mod onnx;
pub mod pipeline;
pub mod report;
pub mod volume_io;

pub use ctriage_core;
pub use error::{Error, Result};
