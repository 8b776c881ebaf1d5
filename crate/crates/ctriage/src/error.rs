use std::io;
use std::path::PathBuf;

use ctriage_core::{BackendError, CoreError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: malformed sidecar: {source}", path.display())]
    Sidecar {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: raw file holds {actual} bytes, sidecar dimensions require {expected}", path.display())]
    SizeMismatch {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },
    #[error("{}: {message}", path.display())]
    Manifest { path: PathBuf, message: String },
    #[error("duplicate patient_id `{0}`")]
    DuplicatePatient(String),
    #[error("{}: {message}", path.display())]
    SliceLabels { path: PathBuf, message: String },
    #[error("patient {patient_id}: slice label index {index} out of range for {n_slices} slices")]
    SliceLabelRange {
        patient_id: String,
        index: usize,
        n_slices: usize,
    },
    #[error("{}: {kind}: {message}", path.display())]
    Model {
        path: PathBuf,
        kind: ModelErrorKind,
        message: String,
    },
    #[error("{}: malformed report: {source}", path.display())]
    Report {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("no stage-1 labeler exists for diagnosis {0}")]
    NoStage1Labeler(String),
    #[error("no scored patient has a known diagnosis")]
    NoLabeledPatients,
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelErrorKind {
    Missing,
    Parse,
    UnsupportedOperator,
    ShapeMismatch,
}

impl std::fmt::Display for ModelErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelErrorKind::Missing => "missing model file",
            ModelErrorKind::Parse => "unreadable model graph",
            ModelErrorKind::UnsupportedOperator => "unsupported operator",
            ModelErrorKind::ShapeMismatch => "shape mismatch",
        })
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable category used as the machine-parsable prefix of CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Sidecar { .. } | Error::SizeMismatch { .. } => "volume",
            Error::Manifest { .. } | Error::DuplicatePatient(_) => "manifest",
            Error::SliceLabels { .. } | Error::SliceLabelRange { .. } => "slice-labels",
            Error::Model { .. } => "model",
            Error::Report { .. } => "report",
            Error::NoStage1Labeler(_) => "stage1",
            Error::NoLabeledPatients => "evaluate",
            Error::Config(_) => "config",
            Error::Core(_) => "invalid",
            Error::Backend(_) => "backend",
        }
    }
}
