//! Classifier backend contracts.
//!
//! Stage-1 and Stage-2 are distinct traits so a slice labeler can never be
//! wired where the three-way classifier is expected.

use alloc::string::String;

use crate::{ClassProbabilities, InfectionProbability, SliceTensor};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("backend failure: {0}")]
pub struct BackendError(pub String);

/// What a backend allows callers to do in parallel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Concurrency {
    /// `predict` may be called from many threads at once.
    #[default]
    Shared,
    /// Calls must be serialized by the caller.
    SingleSession,
}

/// Binary infectious / non-infectious slice labeler.
pub trait Stage1Backend: Send + Sync {
    fn predict(&self, tensor: &SliceTensor) -> Result<InfectionProbability, BackendError>;

    fn concurrency(&self) -> Concurrency {
        Concurrency::Shared
    }
}

/// Three-way (Normal, CAP, COVID-19) slice classifier.
pub trait Stage2Backend: Send + Sync {
    fn predict(&self, tensor: &SliceTensor) -> Result<ClassProbabilities, BackendError>;

    fn concurrency(&self) -> Concurrency {
        Concurrency::Shared
    }
}

impl<T: Stage1Backend + ?Sized> Stage1Backend for alloc::sync::Arc<T> {
    fn predict(&self, tensor: &SliceTensor) -> Result<InfectionProbability, BackendError> {
        (**self).predict(tensor)
    }

    fn concurrency(&self) -> Concurrency {
        (**self).concurrency()
    }
}

impl<T: Stage2Backend + ?Sized> Stage2Backend for alloc::sync::Arc<T> {
    fn predict(&self, tensor: &SliceTensor) -> Result<ClassProbabilities, BackendError> {
        (**self).predict(tensor)
    }

    fn concurrency(&self) -> Concurrency {
        (**self).concurrency()
    }
}
