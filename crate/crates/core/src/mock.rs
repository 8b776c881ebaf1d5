//! Deterministic mock backends driven by a rule over the slice's mean
//! intensity.
//!
//! Rule syntax, clauses separated by `;` and checked in order:
//!
//! ```text
//! mean<64:0,0,1; mean<128:0,1,0; else:1,0,0     three-way
//! mean<100:0.1; *:0.9                           infection probability
//! 0.49                                          constant
//! mean<10:fail; else:0.2,0.3,0.5                fail dark slices
//! ```
//!
//! `mean<T` matches when the mean tensor value is strictly below `T`. The
//! `else` (or `*`, or a bare value list) clause applies when nothing else
//! matched and must appear exactly once.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::backend::{BackendError, Concurrency, Stage1Backend, Stage2Backend};
use crate::{ClassProbabilities, CoreError, InfectionProbability, SliceTensor};

pub trait MockOutput: Copy + Sized {
    fn from_values(values: &[f64]) -> Result<Self, CoreError>;
}

impl MockOutput for InfectionProbability {
    fn from_values(values: &[f64]) -> Result<Self, CoreError> {
        match values {
            [p] => InfectionProbability::new(*p),
            _ => Err(CoreError::MockRule(format!(
                "stage-1 rules take one probability, got {values:?}"
            ))),
        }
    }
}

impl MockOutput for ClassProbabilities {
    fn from_values(values: &[f64]) -> Result<Self, CoreError> {
        match values {
            [n, c, v] => ClassProbabilities::new([*n, *c, *v]),
            _ => Err(CoreError::MockRule(format!(
                "stage-2 rules take three probabilities (Normal,CAP,COVID19), got {values:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MockOutcome<O> {
    Value(O),
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MockRule<O> {
    clauses: Vec<(f64, MockOutcome<O>)>,
    default: MockOutcome<O>,
    spec: String,
}

impl<O: MockOutput> MockRule<O> {
    pub fn constant(value: O) -> Self {
        MockRule {
            clauses: Vec::new(),
            default: MockOutcome::Value(value),
            spec: String::from("<constant>"),
        }
    }

    pub fn parse(spec: &str) -> Result<Self, CoreError> {
        let bad = |why: &str| CoreError::MockRule(format!("`{spec}`: {why}"));
        let mut clauses = Vec::new();
        let mut default = None;
        for clause in spec.split(';').map(str::trim).filter(|c| !c.is_empty()) {
            let (guard, body) = match clause.split_once(':') {
                Some((g, b)) => (Some(g.trim()), b.trim()),
                None => (None, clause),
            };
            let outcome = if body.eq_ignore_ascii_case("fail") {
                MockOutcome::Fail
            } else {
                let values = body
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| bad("values must be comma-separated numbers"))?;
                MockOutcome::Value(O::from_values(&values)?)
            };
            match guard {
                None | Some("*") | Some("else") => {
                    if default.replace(outcome).is_some() {
                        return Err(bad("more than one default clause"));
                    }
                }
                Some(g) => {
                    let threshold = g
                        .strip_prefix("mean")
                        .map(str::trim_start)
                        .and_then(|g| g.strip_prefix('<'))
                        .and_then(|t| t.trim().parse::<f64>().ok())
                        .filter(|t| t.is_finite())
                        .ok_or_else(|| bad("guards look like `mean<NUMBER`"))?;
                    clauses.push((threshold, outcome));
                }
            }
        }
        let default = default.ok_or_else(|| bad("missing default (`else:` or bare) clause"))?;
        Ok(MockRule {
            clauses,
            default,
            spec: spec.to_string(),
        })
    }

    pub fn evaluate(&self, mean: f64) -> MockOutcome<O> {
        self.clauses
            .iter()
            .find(|(threshold, _)| mean < *threshold)
            .map_or(self.default, |(_, outcome)| *outcome)
    }

    fn predict(&self, tensor: &SliceTensor) -> Result<O, BackendError> {
        match self.evaluate(tensor.mean()) {
            MockOutcome::Value(v) => Ok(v),
            MockOutcome::Fail => Err(BackendError(format!(
                "mock rule `{}` failed slice {} of {}",
                self.spec,
                tensor.source().slice_index,
                tensor.source().patient_id
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MockStage1 {
    pub rule: MockRule<InfectionProbability>,
    pub concurrency: Concurrency,
}

impl MockStage1 {
    pub fn parse(spec: &str) -> Result<Self, CoreError> {
        Ok(MockStage1 {
            rule: MockRule::parse(spec)?,
            concurrency: Concurrency::Shared,
        })
    }
}

impl Stage1Backend for MockStage1 {
    fn predict(&self, tensor: &SliceTensor) -> Result<InfectionProbability, BackendError> {
        self.rule.predict(tensor)
    }

    fn concurrency(&self) -> Concurrency {
        self.concurrency
    }
}

#[derive(Debug, Clone)]
pub struct MockStage2 {
    pub rule: MockRule<ClassProbabilities>,
    pub concurrency: Concurrency,
}

impl MockStage2 {
    pub fn parse(spec: &str) -> Result<Self, CoreError> {
        Ok(MockStage2 {
            rule: MockRule::parse(spec)?,
            concurrency: Concurrency::Shared,
        })
    }
}

impl Stage2Backend for MockStage2 {
    fn predict(&self, tensor: &SliceTensor) -> Result<ClassProbabilities, BackendError> {
        self.rule.predict(tensor)
    }

    fn concurrency(&self) -> Concurrency {
        self.concurrency
    }
}
