//! The evaluation report: one JSON document with top-level `slices`,
//! `patients` and `metrics`. Serialization is deterministic (declaration
//! key order, shortest round-trip float formatting, trailing newline).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ctriage_core::metrics::ConfusionMatrix;
use ctriage_core::{Class, ClassProbabilities, VoteCounts};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub slices: Vec<SliceRecord>,
    pub patients: Vec<PatientRecord>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRecord {
    pub patient_id: String,
    pub slice_index: usize,
    pub is_central: bool,
    pub probabilities: ClassProbabilities,
    pub predicted_class: Class,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatientStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub normal: f64,
    pub cap: f64,
    pub covid19: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub patient_id: String,
    pub status: PatientStatus,
    pub error: Option<String>,
    pub n_slices: Option<usize>,
    /// Half-open `[start, end)` central window.
    pub central_window: Option<[usize; 2]>,
    pub counts: Option<VoteCounts>,
    pub scores: Option<ScoreRecord>,
    pub label: Option<Class>,
    pub truth: Option<Class>,
    pub warnings: Vec<String>,
}

impl PatientRecord {
    pub fn failed(patient_id: impl Into<String>, error: impl ToString) -> Self {
        PatientRecord {
            patient_id: patient_id.into(),
            status: PatientStatus::Failed,
            error: Some(error.to_string()),
            n_slices: None,
            central_window: None,
            counts: None,
            scores: None,
            label: None,
            truth: None,
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub patient_level: LevelMetrics,
    pub slice_level: LevelMetrics,
    /// Patients whose truth is `Unknown` or absent from the manifest.
    pub skipped_patients: u64,
    /// Patients whose prediction failed.
    pub failed_patients: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassSensitivity {
    pub class: Class,
    pub hits: u64,
    pub support: u64,
    /// `None` when the class has no truth samples.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub classes: Vec<Class>,
    /// Rows = truth, columns = prediction, in `classes` order.
    pub confusion: Vec<Vec<u64>>,
    pub total: u64,
    pub correct: u64,
    pub accuracy: Option<f64>,
    pub sensitivity: Vec<ClassSensitivity>,
}

impl Default for LevelMetrics {
    fn default() -> Self {
        LevelMetrics::from_matrix(&ConfusionMatrix::new(Class::COUNT))
    }
}

impl LevelMetrics {
    pub fn from_matrix(cm: &ConfusionMatrix) -> Self {
        let sensitivity = Class::ALL
            .iter()
            .map(|&class| {
                let i = class.index();
                ClassSensitivity {
                    class,
                    hits: cm.cell(i, i),
                    support: cm.row_total(i),
                    value: cm.sensitivity(i).ok().map(|r| r.to_f64()),
                }
            })
            .collect();
        LevelMetrics {
            classes: Class::ALL.to_vec(),
            confusion: cm.rows(),
            total: cm.total(),
            correct: cm.trace(),
            accuracy: cm.accuracy().ok().map(|r| r.to_f64()),
            sensitivity,
        }
    }

    pub fn matrix(&self) -> Result<ConfusionMatrix> {
        Ok(ConfusionMatrix::from_rows(&self.confusion)?)
    }

    /// Plain-text confusion table, rows = truth, columns = prediction.
    pub fn render(&self, title: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{title} (rows = truth, columns = predicted)");
        let _ = write!(out, "{:<14}", "truth \\ pred");
        for c in &self.classes {
            let _ = write!(out, "{:>9}", c.name());
        }
        let _ = writeln!(out, "{:>13}", "sensitivity");
        for (row, sens) in self.confusion.iter().zip(&self.sensitivity) {
            let _ = write!(out, "{:<14}", sens.class.name());
            for cell in row {
                let _ = write!(out, "{cell:>9}");
            }
            match sens.value {
                Some(v) => {
                    let _ = writeln!(out, "{v:>13.4}");
                }
                None => {
                    let _ = writeln!(out, "{:>13}", "n/a");
                }
            }
        }
        match self.accuracy {
            Some(a) => {
                let _ = writeln!(out, "accuracy {}/{} = {a:.4}", self.correct, self.total);
            }
            None => {
                let _ = writeln!(out, "accuracy n/a (no scored samples)");
            }
        }
        out
    }
}

pub fn report_to_bytes(report: &EvalReport) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes");
    bytes.push(b'\n');
    bytes
}

pub fn write_report(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, report_to_bytes(report)).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<EvalReport> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Report {
        path: path.to_owned(),
        source,
    })
}
