//! Scoring predictions against manifest truth.
//!
//! Patient level: 3×3 matrix of truth diagnosis vs voted label. Slice
//! level: only slices with a manifest label are scored; an `infectious`
//! slice's truth is the patient's diagnosis and a `non_infectious` slice's
//! truth is Normal.

use std::collections::HashMap;

use ctriage_core::metrics::ConfusionMatrix;
use ctriage_core::Class;

use crate::error::{Error, Result};
use crate::manifest::{DatasetManifest, InfectionLabel, ManifestEntry};
use crate::report::{EvalReport, LevelMetrics, PatientStatus};

pub fn slice_truth(diagnosis: Class, label: InfectionLabel) -> Class {
    match label {
        InfectionLabel::Infectious => diagnosis,
        InfectionLabel::NonInfectious => Class::Normal,
    }
}

/// Returns `predictions` with truth labels joined in and metrics filled.
pub fn evaluate(predictions: &EvalReport, manifest: &DatasetManifest) -> Result<EvalReport> {
    let entries: HashMap<&str, &ManifestEntry> = manifest
        .entries
        .iter()
        .map(|e| (e.patient_id.as_str(), e))
        .collect();
    let truth_of = |id: &str| entries.get(id).and_then(|e| e.diagnosis);

    let mut report = predictions.clone();
    let mut patient_cm = ConfusionMatrix::new(Class::COUNT);
    let (mut skipped, mut failed, mut labeled) = (0u64, 0u64, 0u64);
    for record in &mut report.patients {
        record.truth = truth_of(&record.patient_id);
        if record.status == PatientStatus::Failed {
            failed += 1;
        }
        let Some(truth) = record.truth else {
            skipped += 1;
            continue;
        };
        labeled += 1;
        if let (PatientStatus::Ok, Some(label)) = (record.status, record.label) {
            patient_cm.record(truth.index(), label.index())?;
        }
    }
    if labeled == 0 {
        return Err(Error::NoLabeledPatients);
    }

    let mut slice_cm = ConfusionMatrix::new(Class::COUNT);
    for slice in &report.slices {
        let Some(entry) = entries.get(slice.patient_id.as_str()) else {
            continue;
        };
        let (Some(diagnosis), Some(labels)) = (entry.diagnosis, &entry.slice_labels) else {
            continue;
        };
        if let Some(&label) = labels.get(&slice.slice_index) {
            let truth = slice_truth(diagnosis, label);
            slice_cm.record(truth.index(), slice.predicted_class.index())?;
        }
    }

    report.metrics.patient_level = LevelMetrics::from_matrix(&patient_cm);
    report.metrics.slice_level = LevelMetrics::from_matrix(&slice_cm);
    report.metrics.skipped_patients = skipped;
    report.metrics.failed_patients = failed;
    Ok(report)
}
