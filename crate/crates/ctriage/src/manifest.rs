//! Dataset manifests and slice-label files.
//!
//! Manifest CSV header: `patient_id,volume_path,diagnosis[,slice_labels_path]`.
//! Diagnosis tokens are case-insensitive `Normal`, `CAP`, `COVID19` or
//! `Unknown`. Slice-label CSV header: `slice_index,label` with labels
//! `infectious` / `non_infectious`. Relative paths resolve against the
//! manifest's directory.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ctriage_core::Class;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfectionLabel {
    Infectious,
    NonInfectious,
}

impl InfectionLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            InfectionLabel::Infectious => "infectious",
            InfectionLabel::NonInfectious => "non_infectious",
        }
    }
}

impl fmt::Display for InfectionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InfectionLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("infectious") {
            Ok(InfectionLabel::Infectious)
        } else if s.eq_ignore_ascii_case("non_infectious") {
            Ok(InfectionLabel::NonInfectious)
        } else {
            Err(format!("unknown slice label `{s}`"))
        }
    }
}

/// Sparse per-slice labels keyed by slice index.
pub type SliceLabels = BTreeMap<usize, InfectionLabel>;

/// Known class, or `None` for `Unknown`.
pub fn parse_diagnosis(token: &str) -> std::result::Result<Option<Class>, String> {
    if token.trim().eq_ignore_ascii_case("unknown") {
        return Ok(None);
    }
    token
        .parse::<Class>()
        .map(Some)
        .map_err(|_| format!("unknown diagnosis token `{}`", token.trim()))
}

pub fn diagnosis_token(diagnosis: Option<Class>) -> &'static str {
    diagnosis.map_or("Unknown", Class::name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub patient_id: String,
    /// As written in the manifest.
    pub volume_path: PathBuf,
    pub diagnosis: Option<Class>,
    pub slice_labels_path: Option<PathBuf>,
    pub slice_labels: Option<SliceLabels>,
}

impl ManifestEntry {
    /// Slice labels are only range-checked once the volume is known.
    pub fn check_slice_labels(&self, n_slices: usize) -> Result<()> {
        if let Some(labels) = &self.slice_labels {
            if let Some((&index, _)) = labels.range(n_slices..).next() {
                return Err(Error::SliceLabelRange {
                    patient_id: self.patient_id.clone(),
                    index,
                    n_slices,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    /// Directory relative paths resolve against.
    pub base_dir: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    pub fn entry(&self, patient_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.patient_id == patient_id)
    }

    /// Entries per diagnosis (`None` = Unknown).
    pub fn class_counts(&self) -> BTreeMap<Option<Class>, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.entries {
            *counts.entry(e.diagnosis).or_insert(0) += 1;
        }
        counts
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let bad = |message: String| Error::Manifest {
        path: path.to_owned(),
        message,
    };
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let required = |name: &str| column(name).ok_or_else(|| bad(format!("missing column `{name}`")));
    let (id_col, path_col, diag_col) = (
        required("patient_id")?,
        required("volume_path")?,
        required("diagnosis")?,
    );
    let labels_col = column("slice_labels_path");

    let base_dir = path.parent().map(Path::to_owned).unwrap_or_default();
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let line = row + 2;
        let field = |i: usize| record.get(i).unwrap_or("");
        let patient_id = field(id_col).to_owned();
        if patient_id.is_empty() {
            return Err(bad(format!("line {line}: empty patient_id")));
        }
        if !seen.insert(patient_id.clone()) {
            return Err(Error::DuplicatePatient(patient_id));
        }
        let volume_path = field(path_col);
        if volume_path.is_empty() {
            return Err(bad(format!("line {line}: empty volume_path")));
        }
        let diagnosis = parse_diagnosis(field(diag_col)).map_err(|m| bad(format!("line {line}: {m}")))?;
        let slice_labels_path = labels_col
            .map(field)
            .filter(|p| !p.is_empty())
            .map(PathBuf::from);
        let slice_labels = slice_labels_path
            .as_ref()
            .map(|p| read_slice_labels(base_dir.join(p)))
            .transpose()?;
        entries.push(ManifestEntry {
            patient_id,
            volume_path: PathBuf::from(volume_path),
            diagnosis,
            slice_labels_path,
            slice_labels,
        });
    }
    Ok(DatasetManifest { base_dir, entries })
}

/// Writes the manifest CSV only; slice-label files are written separately.
pub fn write_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Manifest {
        path: path.to_owned(),
        message: e.to_string(),
    };
    writer
        .write_record(["patient_id", "volume_path", "diagnosis", "slice_labels_path"])
        .map_err(csv_err)?;
    for e in &manifest.entries {
        let labels = e
            .slice_labels_path
            .as_ref()
            .map(|p| p.to_string_lossy().into_owned())
            .unwrap_or_default();
        writer
            .write_record([
                e.patient_id.as_str(),
                &e.volume_path.to_string_lossy(),
                diagnosis_token(e.diagnosis),
                &labels,
            ])
            .map_err(csv_err)?;
    }
    let bytes = writer.into_inner().expect("in-memory writer");
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_slice_labels(path: impl AsRef<Path>) -> Result<SliceLabels> {
    let path = path.as_ref();
    let bad = |message: String| Error::SliceLabels {
        path: path.to_owned(),
        message,
    };
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?;
    if headers.len() < 2
        || !headers[0].eq_ignore_ascii_case("slice_index")
        || !headers[1].eq_ignore_ascii_case("label")
    {
        return Err(bad("expected header `slice_index,label`".into()));
    }
    let mut labels = SliceLabels::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let line = row + 2;
        let index: usize = record[0]
            .parse()
            .map_err(|_| bad(format!("line {line}: bad slice index `{}`", &record[0])))?;
        let label: InfectionLabel = record[1].parse().map_err(|m| bad(format!("line {line}: {m}")))?;
        if labels.insert(index, label).is_some() {
            return Err(bad(format!("line {line}: slice {index} labeled twice")));
        }
    }
    Ok(labels)
}

pub fn write_slice_labels(labels: &SliceLabels, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("slice_index,label\n");
    for (index, label) in labels {
        out.push_str(&format!("{index},{label}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
