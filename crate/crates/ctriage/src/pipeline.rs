//! Two-stage orchestration over a worker pool.
//!
//! Stage-1 labels central slices of CAP / COVID-19 volumes as infectious or
//! not (dataset preparation only). Stage-2 classifies every slice of a
//! volume three ways, and the patient label comes from the weighted vote.
//! Results are always collected in input order, so output never depends on
//! the number of workers.

use std::collections::BTreeMap;
use std::sync::Mutex;

use ctriage_core::tensor::make_slice_tensor;
use ctriage_core::{
    select_middle_slices, vote, Class, ClassProbabilities, Concurrency, CtVolume,
    SliceTensor, SliceWindow, Stage1Backend, Stage2Backend, VoteCounts, VoteOutcome, VoteWeights,
    Windowing,
};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::manifest::{DatasetManifest, InfectionLabel, SliceLabels};
use crate::report::{EvalReport, PatientRecord, PatientStatus, ScoreRecord, SliceRecord};
use crate::volume_io::load_volume;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

pub const WARN_SHORT_VOLUME: &str = "short_volume";
pub const WARN_DEGENERATE_VOTE: &str = "degenerate_vote";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub windowing: Windowing,
    pub weights: VoteWeights,
    pub threshold: f64,
    /// Worker threads; `None` uses every available core.
    pub jobs: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            windowing: Windowing::default(),
            weights: VoteWeights::default(),
            threshold: DEFAULT_THRESHOLD,
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceVerdict {
    pub slice_index: usize,
    pub probabilities: ClassProbabilities,
    pub predicted_class: Class,
    pub is_central: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientPrediction {
    pub patient_id: String,
    pub window: SliceWindow,
    pub counts: VoteCounts,
    pub outcome: VoteOutcome,
    pub verdicts: Vec<SliceVerdict>,
    pub warnings: Vec<&'static str>,
}

impl PatientPrediction {
    pub fn label(&self) -> Class {
        self.outcome.label
    }
}

/// Stage-1 result for one volume: labels for central slices, `None` elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceLabeling {
    pub window: SliceWindow,
    pub labels: Vec<Option<InfectionLabel>>,
}

impl SliceLabeling {
    pub fn to_slice_labels(&self) -> SliceLabels {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|l| (i, l)))
            .collect()
    }
}

/// Serializes backend calls when the backend only supports one session.
struct Gate(Option<Mutex<()>>);

impl Gate {
    fn new(concurrency: Concurrency) -> Self {
        Gate(match concurrency {
            Concurrency::Shared => None,
            Concurrency::SingleSession => Some(Mutex::new(())),
        })
    }

    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        match &self.0 {
            None => f(),
            Some(lock) => {
                let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
                f()
            }
        }
    }
}

pub struct Pipeline {
    config: PipelineConfig,
    pool: rayon::ThreadPool,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        if !(0.0..=1.0).contains(&config.threshold) {
            return Err(Error::Config(format!(
                "threshold {} outside [0, 1]",
                config.threshold
            )));
        }
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(jobs) = config.jobs {
            if jobs == 0 {
                return Err(Error::Config("--jobs must be at least 1".into()));
            }
            builder = builder.num_threads(jobs);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        Ok(Pipeline { config, pool })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    fn tensor(&self, volume: &CtVolume, index: usize) -> Result<SliceTensor> {
        Ok(make_slice_tensor(volume, index, self.config.windowing)?)
    }

    /// Labels central slices infectious iff the Stage-1 probability is at
    /// least the threshold. Only CAP and COVID-19 volumes have a labeler.
    pub fn label_slices(
        &self,
        volume: &CtVolume,
        diagnosis: Class,
        backend: &dyn Stage1Backend,
    ) -> Result<SliceLabeling> {
        if diagnosis == Class::Normal {
            return Err(Error::NoStage1Labeler(diagnosis.name().into()));
        }
        let gate = Gate::new(backend.concurrency());
        self.pool
            .install(|| self.label_slices_gated(volume, backend, &gate))
    }

    fn label_slices_gated(
        &self,
        volume: &CtVolume,
        backend: &dyn Stage1Backend,
        gate: &Gate,
    ) -> Result<SliceLabeling> {
        let window = select_middle_slices(volume.n_slices_nonzero());
        let central: Vec<InfectionLabel> = window
            .range()
            .into_par_iter()
            .map(|i| {
                let t = self.tensor(volume, i)?;
                let p = gate.run(|| backend.predict(&t))?;
                Ok(if p.value() >= self.config.threshold {
                    InfectionLabel::Infectious
                } else {
                    InfectionLabel::NonInfectious
                })
            })
            .collect::<Result<_>>()?;
        let mut labels = vec![None; volume.n_slices()];
        for (slot, label) in labels[window.range()].iter_mut().zip(central) {
            *slot = Some(label);
        }
        Ok(SliceLabeling { window, labels })
    }

    /// One verdict per slice; any backend failure fails the whole volume.
    pub fn classify_slices(
        &self,
        volume: &CtVolume,
        backend: &dyn Stage2Backend,
    ) -> Result<Vec<SliceVerdict>> {
        let gate = Gate::new(backend.concurrency());
        self.pool
            .install(|| self.classify_slices_gated(volume, backend, &gate))
    }

    fn classify_slices_gated(
        &self,
        volume: &CtVolume,
        backend: &dyn Stage2Backend,
        gate: &Gate,
    ) -> Result<Vec<SliceVerdict>> {
        let window = select_middle_slices(volume.n_slices_nonzero());
        (0..volume.n_slices())
            .into_par_iter()
            .map(|i| {
                let t = self.tensor(volume, i)?;
                let probabilities = gate.run(|| backend.predict(&t))?;
                Ok(SliceVerdict {
                    slice_index: i,
                    probabilities,
                    predicted_class: probabilities.argmax(),
                    is_central: window.is_central(i),
                })
            })
            .collect()
    }

    pub fn diagnose(
        &self,
        volume: &CtVolume,
        backend: &dyn Stage2Backend,
    ) -> Result<PatientPrediction> {
        let gate = Gate::new(backend.concurrency());
        self.pool.install(|| self.diagnose_gated(volume, backend, &gate))
    }

    fn diagnose_gated(
        &self,
        volume: &CtVolume,
        backend: &dyn Stage2Backend,
        gate: &Gate,
    ) -> Result<PatientPrediction> {
        let window = select_middle_slices(volume.n_slices_nonzero());
        let verdicts = self.classify_slices_gated(volume, backend, gate)?;
        let counts = VoteCounts::tally(verdicts.iter().map(|v| (v.predicted_class, v.is_central)));
        let outcome = vote(&counts, &self.config.weights);
        let mut warnings = Vec::new();
        if window.is_short_volume() {
            warnings.push(WARN_SHORT_VOLUME);
        }
        if outcome.degenerate {
            warnings.push(WARN_DEGENERATE_VOTE);
        }
        Ok(PatientPrediction {
            patient_id: volume.patient_id().to_owned(),
            window,
            counts,
            outcome,
            verdicts,
            warnings,
        })
    }

    /// Diagnoses every manifest entry. Per-patient failures become failed
    /// records; the batch always completes.
    pub fn run_dataset(
        &self,
        manifest: &DatasetManifest,
        backend: &dyn Stage2Backend,
    ) -> EvalReport {
        let gate = Gate::new(backend.concurrency());
        let outcomes: Vec<(String, Result<PatientPrediction>)> = self.pool.install(|| {
            manifest
                .entries
                .par_iter()
                .map(|entry| {
                    let result = load_volume(manifest.resolve(&entry.volume_path))
                        .and_then(|volume| {
                            entry.check_slice_labels(volume.n_slices())?;
                            Ok(volume)
                        })
                        .and_then(|volume| self.diagnose_gated(&volume, backend, &gate));
                    (entry.patient_id.clone(), result)
                })
                .collect()
        });

        let mut report = EvalReport::default();
        for (patient_id, outcome) in outcomes {
            match outcome {
                Ok(prediction) => {
                    if prediction.patient_id != patient_id {
                        log::warn!(
                            "volume for manifest patient {patient_id} declares patient_id {}",
                            prediction.patient_id
                        );
                    }
                    report.slices.extend(prediction.verdicts.iter().map(|v| SliceRecord {
                        patient_id: patient_id.clone(),
                        slice_index: v.slice_index,
                        is_central: v.is_central,
                        probabilities: v.probabilities,
                        predicted_class: v.predicted_class,
                    }));
                    report.patients.push(patient_record(patient_id, &prediction));
                }
                Err(e) => {
                    log::warn!("patient {patient_id}: {e}");
                    report.patients.push(PatientRecord::failed(patient_id, e));
                    report.metrics.failed_patients += 1;
                }
            }
        }
        report
    }

    /// Stage-1 over a manifest, choosing the labeler by diagnosis. Entries
    /// without a labeler (Normal, Unknown) are reported as skipped.
    pub fn label_dataset(
        &self,
        manifest: &DatasetManifest,
        labelers: &Stage1Labelers,
    ) -> Vec<(String, LabelOutcome)> {
        let gates: BTreeMap<Class, Gate> = [Class::Cap, Class::Covid19]
            .into_iter()
            .map(|c| (c, Gate::new(labelers.for_class(c).map_or(Concurrency::Shared, |b| b.concurrency()))))
            .collect();
        self.pool.install(|| {
            manifest
                .entries
                .par_iter()
                .map(|entry| {
                    let outcome = match entry.diagnosis {
                        None => LabelOutcome::Skipped("diagnosis Unknown".into()),
                        Some(Class::Normal) => {
                            LabelOutcome::Skipped("no stage-1 labeler for Normal".into())
                        }
                        Some(class) => match labelers.for_class(class) {
                            None => LabelOutcome::Skipped(format!("no stage-1 model for {class}")),
                            Some(backend) => {
                                let result = load_volume(manifest.resolve(&entry.volume_path))
                                    .and_then(|v| {
                                        self.label_slices_gated(&v, backend, &gates[&class])
                                    });
                                match result {
                                    Ok(l) => LabelOutcome::Labeled(l),
                                    Err(e) => LabelOutcome::Failed(e.to_string()),
                                }
                            }
                        },
                    };
                    (entry.patient_id.clone(), outcome)
                })
                .collect()
        })
    }
}

fn patient_record(patient_id: String, p: &PatientPrediction) -> PatientRecord {
    PatientRecord {
        patient_id,
        status: PatientStatus::Ok,
        error: None,
        n_slices: Some(p.window.n_slices),
        central_window: Some([p.window.start, p.window.end]),
        counts: Some(p.counts),
        scores: Some(ScoreRecord {
            normal: p.outcome.scores.normal.to_f64(),
            cap: p.outcome.scores.cap.to_f64(),
            covid19: p.outcome.scores.covid19.to_f64(),
        }),
        label: Some(p.outcome.label),
        truth: None,
        warnings: p.warnings.iter().map(|w| (*w).to_owned()).collect(),
    }
}

/// Per-disease Stage-1 models.
#[derive(Default)]
pub struct Stage1Labelers {
    pub cap: Option<Box<dyn Stage1Backend>>,
    pub covid19: Option<Box<dyn Stage1Backend>>,
}

impl Stage1Labelers {
    pub fn for_class(&self, class: Class) -> Option<&dyn Stage1Backend> {
        match class {
            Class::Cap => self.cap.as_deref(),
            Class::Covid19 => self.covid19.as_deref(),
            Class::Normal => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LabelOutcome {
    Labeled(SliceLabeling),
    Skipped(String),
    Failed(String),
}

