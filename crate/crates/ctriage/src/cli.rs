//! Command-line front end.
//!
//! Every failure prints one line `ctriage: error[<category>]: <message>` to
//! stderr and exits 1; usage errors exit 2.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ctriage_core::mock::{MockStage1, MockStage2};
use ctriage_core::tensor::{make_slice_tensor, TENSOR_SIDE};
use ctriage_core::{select_middle_slices, CtVolume, Stage1Backend, Stage2Backend, VoteWeights, WindowSpec, Windowing};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::manifest::{load_manifest, write_manifest, write_slice_labels, DatasetManifest, ManifestEntry};
use crate::onnx::{load_stage1, load_stage2};
use crate::pipeline::{LabelOutcome, Pipeline, PipelineConfig, Stage1Labelers, DEFAULT_THRESHOLD};
use crate::report::{read_report, write_report, EvalReport, PatientStatus};
use crate::volume_io::load_volume;

#[derive(Debug, Parser)]
#[command(name = "ctriage", version, about = "Two-stage CT volume triage")]
pub struct Cli {
    /// TOML file with defaults for any shared flag; flags win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Window volumes and dump slice tensors as PNG plus a selection summary.
    Preprocess {
        /// Volume to preprocess (raw or sidecar path); repeatable.
        #[arg(long, value_name = "PATH")]
        volume: Vec<PathBuf>,
        #[command(flatten)]
        shared: SharedArgs,
    },
    /// Label central slices infectious / non_infectious with Stage-1 models.
    LabelSlices {
        #[command(flatten)]
        shared: SharedArgs,
    },
    /// Classify every slice and vote a label per patient.
    Diagnose {
        #[command(flatten)]
        shared: SharedArgs,
    },
    /// Diagnose (or reuse `--predictions`) and score against manifest truth.
    Evaluate {
        /// Existing prediction report to score instead of running a backend.
        #[arg(long, value_name = "PATH")]
        predictions: Option<PathBuf>,
        #[command(flatten)]
        shared: SharedArgs,
    },
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharedArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Stage-1 ONNX model: `PATH` for both diseases, or `cap=PATH` / `covid19=PATH`.
    #[arg(long, value_name = "[DISEASE=]PATH")]
    pub stage1_model: Vec<String>,
    #[arg(long, value_name = "PATH")]
    pub stage2_model: Option<PathBuf>,
    /// Mock backend rule for the stage the subcommand runs.
    #[arg(long, value_name = "RULESPEC")]
    pub mock: Option<String>,
    #[arg(long, value_name = "HU", allow_negative_numbers = true)]
    pub window_center: Option<f64>,
    #[arg(long, value_name = "HU")]
    pub window_width: Option<f64>,
    /// Vote weights `w_covid,w_cap,w_normal` as plain decimals.
    #[arg(long, value_name = "W,W,W")]
    pub weights: Option<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Voxels already hold display values in [0, 255]; skip HU windowing.
    #[arg(long)]
    #[serde(default)]
    pub assume_prewindowed: bool,
}

impl SharedArgs {
    /// Fills unset fields from `file`.
    fn merged_over(self, file: SharedArgs) -> SharedArgs {
        SharedArgs {
            manifest: self.manifest.or(file.manifest),
            out: self.out.or(file.out),
            stage1_model: if self.stage1_model.is_empty() {
                file.stage1_model
            } else {
                self.stage1_model
            },
            stage2_model: self.stage2_model.or(file.stage2_model),
            mock: self.mock.or(file.mock),
            window_center: self.window_center.or(file.window_center),
            window_width: self.window_width.or(file.window_width),
            weights: self.weights.or(file.weights),
            threshold: self.threshold.or(file.threshold),
            jobs: self.jobs.or(file.jobs),
            assume_prewindowed: self.assume_prewindowed || file.assume_prewindowed,
        }
    }
}

/// Where a stage's predictions come from.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendSource {
    Model(PathBuf),
    Mock(String),
}

/// Validated settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub stage1_cap: Option<BackendSource>,
    pub stage1_covid19: Option<BackendSource>,
    pub stage2: Option<BackendSource>,
    pub pipeline: PipelineConfig,
}

impl RunConfig {
    pub fn from_args(args: SharedArgs, config_file: Option<&Path>) -> Result<Self> {
        let args = match config_file {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let file: SharedArgs = toml::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
                args.merged_over(file)
            }
            None => args,
        };

        let windowing = if args.assume_prewindowed {
            Windowing::Prewindowed
        } else {
            let default = WindowSpec::default();
            Windowing::Hu(WindowSpec::new(
                args.window_center.unwrap_or(default.center_hu()),
                args.window_width.unwrap_or(default.width_hu()),
            )?)
        };
        let weights = match &args.weights {
            Some(w) => VoteWeights::parse_triple(w)?,
            None => VoteWeights::default(),
        };
        let threshold = args.threshold.unwrap_or(DEFAULT_THRESHOLD);
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::Config(format!("--threshold {threshold} outside [0, 1]")));
        }
        if args.jobs == Some(0) {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }

        let mut stage1_cap = None;
        let mut stage1_covid19 = None;
        for spec in &args.stage1_model {
            let (targets, path) = match spec.split_once('=') {
                Some((disease, path)) => match disease.trim().to_ascii_lowercase().as_str() {
                    "cap" => (vec![&mut stage1_cap], path),
                    "covid19" | "covid-19" | "covid" => (vec![&mut stage1_covid19], path),
                    other => {
                        return Err(Error::Config(format!(
                            "--stage1-model: unknown disease `{other}` (expected cap or covid19)"
                        )))
                    }
                },
                None => (vec![&mut stage1_cap, &mut stage1_covid19], spec.as_str()),
            };
            for slot in targets {
                if slot.replace(BackendSource::Model(PathBuf::from(path))).is_some() {
                    return Err(Error::Config("--stage1-model given twice for one disease".into()));
                }
            }
        }

        Ok(RunConfig {
            manifest: args.manifest,
            out: args.out,
            stage1_cap: exclusive(stage1_cap, args.mock.clone(), "--stage1-model")?,
            stage1_covid19: exclusive(stage1_covid19, args.mock.clone(), "--stage1-model")?,
            stage2: exclusive(
                args.stage2_model.map(BackendSource::Model),
                args.mock,
                "--stage2-model",
            )?,
            pipeline: PipelineConfig {
                windowing,
                weights,
                threshold,
                jobs: args.jobs,
            },
        })
    }

    fn manifest(&self) -> Result<DatasetManifest> {
        let path = self
            .manifest
            .as_ref()
            .ok_or_else(|| Error::Config("--manifest is required".into()))?;
        load_manifest(path)
    }

    fn out(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::Config("--out is required".into()))
    }

    fn stage2_backend(&self) -> Result<Box<dyn Stage2Backend>> {
        match &self.stage2 {
            Some(BackendSource::Model(path)) => Ok(Box::new(load_stage2(path)?)),
            Some(BackendSource::Mock(rule)) => Ok(Box::new(MockStage2::parse(rule)?)),
            None => Err(Error::Config("one of --stage2-model or --mock is required".into())),
        }
    }

    fn stage1_labelers(&self) -> Result<Stage1Labelers> {
        let build = |source: &Option<BackendSource>| -> Result<Option<Box<dyn Stage1Backend>>> {
            Ok(match source {
                Some(BackendSource::Model(path)) => Some(Box::new(load_stage1(path)?)),
                Some(BackendSource::Mock(rule)) => Some(Box::new(MockStage1::parse(rule)?)),
                None => None,
            })
        };
        let labelers = Stage1Labelers {
            cap: build(&self.stage1_cap)?,
            covid19: build(&self.stage1_covid19)?,
        };
        if labelers.cap.is_none() && labelers.covid19.is_none() {
            return Err(Error::Config("one of --stage1-model or --mock is required".into()));
        }
        Ok(labelers)
    }
}

/// A stage takes a model path or a mock rule, never both.
fn exclusive(
    model: Option<BackendSource>,
    mock: Option<String>,
    flag: &str,
) -> Result<Option<BackendSource>> {
    match (model, mock) {
        (Some(_), Some(_)) => Err(Error::Config(format!("{flag} and --mock are mutually exclusive"))),
        (Some(m), None) => Ok(Some(m)),
        (None, mock) => Ok(mock.map(BackendSource::Mock)),
    }
}

/// Parses `args` (program name first), runs the subcommand, returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("ctriage: error[{}]: {message}", e.code());
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let config_file = cli.config.as_deref();
    match cli.command {
        Command::Preprocess { volume, shared } => {
            cmd_preprocess(&RunConfig::from_args(shared, config_file)?, &volume)
        }
        Command::LabelSlices { shared } => cmd_label_slices(&RunConfig::from_args(shared, config_file)?),
        Command::Diagnose { shared } => cmd_diagnose(&RunConfig::from_args(shared, config_file)?),
        Command::Evaluate { predictions, shared } => {
            cmd_evaluate(&RunConfig::from_args(shared, config_file)?, predictions.as_deref())
        }
    }
}

#[derive(Debug, Serialize)]
struct PreprocessSummary<'a> {
    patient_id: &'a str,
    n_slices: usize,
    height: usize,
    width: usize,
    central_window: [usize; 2],
    central_slices: usize,
    windowing: String,
    tensor_side: usize,
    warnings: Vec<&'static str>,
}

/// Keeps patient ids usable as directory and file names.
fn file_stem(patient_id: &str) -> String {
    patient_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn cmd_preprocess(config: &RunConfig, volumes: &[PathBuf]) -> Result<()> {
    let mut paths: Vec<PathBuf> = volumes.to_vec();
    if config.manifest.is_some() {
        let manifest = config.manifest()?;
        paths.extend(manifest.entries.iter().map(|e| manifest.resolve(&e.volume_path)));
    }
    if paths.is_empty() {
        return Err(Error::Config("preprocess needs --volume or --manifest".into()));
    }
    let out = config.out()?;
    let windowing = config.pipeline.windowing;
    for path in &paths {
        let volume = load_volume(path)?;
        let summary = preprocess_one(&volume, windowing, out)?;
        println!(
            "{}: {} slices, central [{}, {})",
            summary.patient_id, summary.n_slices, summary.central_window[0], summary.central_window[1]
        );
    }
    Ok(())
}

fn preprocess_one<'a>(volume: &'a CtVolume, windowing: Windowing, out: &Path) -> Result<PreprocessSummary<'a>> {
    let dir = out.join(file_stem(volume.patient_id()));
    create_dir(&dir)?;
    for index in 0..volume.n_slices() {
        let tensor = make_slice_tensor(volume, index, windowing)?;
        let side = TENSOR_SIDE as u32;
        let image = image::GrayImage::from_raw(side, side, tensor.to_gray_u8())
            .expect("plane is TENSOR_SIDE squared");
        let png = dir.join(format!("slice_{index:04}.png"));
        image
            .save_with_format(&png, image::ImageFormat::Png)
            .map_err(|e| Error::io(&png, std::io::Error::other(e)))?;
    }
    let window = select_middle_slices(volume.n_slices_nonzero());
    let summary = PreprocessSummary {
        patient_id: volume.patient_id(),
        n_slices: volume.n_slices(),
        height: volume.height(),
        width: volume.width(),
        central_window: [window.start, window.end],
        central_slices: window.len(),
        windowing: match windowing {
            Windowing::Hu(spec) => format!("center {} HU, width {} HU", spec.center_hu(), spec.width_hu()),
            Windowing::Prewindowed => "prewindowed".into(),
        },
        tensor_side: TENSOR_SIDE,
        warnings: if window.is_short_volume() {
            vec![crate::pipeline::WARN_SHORT_VOLUME]
        } else {
            Vec::new()
        },
    };
    let path = dir.join("summary.json");
    let mut json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    json.push(b'\n');
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

/// Writes `<out>/<patient>_slice_labels.csv` per labeled patient and a
/// `<out>/manifest.csv` pointing at them.
pub fn cmd_label_slices(config: &RunConfig) -> Result<()> {
    let manifest = config.manifest()?;
    let labelers = config.stage1_labelers()?;
    let out = config.out()?;
    create_dir(out)?;
    let pipeline = Pipeline::new(config.pipeline)?;

    let mut labeled_manifest = DatasetManifest {
        base_dir: out.to_owned(),
        entries: Vec::new(),
    };
    for (entry, (patient_id, outcome)) in manifest.entries.iter().zip(pipeline.label_dataset(&manifest, &labelers)) {
        let volume_path = absolute(&manifest.resolve(&entry.volume_path));
        let mut labeled_entry = ManifestEntry {
            volume_path,
            slice_labels_path: None,
            slice_labels: None,
            ..entry.clone()
        };
        match outcome {
            LabelOutcome::Labeled(labeling) => {
                let labels = labeling.to_slice_labels();
                let name = format!("{}_slice_labels.csv", file_stem(&patient_id));
                write_slice_labels(&labels, out.join(&name))?;
                let infectious = labels.values().filter(|l| **l == crate::manifest::InfectionLabel::Infectious).count();
                println!("{patient_id}: {infectious}/{} central slices infectious", labels.len());
                labeled_entry.slice_labels_path = Some(PathBuf::from(name));
                labeled_entry.slice_labels = Some(labels);
            }
            LabelOutcome::Skipped(why) => eprintln!("ctriage: warning[skipped]: {patient_id}: {why}"),
            LabelOutcome::Failed(why) => eprintln!("ctriage: warning[failed]: {patient_id}: {why}"),
        }
        labeled_manifest.entries.push(labeled_entry);
    }
    write_manifest(&labeled_manifest, out.join("manifest.csv"))
}

fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_owned())
}

pub fn cmd_diagnose(config: &RunConfig) -> Result<()> {
    let manifest = config.manifest()?;
    let backend = config.stage2_backend()?;
    let out = config.out()?;
    let report = Pipeline::new(config.pipeline)?.run_dataset(&manifest, backend.as_ref());
    write_report(&report, out)?;
    print_patients(&report);
    Ok(())
}

pub fn cmd_evaluate(config: &RunConfig, predictions: Option<&Path>) -> Result<()> {
    let manifest = config.manifest()?;
    let report = match predictions {
        Some(path) => {
            if config.stage2.is_some() {
                return Err(Error::Config(
                    "--predictions cannot be combined with --stage2-model or --mock".into(),
                ));
            }
            read_report(path)?
        }
        None => {
            let backend = config.stage2_backend()?;
            Pipeline::new(config.pipeline)?.run_dataset(&manifest, backend.as_ref())
        }
    };
    let scored = evaluate(&report, &manifest)?;
    if let Some(out) = &config.out {
        write_report(&scored, out)?;
    }
    print_patients(&scored);
    println!();
    print!("{}", scored.metrics.slice_level.render("Slice-level confusion matrix"));
    println!();
    print!("{}", scored.metrics.patient_level.render("Patient-level confusion matrix"));
    println!(
        "skipped patients (unknown truth): {}; failed patients: {}",
        scored.metrics.skipped_patients, scored.metrics.failed_patients
    );
    Ok(())
}

fn print_patients(report: &EvalReport) {
    for p in &report.patients {
        match (p.status, p.label, p.scores) {
            (PatientStatus::Ok, Some(label), Some(s)) => println!(
                "{}: {label} (COVID19 {}, CAP {}, Normal {})",
                p.patient_id, s.covid19, s.cap, s.normal
            ),
            _ => println!(
                "{}: FAILED ({})",
                p.patient_id,
                p.error.as_deref().unwrap_or("unknown error")
            ),
        }
    }
}
