//! ONNX model backends (pure-Rust `tract` runtime).
//!
//! Wire contract: one input of shape `1×512×512×3` (batch, H, W, C) holding
//! f32 values in `[0, 255]`, normalization baked into the graph; one output
//! with 1 element (Stage-1 infection probability) or 3 elements (Stage-2
//! probabilities in Normal, CAP, COVID-19 order).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ctriage_core::tensor::{HWC_LEN, TENSOR_CHANNELS, TENSOR_SIDE};
use ctriage_core::{
    BackendError, ClassProbabilities, Concurrency, InfectionProbability, SliceTensor,
    Stage1Backend, Stage2Backend,
};
use tract_onnx::prelude::*;
use tract_onnx::tract_hir::infer::Factoid;
use tract_onnx::tract_hir::internal::DimLike;
use tract_onnx::tract_core::ops::unimpl::UnimplementedOp;

use crate::error::{Error, ModelErrorKind, Result};

pub const INPUT_SHAPE: [usize; 4] = [1, TENSOR_SIDE, TENSOR_SIDE, TENSOR_CHANNELS];

type Plan = Arc<TypedRunnableModel>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelStage {
    Stage1,
    Stage2,
}

impl ModelStage {
    fn output_len(self) -> usize {
        match self {
            ModelStage::Stage1 => 1,
            ModelStage::Stage2 => 3,
        }
    }
}

#[derive(Clone)]
struct OnnxModel {
    path: PathBuf,
    plan: Plan,
}

impl std::fmt::Debug for OnnxModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OnnxModel").field("path", &self.path).finish()
    }
}

impl OnnxModel {
    fn run(&self, tensor: &SliceTensor) -> std::result::Result<Vec<f64>, BackendError> {
        let fail = |e: TractError| BackendError(format!("{}: {e:#}", self.path.display()));
        let mut data = vec![0f32; HWC_LEN];
        tensor
            .write_hwc(&mut data)
            .map_err(|e| BackendError(e.to_string()))?;
        let input = Tensor::from_shape(&INPUT_SHAPE, &data).map_err(fail)?;
        let outputs = self.plan.run(tvec!(input.into_tvalue())).map_err(fail)?;
        let output = outputs[0].cast_to::<f64>().map_err(fail)?;
        let values = output
            .to_plain_array_view::<f64>()
            .map_err(fail)?
            .iter()
            .copied()
            .collect();
        Ok(values)
    }
}

#[derive(Debug, Clone)]
pub struct OnnxStage1(OnnxModel);

#[derive(Debug, Clone)]
pub struct OnnxStage2(OnnxModel);

impl Stage1Backend for OnnxStage1 {
    fn predict(&self, tensor: &SliceTensor) -> std::result::Result<InfectionProbability, BackendError> {
        let values = self.0.run(tensor)?;
        InfectionProbability::new(values[0]).map_err(|e| BackendError(e.to_string()))
    }

    fn concurrency(&self) -> Concurrency {
        // each run spawns its own plan state
        Concurrency::Shared
    }
}

impl Stage2Backend for OnnxStage2 {
    fn predict(&self, tensor: &SliceTensor) -> std::result::Result<ClassProbabilities, BackendError> {
        let v = self.0.run(tensor)?;
        ClassProbabilities::new([v[0], v[1], v[2]]).map_err(|e| BackendError(e.to_string()))
    }

    fn concurrency(&self) -> Concurrency {
        Concurrency::Shared
    }
}

#[derive(Debug, Clone)]
pub enum LoadedBackend {
    Stage1(OnnxStage1),
    Stage2(OnnxStage2),
}

impl LoadedBackend {
    pub fn stage(&self) -> ModelStage {
        match self {
            LoadedBackend::Stage1(_) => ModelStage::Stage1,
            LoadedBackend::Stage2(_) => ModelStage::Stage2,
        }
    }
}

/// Loads a graph and decides its stage from the output size.
pub fn load_model_backend(path: impl AsRef<Path>) -> Result<LoadedBackend> {
    let (model, len) = load(path.as_ref())?;
    Ok(match len {
        1 => LoadedBackend::Stage1(OnnxStage1(model)),
        3 => LoadedBackend::Stage2(OnnxStage2(model)),
        _ => unreachable!("output size validated by load"),
    })
}

pub fn load_stage1(path: impl AsRef<Path>) -> Result<OnnxStage1> {
    expect_stage(path.as_ref(), ModelStage::Stage1).map(OnnxStage1)
}

pub fn load_stage2(path: impl AsRef<Path>) -> Result<OnnxStage2> {
    expect_stage(path.as_ref(), ModelStage::Stage2).map(OnnxStage2)
}

fn expect_stage(path: &Path, stage: ModelStage) -> Result<OnnxModel> {
    let (model, len) = load(path)?;
    if len != stage.output_len() {
        return Err(model_error(
            path,
            ModelErrorKind::ShapeMismatch,
            format!("{stage:?} expects {} output value(s), graph produces {len}", stage.output_len()),
        ));
    }
    Ok(model)
}

fn model_error(path: &Path, kind: ModelErrorKind, message: impl Into<String>) -> Error {
    Error::Model {
        path: path.to_owned(),
        kind,
        message: message.into(),
    }
}

fn load(path: &Path) -> Result<(OnnxModel, usize)> {
    if !path.is_file() {
        return Err(model_error(path, ModelErrorKind::Missing, "no such file"));
    }
    let parse = |e: TractError| model_error(path, ModelErrorKind::Parse, format!("{e:#}"));
    let mut model = tract_onnx::onnx().model_for_path(path).map_err(parse)?;

    if let Some(node) = model.nodes().iter().find(|n| n.op_is::<UnimplementedOp>()) {
        return Err(model_error(
            path,
            ModelErrorKind::UnsupportedOperator,
            format!("node `{}` uses an operator the runtime does not implement", node.name),
        ));
    }
    if model.inputs.len() != 1 || model.outputs.len() != 1 {
        return Err(model_error(
            path,
            ModelErrorKind::ShapeMismatch,
            format!(
                "expected one input and one output, graph has {} and {}",
                model.inputs.len(),
                model.outputs.len()
            ),
        ));
    }
    check_declared_input(path, &model.input_fact(0).map_err(parse)?.clone())?;

    model
        .set_input_fact(0, f32::fact(INPUT_SHAPE).into())
        .map_err(parse)?;
    let typed = model
        .into_optimized()
        .map_err(|e| model_error(path, ModelErrorKind::ShapeMismatch, format!("{e:#}")))?;
    let output_shape = typed.output_fact(0).map_err(parse)?.shape.clone();
    let len = output_shape
        .as_concrete()
        .map(|dims| dims.iter().product::<usize>())
        .ok_or_else(|| {
            model_error(
                path,
                ModelErrorKind::ShapeMismatch,
                format!("output shape {output_shape:?} is not concrete"),
            )
        })?;
    if len != 1 && len != 3 {
        return Err(model_error(
            path,
            ModelErrorKind::ShapeMismatch,
            format!("output has {len} values, expected 1 (stage-1) or 3 (stage-2)"),
        ));
    }
    let plan = typed.into_runnable().map_err(parse)?;
    Ok((
        OnnxModel {
            path: path.to_owned(),
            plan,
        },
        len,
    ))
}

/// Rejects graphs whose declared input conflicts with `1×512×512×3`.
/// Symbolic dimensions are accepted.
fn check_declared_input(path: &Path, fact: &InferenceFact) -> Result<()> {
    let Some(dims) = fact.shape.concretize() else {
        return Ok(());
    };
    let mismatch = || {
        model_error(
            path,
            ModelErrorKind::ShapeMismatch,
            format!("declared input {dims:?}, expected {INPUT_SHAPE:?}"),
        )
    };
    if dims.len() != INPUT_SHAPE.len() {
        return Err(mismatch());
    }
    for (dim, want) in dims.iter().zip(INPUT_SHAPE) {
        if let Ok(got) = dim.to_usize() {
            if got != want {
                return Err(mismatch());
            }
        }
    }
    Ok(())
}
