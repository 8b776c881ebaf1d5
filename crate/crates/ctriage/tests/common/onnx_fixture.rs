//! Tiny ONNX graphs honoring the backend wire contract, built in-process:
//! `x/255 -> ReduceMean(H, W) -> MatMul -> Add -> Softmax | Sigmoid`.

use std::path::Path;

use prost::Message;
use tract_onnx::pb::{
    self, tensor_shape_proto::dimension, type_proto, AttributeProto, GraphProto, ModelProto,
    NodeProto, OperatorSetIdProto, TensorProto, TensorShapeProto, TypeProto, ValueInfoProto,
};

const FLOAT: i32 = 1;

pub enum Head {
    Softmax,
    Sigmoid,
}

pub struct FixtureSpec {
    pub input_dims: Vec<i64>,
    /// Row-major `[3][outputs]`.
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
    pub head: Head,
    /// Replaces the head op type (to provoke unsupported-operator errors).
    pub head_op_override: Option<&'static str>,
}

impl FixtureSpec {
    pub fn stage2() -> Self {
        FixtureSpec {
            input_dims: vec![1, 512, 512, 3],
            weights: vec![1.5, -0.5, 0.25, -1.0, 2.0, 0.5, 0.75, 0.1, -2.0],
            bias: vec![0.1, -0.2, 0.3],
            head: Head::Softmax,
            head_op_override: None,
        }
    }

    pub fn stage1() -> Self {
        FixtureSpec {
            input_dims: vec![1, 512, 512, 3],
            weights: vec![3.0, -1.0, 0.5],
            bias: vec![-1.0],
            head: Head::Sigmoid,
            head_op_override: None,
        }
    }

    pub fn outputs(&self) -> usize {
        self.bias.len()
    }
}

fn value_info(name: &str, dims: &[i64]) -> ValueInfoProto {
    ValueInfoProto {
        name: name.into(),
        r#type: Some(TypeProto {
            value: Some(type_proto::Value::TensorType(type_proto::Tensor {
                elem_type: FLOAT,
                shape: Some(TensorShapeProto {
                    dim: dims
                        .iter()
                        .map(|&d| pb::tensor_shape_proto::Dimension {
                            value: Some(dimension::Value::DimValue(d)),
                            ..Default::default()
                        })
                        .collect(),
                }),
            })),
            ..Default::default()
        }),
        ..Default::default()
    }
}

fn initializer(name: &str, dims: &[i64], data: &[f32]) -> TensorProto {
    TensorProto {
        name: name.into(),
        dims: dims.to_vec(),
        data_type: FLOAT,
        float_data: data.to_vec(),
        ..Default::default()
    }
}

fn node(op: &str, inputs: &[&str], output: &str, attribute: Vec<AttributeProto>) -> NodeProto {
    NodeProto {
        op_type: op.into(),
        name: output.into(),
        input: inputs.iter().map(|s| s.to_string()).collect(),
        output: vec![output.into()],
        attribute,
        ..Default::default()
    }
}

pub fn build(spec: &FixtureSpec) -> ModelProto {
    let outputs = spec.outputs() as i64;
    let axes = AttributeProto {
        name: "axes".into(),
        r#type: 7,
        ints: vec![1, 2],
        ..Default::default()
    };
    let keepdims = AttributeProto {
        name: "keepdims".into(),
        r#type: 2,
        i: 0,
        ..Default::default()
    };
    let head = match spec.head {
        Head::Softmax => node(
            spec.head_op_override.unwrap_or("Softmax"),
            &["logits"],
            "probs",
            vec![AttributeProto {
                name: "axis".into(),
                r#type: 2,
                i: -1,
                ..Default::default()
            }],
        ),
        Head::Sigmoid => node(spec.head_op_override.unwrap_or("Sigmoid"), &["logits"], "probs", vec![]),
    };
    let graph = GraphProto {
        name: "fixture".into(),
        node: vec![
            node("Mul", &["image", "scale"], "scaled", vec![]),
            node("ReduceMean", &["scaled"], "pooled", vec![axes, keepdims]),
            node("MatMul", &["pooled", "weights"], "projected", vec![]),
            node("Add", &["projected", "bias"], "logits", vec![]),
            head,
        ],
        initializer: vec![
            initializer("scale", &[], &[1.0 / 255.0]),
            initializer("weights", &[3, outputs], &spec.weights),
            initializer("bias", &[outputs], &spec.bias),
        ],
        input: vec![value_info("image", &spec.input_dims)],
        output: vec![value_info("probs", &[1, outputs])],
        ..Default::default()
    };
    ModelProto {
        ir_version: 7,
        opset_import: vec![OperatorSetIdProto {
            domain: String::new(),
            version: 13,
        }],
        producer_name: "ctriage-tests".into(),
        graph: Some(graph),
        ..Default::default()
    }
}

pub fn write(spec: &FixtureSpec, path: &Path) {
    std::fs::write(path, build(spec).encode_to_vec()).unwrap();
}
