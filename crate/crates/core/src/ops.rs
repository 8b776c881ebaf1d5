//! Reference implementations of the classifier head: global average
//! pooling, fully connected layers, sigmoid and softmax. All arithmetic is
//! f64.

use alloc::format;
use alloc::vec::Vec;

use crate::{Class, CoreError};

/// Tolerance on `Σ p = 1` for three-class outputs.
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// Backbone output, `H × W × C`, channel fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    height: usize,
    width: usize,
    channels: usize,
    values: Vec<f64>,
}

impl FeatureMap {
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        values: Vec<f64>,
    ) -> Result<Self, CoreError> {
        let expected = height * width * channels;
        if height == 0 || width == 0 || channels == 0 || values.len() != expected {
            return Err(CoreError::DimensionMismatch {
                expected,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite("feature map"));
        }
        Ok(FeatureMap {
            height,
            width,
            channels,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.values[(row * self.width + col) * self.channels + channel]
    }
}

/// Per-channel spatial mean.
pub fn global_average_pool(map: &FeatureMap) -> Vec<f64> {
    let mut sums = alloc::vec![0.0; map.channels];
    for pixel in map.values.chunks_exact(map.channels) {
        for (s, v) in sums.iter_mut().zip(pixel) {
            *s += v;
        }
    }
    let count = (map.height * map.width) as f64;
    sums.iter_mut().for_each(|s| *s /= count);
    sums
}

/// Fully connected layer with `weights[out][in]` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(
        inputs: usize,
        outputs: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self, CoreError> {
        if weights.len() != inputs * outputs {
            return Err(CoreError::DimensionMismatch {
                expected: inputs * outputs,
                actual: weights.len(),
            });
        }
        if bias.len() != outputs {
            return Err(CoreError::DimensionMismatch {
                expected: outputs,
                actual: bias.len(),
            });
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite("dense layer"));
        }
        Ok(DenseLayer {
            inputs,
            outputs,
            weights,
            bias,
        })
    }

    pub fn from_rows(rows: &[&[f64]], bias: &[f64]) -> Result<Self, CoreError> {
        let inputs = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != inputs) {
            return Err(CoreError::DimensionMismatch {
                expected: inputs,
                actual: bad.len(),
            });
        }
        let weights = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(inputs, rows.len(), weights, bias.to_vec())
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weight(&self, out: usize, input: usize) -> f64 {
        self.weights[out * self.inputs + input]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }
}

pub fn dense(x: &[f64], layer: &DenseLayer) -> Result<Vec<f64>, CoreError> {
    if x.len() != layer.inputs {
        return Err(CoreError::DimensionMismatch {
            expected: layer.inputs,
            actual: x.len(),
        });
    }
    if layer.inputs == 0 {
        return Ok(layer.bias.clone());
    }
    Ok(layer
        .weights
        .chunks_exact(layer.inputs)
        .zip(&layer.bias)
        .map(|(row, b)| b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>())
        .collect())
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Softmax with the maximum subtracted first, so large logits never overflow.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| libm::exp(v - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Stage-1 output: probability that a slice shows infection.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct InfectionProbability(f64);

impl InfectionProbability {
    pub fn new(p: f64) -> Result<Self, CoreError> {
        if (0.0..=1.0).contains(&p) {
            Ok(InfectionProbability(p))
        } else {
            Err(CoreError::ProbabilityRange(p))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Stage-2 output over (Normal, CAP, COVID-19).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassProbabilities {
    pub normal: f64,
    pub cap: f64,
    pub covid19: f64,
}

impl ClassProbabilities {
    pub fn new(values: [f64; 3]) -> Result<Self, CoreError> {
        if values.iter().any(|v| !v.is_finite() || !(0.0..=1.0).contains(v)) {
            return Err(CoreError::NotSimplex(format!("{values:?}")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(CoreError::NotSimplex(format!("{values:?} sums to {sum}")));
        }
        let [normal, cap, covid19] = values;
        Ok(ClassProbabilities {
            normal,
            cap,
            covid19,
        })
    }

    pub fn from_logits(logits: [f64; 3]) -> Result<Self, CoreError> {
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite("logits"));
        }
        let p = softmax(&logits);
        Self::new([p[0], p[1], p[2]])
    }

    pub fn get(&self, class: Class) -> f64 {
        match class {
            Class::Normal => self.normal,
            Class::Cap => self.cap,
            Class::Covid19 => self.covid19,
        }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.normal, self.cap, self.covid19]
    }

    pub fn argmax(&self) -> Class {
        Class::argmax_by(|c| self.get(c))
    }
}
