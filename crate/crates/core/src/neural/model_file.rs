//! Versioned JSON model files. Weights are written row-major with 9
//! significant digits.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::mlp::{Activation, Layer, Matrix, MlpConfig, MlpModel};
use super::NeuralError;

pub const MODEL_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Factor,
    Completion,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Factor => "factor",
            ModelKind::Completion => "completion",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u64,
    kind: ModelKind,
    layer_sizes: Vec<usize>,
    activation: Activation,
    #[serde(default)]
    seed: u64,
    weights: Vec<LayerFile>,
}

fn round_sig(v: f64) -> f64 {
    format!("{v:.8e}").parse().unwrap_or(v)
}

pub fn save_model(m: &MlpModel, kind: ModelKind) -> String {
    let file = ModelFile {
        version: MODEL_VERSION,
        kind,
        layer_sizes: m.config.layer_sizes.clone(),
        activation: m.config.activation,
        seed: m.config.seed,
        weights: m
            .layers
            .iter()
            .map(|l| LayerFile {
                w: (0..l.outputs()).map(|r| l.weights.row(r).iter().map(|&v| round_sig(v)).collect()).collect(),
                b: l.bias.iter().map(|&v| round_sig(v)).collect(),
            })
            .collect(),
    };
    serde_json::to_string(&file).expect("model serializes")
}

pub fn load_model(bytes: &[u8]) -> Result<(ModelKind, MlpModel), NeuralError> {
    let value: Value = serde_json::from_slice(bytes)
        .map_err(|e| NeuralError::Parse { offset: byte_offset(bytes, e.line(), e.column()), message: e.to_string() })?;
    match value.get("version") {
        Some(v) if v.as_u64() == Some(MODEL_VERSION) => {}
        Some(v) => return Err(NeuralError::Version(v.to_string())),
        None => return Err(NeuralError::Schema("missing field `version`".into())),
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| NeuralError::Schema(e.to_string()))?;

    let config = MlpConfig { layer_sizes: file.layer_sizes, activation: file.activation, seed: file.seed };
    config.validate().map_err(|e| NeuralError::Schema(e.to_string()))?;
    let expected_layers = config.layer_sizes.len() - 1;
    if file.weights.len() != expected_layers {
        return Err(NeuralError::Schema(format!(
            "layer_sizes declares {expected_layers} weight layers, file has {}",
            file.weights.len()
        )));
    }

    let mut layers = Vec::with_capacity(expected_layers);
    for (i, (lf, dims)) in file.weights.into_iter().zip(config.layer_sizes.windows(2)).enumerate() {
        let (inputs, outputs) = (dims[0], dims[1]);
        if lf.w.len() != outputs || lf.w.iter().any(|row| row.len() != inputs) || lf.b.len() != outputs {
            return Err(NeuralError::Schema(format!("weights[{i}] does not match declared shape {outputs}x{inputs}")));
        }
        let data: Vec<f64> = lf.w.into_iter().flatten().collect();
        layers.push(Layer { weights: Matrix { rows: outputs, cols: inputs, data }, bias: lf.b });
    }
    Ok((file.kind, MlpModel { config, layers }))
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = bytes.split_inclusive(|&b| b == b'\n').take(line - 1).map(<[u8]>::len).sum();
    (line_start + column.saturating_sub(1)).min(bytes.len())
}
