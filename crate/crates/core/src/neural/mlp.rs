//! Dense feed-forward network with manual reverse-mode gradients.
//!
//! Hidden layers apply the configured activation; the output layer is affine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NeuralError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative, evaluated from the pre-activation.
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = pre.tanh();
                1.0 - t * t
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    /// Input width, hidden widths, output width.
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
}

impl MlpConfig {
    pub fn new(layer_sizes: Vec<usize>, activation: Activation, seed: u64) -> Result<Self, NeuralError> {
        let c = Self { layer_sizes, activation, seed };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.layer_sizes.len() < 2 || self.layer_sizes.contains(&0) {
            return Err(NeuralError::InvalidArgument(format!(
                "layer sizes must have at least 2 positive entries, got {:?}",
                self.layer_sizes
            )));
        }
        Ok(())
    }

    /// `depth` weight layers of width `hidden` between `input` and `output`.
    pub fn stacked(input: usize, hidden: usize, output: usize, depth: usize, seed: u64) -> Self {
        let mut layer_sizes = vec![input];
        layer_sizes.extend(std::iter::repeat_n(hidden, depth.saturating_sub(1)));
        layer_sizes.push(output);
        Self { layer_sizes, activation: Activation::Relu, seed }
    }
}

/// Row-major `rows x cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// One affine layer: `weights` is `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { weights: Matrix::zeros(outputs, inputs), bias: vec![0.0; outputs] }
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.data.iter().chain(self.bias.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub config: MlpConfig,
    pub layers: Vec<Layer>,
}

/// Parameter gradients, shaped like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self { layers: model.layers.iter().map(|l| Layer::zeros(l.inputs(), l.outputs())).collect() }
    }

    pub fn fill_zero(&mut self) {
        for l in &mut self.layers {
            l.weights.data.fill(0.0);
            l.bias.fill(0.0);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weights.data.iter_mut().for_each(|v| *v *= s);
            l.bias.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(Layer::params)
    }
}

/// Per-layer values retained by a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer; `inputs[0]` is the network input.
    inputs: Vec<Vec<f64>>,
    /// Affine output of each layer before activation.
    pre: Vec<Vec<f64>>,
}

/// Dot product with four independent accumulators (fixed summation order).
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl MlpModel {
    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(config: &MlpConfig) -> Result<Self, NeuralError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let layers = config
            .layer_sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = init_bound(fan_in, fan_out);
                let mut layer = Layer::zeros(fan_in, fan_out);
                for v in &mut layer.weights.data {
                    *v = rng.random_range(-bound..=bound);
                }
                layer
            })
            .collect();
        Ok(Self { config: config.clone(), layers })
    }

    pub fn zeros(config: &MlpConfig) -> Result<Self, NeuralError> {
        config.validate()?;
        let layers = config.layer_sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Ok(Self { config: config.clone(), layers })
    }

    pub fn input_size(&self) -> usize {
        self.config.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.config.layer_sizes.last().expect("validated config")
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.data.len() + l.bias.len()).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(Layer::params)
    }

    /// Mutable access to parameter `index` in the flat order used by
    /// [`Self::params`].
    pub fn param_mut(&mut self, mut index: usize) -> Option<&mut f64> {
        for l in &mut self.layers {
            let nw = l.weights.data.len();
            if index < nw {
                return Some(&mut l.weights.data[index]);
            }
            index -= nw;
            if index < l.bias.len() {
                return Some(&mut l.bias[index]);
            }
            index -= l.bias.len();
        }
        None
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|v| v.is_finite())
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache), NeuralError> {
        if input.len() != self.input_size() {
            return Err(NeuralError::Shape(format!(
                "input has {} values, model expects {}",
                input.len(),
                self.input_size()
            )));
        }
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let z: Vec<f64> = (0..layer.outputs()).map(|r| dot(layer.weights.row(r), &x) + layer.bias[r]).collect();
            let next = if i == last { z.clone() } else { z.iter().map(|&v| self.config.activation.apply(v)).collect() };
            inputs.push(std::mem::replace(&mut x, next));
            pre.push(z);
        }
        Ok((x, ForwardCache { inputs, pre }))
    }

    /// Output only.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>, NeuralError> {
        self.forward(input).map(|(y, _)| y)
    }

    /// Adds the gradient of `output . grad_output` into `grads` and returns
    /// the gradient with respect to the input.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        grad_output: &[f64],
        grads: &mut Gradients,
    ) -> Result<Vec<f64>, NeuralError> {
        if grad_output.len() != self.output_size() {
            return Err(NeuralError::Shape(format!(
                "output gradient has {} values, model outputs {}",
                grad_output.len(),
                self.output_size()
            )));
        }
        if cache.inputs.len() != self.layers.len()
            || grads.layers.len() != self.layers.len()
            || cache.inputs.iter().zip(&self.layers).any(|(x, l)| x.len() != l.inputs())
        {
            return Err(NeuralError::Shape("cache or gradient buffer does not match model".into()));
        }

        let last = self.layers.len() - 1;
        let mut delta = grad_output.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            if i != last {
                for (d, &z) in delta.iter_mut().zip(&cache.pre[i]) {
                    *d *= self.config.activation.derivative(z);
                }
            }
            let g = &mut grads.layers[i];
            let x = &cache.inputs[i];
            let mut grad_in = vec![0.0; layer.inputs()];
            for (r, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                axpy(d, x, g.weights.row_mut(r));
                g.bias[r] += d;
                axpy(d, layer.weights.row(r), &mut grad_in);
            }
            delta = grad_in;
        }
        Ok(delta)
    }

    /// Fresh gradients of `output . grad_output` for one cached forward pass.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &[f64]) -> Result<(Gradients, Vec<f64>), NeuralError> {
        let mut grads = Gradients::zeros_like(self);
        let grad_input = self.backward_accumulate(cache, grad_output, &mut grads)?;
        Ok((grads, grad_input))
    }
}

pub fn init_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

pub fn mlp_init(config: &MlpConfig) -> Result<MlpModel, NeuralError> {
    MlpModel::init(config)
}

pub fn mlp_forward(m: &MlpModel, input: &[f64]) -> Result<(Vec<f64>, ForwardCache), NeuralError> {
    m.forward(input)
}

pub fn mlp_backward(
    m: &MlpModel,
    cache: &ForwardCache,
    grad_output: &[f64],
) -> Result<(Gradients, Vec<f64>), NeuralError> {
    m.backward(cache, grad_output)
}
