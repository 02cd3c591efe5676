use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, MlpModel};
use super::NeuralError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl Default for Optimizer {
    fn default() -> Self {
        Self::adam()
    }
}

/// First/second moment estimates and step count. Moments are allocated on the
/// first Adam step.
#[derive(Debug, Clone, Default)]
pub struct OptimizerState {
    pub step: u64,
    moments: Option<(Gradients, Gradients)>,
}

impl OptimizerState {
    pub fn new() -> Self {
        Self::default()
    }
}

fn check_shapes(model: &MlpModel, grads: &Gradients) -> Result<(), NeuralError> {
    let ok = model.layers.len() == grads.layers.len()
        && model
            .layers
            .iter()
            .zip(&grads.layers)
            .all(|(l, g)| l.weights.data.len() == g.weights.data.len() && l.bias.len() == g.bias.len());
    if ok {
        Ok(())
    } else {
        Err(NeuralError::Shape("gradient shapes do not match model".into()))
    }
}

/// Applies one update in place. SGD: `w -= lr * g`. Adam: bias-corrected
/// moment estimates, `w -= lr * m_hat / (sqrt(v_hat) + eps)`.
pub fn optimizer_step(
    model: &mut MlpModel,
    state: &mut OptimizerState,
    grads: &Gradients,
    optimizer: Optimizer,
    learning_rate: f64,
) -> Result<(), NeuralError> {
    check_shapes(model, grads)?;
    state.step += 1;
    match optimizer {
        Optimizer::Sgd => {
            for (l, g) in model.layers.iter_mut().zip(&grads.layers) {
                for (w, gw) in l.weights.data.iter_mut().zip(&g.weights.data) {
                    *w -= learning_rate * gw;
                }
                for (b, gb) in l.bias.iter_mut().zip(&g.bias) {
                    *b -= learning_rate * gb;
                }
            }
        }
        Optimizer::Adam { beta1, beta2, eps } => {
            let (m, v) =
                state.moments.get_or_insert_with(|| (Gradients::zeros_like(model), Gradients::zeros_like(model)));
            if m.layers.len() != grads.layers.len() {
                return Err(NeuralError::Shape("optimizer state does not match model".into()));
            }
            let t = state.step as f64;
            let c1 = 1.0 - beta1.powf(t);
            let c2 = 1.0 - beta2.powf(t);
            let update = |w: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *w -= learning_rate * m_hat / (v_hat.sqrt() + eps);
            };
            for (i, l) in model.layers.iter_mut().enumerate() {
                let (g, ml, vl) = (&grads.layers[i], &mut m.layers[i], &mut v.layers[i]);
                for k in 0..l.weights.data.len() {
                    update(&mut l.weights.data[k], g.weights.data[k], &mut ml.weights.data[k], &mut vl.weights.data[k]);
                }
                for k in 0..l.bias.len() {
                    update(&mut l.bias[k], g.bias[k], &mut ml.bias[k], &mut vl.bias[k]);
                }
            }
        }
    }
    Ok(())
}
