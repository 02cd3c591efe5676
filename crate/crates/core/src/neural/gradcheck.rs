use super::mlp::MlpModel;
use super::NeuralError;

/// Magnitudes below this are compared absolutely.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// `|a - b| / max(|a|, |b|, RELATIVE_FLOOR)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_FLOOR)
}

/// Fixed output weighting so every output contributes to the probed scalar.
fn probe_weights(n: usize) -> Vec<f64> {
    (0..n).map(|k| 1.0 + 0.5 * ((k as f64) * 1.3).sin()).collect()
}

fn objective(m: &MlpModel, input: &[f64], w: &[f64]) -> Result<f64, NeuralError> {
    Ok(m.predict(input)?.iter().zip(w).map(|(y, w)| y * w).sum())
}

/// Worst relative discrepancy between backprop and central differences of
/// `sum_k w_k * output_k`, over every parameter and every input entry.
pub fn grad_check(model: &MlpModel, input: &[f64], eps: f64) -> Result<f64, NeuralError> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(NeuralError::InvalidArgument(format!("step must be positive, got {eps}")));
    }
    let w = probe_weights(model.output_size());
    let (_, cache) = model.forward(input)?;
    let (grads, grad_input) = model.backward(&cache, &w)?;

    let mut worst = 0.0f64;
    let mut probe = model.clone();
    for (i, &analytic) in grads.iter().enumerate() {
        let slot = probe.param_mut(i).expect("same layout");
        let orig = *slot;
        *slot = orig + eps;
        let hi = objective(&probe, input, &w)?;
        *probe.param_mut(i).expect("same layout") = orig - eps;
        let lo = objective(&probe, input, &w)?;
        *probe.param_mut(i).expect("same layout") = orig;
        worst = worst.max(relative_error(analytic, (hi - lo) / (2.0 * eps)));
    }

    let mut x = input.to_vec();
    for (i, &analytic) in grad_input.iter().enumerate() {
        let orig = x[i];
        x[i] = orig + eps;
        let hi = objective(model, &x, &w)?;
        x[i] = orig - eps;
        let lo = objective(model, &x, &w)?;
        x[i] = orig;
        worst = worst.max(relative_error(analytic, (hi - lo) / (2.0 * eps)));
    }
    Ok(worst)
}
