//! Body-ratio factor predictor and its self-supervised training loop.
//!
//! Training scales the segment lengths of each dataset pose group-wise by
//! random factors `s`, predicts `tau` from the scaled pose, and penalizes the
//! L1 distance between the original lengths and the scaled lengths divided by
//! `tau`. Each pose's lengths are expressed in units of its own mean segment
//! length. The encoder hides absolute size, so factors are only defined up to
//! a common scale; this anchors them so that `l / tau` keeps the pose's mean
//! segment length.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::encode::{encode_factor_input, ENCODING_SIZE};
use super::mlp::{mlp_init, Gradients, MlpConfig, MlpModel};
use super::optim::{optimizer_step, OptimizerState};
use super::{NeuralError, TrainConfig};
use crate::deform::{scale_groups, GroupFactors};
use crate::pose::{to_cartesian, to_polar, KeypointSet, PolarPose, Topology, NUM_GROUPS};

fn check_io(m: &MlpModel, outputs: usize) -> Result<(), NeuralError> {
    if m.input_size() != ENCODING_SIZE || m.output_size() != outputs {
        return Err(NeuralError::Shape(format!(
            "model maps {} -> {}, expected {ENCODING_SIZE} -> {outputs}",
            m.input_size(),
            m.output_size()
        )));
    }
    Ok(())
}

/// `tau[g] = exp(raw[g])`, so factors are positive by construction.
pub fn predict_factors(m: &MlpModel, k: &KeypointSet, topo: &Topology) -> Result<GroupFactors, NeuralError> {
    check_io(m, NUM_GROUPS)?;
    let raw = m.predict(&encode_factor_input(k, topo))?;
    let tau: [f64; NUM_GROUPS] = std::array::from_fn(|g| raw[g].clamp(-700.0, 700.0).exp());
    GroupFactors::new(tau).map_err(|e| NeuralError::InvalidArgument(e.to_string()))
}

/// Per-sample loss `mean_i |l_i - l'_i * exp(-raw[g(i)])|` over the 17 body
/// segments and its gradient with respect to `raw`.
pub fn factor_loss(original: &PolarPose, scaled: &PolarPose, raw: &[f64], topo: &Topology) -> (f64, [f64; NUM_GROUPS]) {
    let unit_o = mean_segment_length(original, topo);
    let unit_s = mean_segment_length(scaled, topo);
    let n = topo.segments().count();

    let mut loss = 0.0;
    let mut grad = [0.0; NUM_GROUPS];
    for (_, j) in topo.segments() {
        let g = topo.group(j).index();
        let target = original.entries[j].length / unit_o;
        let recovered = scaled.entries[j].length / unit_s * (-raw[g]).exp();
        let diff = target - recovered;
        loss += diff.abs();
        // d|target - c e^{-r}| / dr = sign(diff) * c e^{-r}
        grad[g] += if diff > 0.0 {
            recovered
        } else if diff < 0.0 {
            -recovered
        } else {
            0.0
        };
    }
    let n = n as f64;
    grad.iter_mut().for_each(|v| *v /= n);
    (loss / n, grad)
}

fn mean_segment_length(p: &PolarPose, topo: &Topology) -> f64 {
    let (sum, n) = topo.segments().fold((0.0, 0usize), |(s, n), (_, j)| (s + p.entries[j].length, n + 1));
    if sum > 0.0 {
        sum / n as f64
    } else {
        1.0
    }
}

pub(crate) fn sample_log_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        return lo;
    }
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// Trains a freshly initialized model; see [`train_factor_model_from`].
pub fn train_factor_model(
    dataset: &[KeypointSet],
    tc: &TrainConfig,
    mc: &MlpConfig,
    topo: &Topology,
) -> Result<(MlpModel, Vec<f64>), NeuralError> {
    let model = mlp_init(mc)?;
    train_factor_model_from(model, dataset, tc, topo)
}

/// Continues training `model`. Incomplete dataset poses are skipped. Returns
/// the model and the mean batch loss of every iteration.
pub fn train_factor_model_from(
    mut model: MlpModel,
    dataset: &[KeypointSet],
    tc: &TrainConfig,
    topo: &Topology,
) -> Result<(MlpModel, Vec<f64>), NeuralError> {
    tc.validate()?;
    check_io(&model, NUM_GROUPS)?;
    let poses: Vec<PolarPose> = dataset.iter().filter_map(|k| to_polar(k, topo).ok()).collect();
    if poses.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut state = OptimizerState::new();
    let mut grads = Gradients::zeros_like(&model);
    let mut history = Vec::with_capacity(tc.iterations);
    for _ in 0..tc.iterations {
        grads.fill_zero();
        let mut batch_loss = 0.0;
        for _ in 0..tc.batch_size {
            let original = &poses[rng.random_range(0..poses.len())];
            let scales: [f64; NUM_GROUPS] = std::array::from_fn(|_| sample_log_uniform(&mut rng, tc.scale_range));
            let scaled = scale_groups(original, &scales, topo);
            let input = encode_factor_input(&to_cartesian(&scaled, topo), topo);
            let (raw, cache) = model.forward(&input)?;
            let (loss, grad_raw) = factor_loss(original, &scaled, &raw, topo);
            batch_loss += loss;
            model.backward_accumulate(&cache, &grad_raw, &mut grads)?;
        }
        let inv = 1.0 / tc.batch_size as f64;
        grads.scale(inv);
        optimizer_step(&mut model, &mut state, &grads, tc.optimizer, tc.learning_rate)?;
        history.push(batch_loss * inv);
    }
    Ok((model, history))
}
