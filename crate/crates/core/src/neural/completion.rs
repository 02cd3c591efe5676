//! Pose completion: regress all 18 normalized joint positions from a pose
//! with some joints hidden, trained by masking joints of complete poses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::encode::{encode_with, encoding_params, ENCODING_SIZE};
use super::mlp::{mlp_init, Gradients, MlpConfig, MlpModel};
use super::optim::{optimizer_step, OptimizerState};
use super::{NeuralError, TrainConfig};
use crate::pose::{mean_visible_segment_length, normalize_params, KeypointSet, Point, Topology, NUM_JOINTS};

const OUTPUTS: usize = 2 * NUM_JOINTS;
const MASK_REDRAWS: usize = 16;

/// Coordinates with hidden entries zeroed and the observation mask
/// (`true` = observed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskedPose {
    pub coords: [Point; NUM_JOINTS],
    pub mask: [bool; NUM_JOINTS],
}

impl MaskedPose {
    /// Hides every joint whose `hide` flag is set. The root is never hidden.
    pub fn new(full: &[Point; NUM_JOINTS], hide: &[bool; NUM_JOINTS], topo: &Topology) -> Self {
        let mask: [bool; NUM_JOINTS] = std::array::from_fn(|j| j == topo.root() || !hide[j]);
        let coords = std::array::from_fn(|j| if mask[j] { full[j] } else { Point::default() });
        Self { coords, mask }
    }

    pub fn to_keypoints(&self) -> KeypointSet {
        KeypointSet { joints: std::array::from_fn(|j| self.mask[j].then_some(self.coords[j])) }
    }

    pub fn hidden_count(&self) -> usize {
        self.mask.iter().filter(|m| !**m).count()
    }
}

fn draw_mask(rng: &mut ChaCha8Rng, full: &[Point; NUM_JOINTS], mask_prob: f64, topo: &Topology) -> MaskedPose {
    let mut masked = None;
    // Redraw masks that leave no measurable segment (the normalization scale
    // would be undefined).
    for _ in 0..MASK_REDRAWS {
        let hide: [bool; NUM_JOINTS] = std::array::from_fn(|_| rng.random_bool(mask_prob));
        let m = MaskedPose::new(full, &hide, topo);
        let measurable = mean_visible_segment_length(&m.to_keypoints(), topo).is_some();
        masked = Some(m);
        if measurable {
            break;
        }
    }
    masked.expect("at least one draw")
}

pub fn train_completion_model(
    dataset: &[KeypointSet],
    tc: &TrainConfig,
    mc: &MlpConfig,
    topo: &Topology,
) -> Result<(MlpModel, Vec<f64>), NeuralError> {
    train_completion_model_from(mlp_init(mc)?, dataset, tc, topo)
}

/// Loss per sample is the mean L1 error over the hidden joints' normalized
/// coordinates (zero when nothing is hidden). Incomplete poses are skipped.
pub fn train_completion_model_from(
    mut model: MlpModel,
    dataset: &[KeypointSet],
    tc: &TrainConfig,
    topo: &Topology,
) -> Result<(MlpModel, Vec<f64>), NeuralError> {
    tc.validate()?;
    check_io(&model)?;
    let poses: Vec<[Point; NUM_JOINTS]> = dataset.iter().filter_map(|k| k.points().ok()).collect();
    if poses.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut state = OptimizerState::new();
    let mut grads = Gradients::zeros_like(&model);
    let mut history = Vec::with_capacity(tc.iterations);
    let mut grad_out = vec![0.0; OUTPUTS];
    for _ in 0..tc.iterations {
        grads.fill_zero();
        let mut batch_loss = 0.0;
        for _ in 0..tc.batch_size {
            let full = &poses[rng.random_range(0..poses.len())];
            let masked = draw_mask(&mut rng, full, tc.mask_prob, topo);
            let hidden = masked.hidden_count();
            if hidden == 0 {
                continue;
            }
            let observed = masked.to_keypoints();
            let params = encoding_params(&observed, topo);
            let (pred, cache) = model.forward(&encode_with(&observed, &params))?;

            let n = (2 * hidden) as f64;
            let mut loss = 0.0;
            grad_out.fill(0.0);
            for j in (0..NUM_JOINTS).filter(|&j| !masked.mask[j]) {
                let target = params.apply(full[j]);
                for (c, t) in [(2 * j, target.x), (2 * j + 1, target.y)] {
                    let d = pred[c] - t;
                    loss += d.abs();
                    grad_out[c] = if d > 0.0 {
                        1.0 / n
                    } else if d < 0.0 {
                        -1.0 / n
                    } else {
                        0.0
                    };
                }
            }
            batch_loss += loss / n;
            model.backward_accumulate(&cache, &grad_out, &mut grads)?;
        }
        let inv = 1.0 / tc.batch_size as f64;
        grads.scale(inv);
        optimizer_step(&mut model, &mut state, &grads, tc.optimizer, tc.learning_rate)?;
        history.push(batch_loss * inv);
    }
    Ok((model, history))
}

fn check_io(m: &MlpModel) -> Result<(), NeuralError> {
    if m.input_size() != ENCODING_SIZE || m.output_size() != OUTPUTS {
        return Err(NeuralError::Shape(format!(
            "completion model maps {} -> {}, expected {ENCODING_SIZE} -> {OUTPUTS}",
            m.input_size(),
            m.output_size()
        )));
    }
    Ok(())
}

/// Fills hidden joints from the model's prediction. Visible joints are copied
/// unchanged.
pub fn complete_pose(m: &MlpModel, k: &KeypointSet, topo: &Topology) -> Result<KeypointSet, NeuralError> {
    let params = normalize_params(k, topo).map_err(|_| NeuralError::MissingNeck)?;
    check_io(m)?;
    if k.is_complete() {
        return Ok(*k);
    }
    let pred = m.predict(&encode_with(k, &params))?;
    let mut out = *k;
    for (j, slot) in out.joints.iter_mut().enumerate() {
        if slot.is_none() {
            *slot = Some(params.invert(Point::new(pred[2 * j], pred[2 * j + 1])));
        }
    }
    Ok(out)
}
