//! Dense network engine and the two pose models built on it: the body-ratio
//! factor predictor and the pose completion regressor.

pub mod completion;
pub mod encode;
pub mod factor;
pub mod gradcheck;
pub mod mlp;
pub mod model_file;
pub mod optim;
pub mod synth;

use thiserror::Error;

use crate::pose::PoseError;

pub use completion::{complete_pose, train_completion_model, train_completion_model_from, MaskedPose};
pub use encode::{encode_factor_input, ENCODING_SIZE};
pub use factor::{factor_loss, predict_factors, train_factor_model, train_factor_model_from};
pub use gradcheck::{grad_check, relative_error};
pub use mlp::{mlp_backward, mlp_forward, mlp_init, Activation, ForwardCache, Gradients, MlpConfig, MlpModel};
pub use model_file::{load_model, save_model, ModelKind, MODEL_VERSION};
pub use optim::{optimizer_step, Optimizer, OptimizerState};
pub use synth::synth_dataset;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("dataset has no usable poses")]
    EmptyDataset,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("the neck joint must be visible")]
    MissingNeck,
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unsupported model file version {0}")]
    Version(String),
    #[error(transparent)]
    Pose(#[from] PoseError),
}

/// Factor predictor: 54 inputs, 5 weight layers of width 256, 6 outputs.
pub fn factor_model_config(seed: u64) -> MlpConfig {
    MlpConfig::stacked(ENCODING_SIZE, 256, crate::pose::NUM_GROUPS, 5, seed)
}

/// Completion regressor: same trunk, 36 outputs (18 normalized x/y pairs).
pub fn completion_model_config(seed: u64) -> MlpConfig {
    MlpConfig::stacked(ENCODING_SIZE, 256, 2 * crate::pose::NUM_JOINTS, 5, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    /// Per-group scale factors are drawn log-uniformly from this range.
    pub scale_range: (f64, f64),
    /// Probability of hiding each non-neck joint during completion training.
    pub mask_prob: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 4000,
            batch_size: 32,
            learning_rate: 1e-3,
            optimizer: Optimizer::adam(),
            scale_range: (0.5, 2.0),
            mask_prob: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        let (lo, hi) = self.scale_range;
        let bad = |m: String| Err(NeuralError::InvalidArgument(m));
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return bad(format!("scale range must satisfy 0 < lo <= hi, got ({lo}, {hi})"));
        }
        if !(0.0..=1.0).contains(&self.mask_prob) {
            return bad(format!("mask probability must be in [0, 1], got {}", self.mask_prob));
        }
        Ok(())
    }
}
