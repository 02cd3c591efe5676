//! Loss kernels for one-shot generator fine-tuning: L1 reconstruction, Gram
//! style distance, embedding distance and their weighted sum.

mod embed;
mod features;
mod kernels;
mod tensor;

use std::path::PathBuf;

use thiserror::Error;

pub use embed::{embedding_l1, ChannelMean, Embedder, RandomProjection};
pub use features::{avg_pool2, toy_features, FEATURE_CHANNELS};
pub use kernels::{gram, l1_loss, style_loss};
pub use tensor::{read_tensor, FeatureStack, ImageTensor};

#[derive(Debug, Error)]
pub enum LossError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("bad tensor file: {0}")]
    Format(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coefficients of the reconstruction, face-embedding and regularization
/// terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_l1: f64,
    pub lambda_face: f64,
    pub lambda_r: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { lambda_l1: 200.0, lambda_face: 1.0, lambda_r: 1.0 }
    }
}

pub fn total_objective(l1: f64, face: f64, r: f64, w: &LossWeights) -> f64 {
    w.lambda_l1 * l1 + w.lambda_face * face + w.lambda_r * r
}
