//! Deterministic stand-ins for pretrained perceptual encoders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tensor::ImageTensor;
use super::LossError;

pub trait Embedder {
    /// Output length for inputs of the given shape, or a shape error.
    fn output_dim(&self, shape: [usize; 3]) -> Result<usize, LossError>;

    fn embed(&self, t: &ImageTensor) -> Result<Vec<f64>, LossError>;

    /// Whether embeddings of the two shapes are comparable.
    fn comparable(&self, a: [usize; 3], b: [usize; 3]) -> bool {
        matches!((self.output_dim(a), self.output_dim(b)), (Ok(x), Ok(y)) if x == y)
    }
}

/// Mean of every channel.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChannelMean;

impl Embedder for ChannelMean {
    fn output_dim(&self, shape: [usize; 3]) -> Result<usize, LossError> {
        Ok(shape[0])
    }

    fn embed(&self, t: &ImageTensor) -> Result<Vec<f64>, LossError> {
        let n = t.plane() as f64;
        Ok((0..t.channels).map(|c| t.channel(c).iter().sum::<f64>() / n).collect())
    }
}

/// Fixed random linear projection to `dim` outputs. The matrix is regenerated
/// from `seed` and the flattened input length, so two calls always agree.
#[derive(Debug, Clone, Copy)]
pub struct RandomProjection {
    pub seed: u64,
    pub dim: usize,
}

impl RandomProjection {
    pub fn new(seed: u64, dim: usize) -> Self {
        Self { seed, dim }
    }
}

impl Embedder for RandomProjection {
    fn output_dim(&self, _shape: [usize; 3]) -> Result<usize, LossError> {
        Ok(self.dim)
    }

    fn comparable(&self, a: [usize; 3], b: [usize; 3]) -> bool {
        a == b
    }

    fn embed(&self, t: &ImageTensor) -> Result<Vec<f64>, LossError> {
        let n = t.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (n as u64).rotate_left(32));
        let bound = (3.0 / n as f64).sqrt();
        Ok((0..self.dim).map(|_| t.data.iter().map(|v| v * rng.random_range(-bound..=bound)).sum()).collect())
    }
}

/// Sum-reduced L1 distance between the two embeddings.
pub fn embedding_l1(e: &dyn Embedder, a: &ImageTensor, b: &ImageTensor) -> Result<f64, LossError> {
    if !e.comparable(a.shape(), b.shape()) {
        return Err(LossError::Shape(format!("embedder cannot compare {:?} with {:?}", a.shape(), b.shape())));
    }
    let (ea, eb) = (e.embed(a)?, e.embed(b)?);
    Ok(ea.iter().zip(&eb).map(|(x, y)| (x - y).abs()).sum())
}
