//! A fixed, weight-free feature pyramid so the style loss has something to
//! run on without pretrained networks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tensor::{FeatureStack, ImageTensor};
use super::LossError;

/// Channels produced by every level.
pub const FEATURE_CHANNELS: usize = 8;

/// Non-overlapping 2x2 window means. Height and width must be even.
pub fn avg_pool2(t: &ImageTensor) -> Result<ImageTensor, LossError> {
    if !t.height.is_multiple_of(2) || !t.width.is_multiple_of(2) {
        return Err(LossError::Shape(format!("cannot 2x pool {}x{}", t.height, t.width)));
    }
    let (h, w) = (t.height / 2, t.width / 2);
    let mut data = Vec::with_capacity(t.channels * h * w);
    for c in 0..t.channels {
        for y in 0..h {
            for x in 0..w {
                let s = t.get(c, 2 * y, 2 * x)
                    + t.get(c, 2 * y, 2 * x + 1)
                    + t.get(c, 2 * y + 1, 2 * x)
                    + t.get(c, 2 * y + 1, 2 * x + 1);
                data.push(s / 4.0);
            }
        }
    }
    Ok(ImageTensor { channels: t.channels, height: h, width: w, data })
}

/// 3x3 convolution with zero padding, `kernel` laid out `[out][in][3][3]`.
fn conv3x3(t: &ImageTensor, kernel: &[f64], out_channels: usize) -> ImageTensor {
    let (h, w, cin) = (t.height, t.width, t.channels);
    let mut data = vec![0.0; out_channels * h * w];
    for o in 0..out_channels {
        for i in 0..cin {
            let k = &kernel[(o * cin + i) * 9..(o * cin + i + 1) * 9];
            for y in 0..h {
                for x in 0..w {
                    let mut s = 0.0;
                    for dy in 0..3 {
                        let yy = y as isize + dy as isize - 1;
                        if yy < 0 || yy >= h as isize {
                            continue;
                        }
                        for dx in 0..3 {
                            let xx = x as isize + dx as isize - 1;
                            if xx < 0 || xx >= w as isize {
                                continue;
                            }
                            s += k[dy * 3 + dx] * t.get(i, yy as usize, xx as usize);
                        }
                    }
                    data[(o * h + y) * w + x] += s;
                }
            }
        }
    }
    ImageTensor { channels: out_channels, height: h, width: w, data }
}

/// Each level halves the resolution with 2x average pooling, then mixes
/// channels with a seeded 3x3 convolution into [`FEATURE_CHANNELS`] maps.
/// Level `l` (1-based) is `H / 2^l x W / 2^l`.
pub fn toy_features(img: &ImageTensor, levels: usize, seed: u64) -> Result<FeatureStack, LossError> {
    if levels == 0 {
        return Err(LossError::Shape("at least one feature level is required".into()));
    }
    let div = 1usize.checked_shl(levels as u32).unwrap_or(0);
    if div == 0 || !img.height.is_multiple_of(div) || !img.width.is_multiple_of(div) {
        return Err(LossError::Shape(format!("{}x{} is not divisible by 2^{levels}", img.height, img.width)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(levels);
    let mut current = img.clone();
    for _ in 0..levels {
        let pooled = avg_pool2(&current)?;
        let bound = (3.0 / (9 * pooled.channels) as f64).sqrt();
        let kernel: Vec<f64> =
            (0..FEATURE_CHANNELS * pooled.channels * 9).map(|_| rng.random_range(-bound..=bound)).collect();
        current = conv3x3(&pooled, &kernel, FEATURE_CHANNELS);
        layers.push(current.clone());
    }
    FeatureStack::new(layers)
}
