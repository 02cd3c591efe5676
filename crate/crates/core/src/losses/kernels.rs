use super::tensor::{FeatureStack, ImageTensor};
use super::LossError;
use crate::neural::mlp::{dot, Matrix};

fn same_shape(a: &ImageTensor, b: &ImageTensor) -> Result<(), LossError> {
    if a.shape() != b.shape() {
        return Err(LossError::Shape(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

/// Mean absolute difference and its gradient `sign(a - b) / N` (sign(0) = 0).
pub fn l1_loss(a: &ImageTensor, b: &ImageTensor) -> Result<(f64, ImageTensor), LossError> {
    same_shape(a, b)?;
    let n = a.len() as f64;
    let mut sum = 0.0;
    let grad = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| {
            let d = x - y;
            sum += d.abs();
            if d > 0.0 {
                1.0 / n
            } else if d < 0.0 {
                -1.0 / n
            } else {
                0.0
            }
        })
        .collect();
    Ok((sum / n, ImageTensor { data: grad, ..a.clone() }))
}

/// Channel correlation `G[i][j] = sum_p f[i][p] f[j][p] / (C H W)`.
pub fn gram(f: &ImageTensor) -> Matrix {
    let c = f.channels;
    let norm = f.len() as f64;
    let mut g = Matrix::zeros(c, c);
    for i in 0..c {
        for j in i..c {
            let v = dot(f.channel(i), f.channel(j)) / norm;
            g.data[i * c + j] = v;
            g.data[j * c + i] = v;
        }
    }
    g
}

/// `sum_l ||gram(fa_l) - gram(fb_l)||_F^2` and its gradient with respect to
/// every layer of `fa`. Spatial sizes may differ between the stacks.
pub fn style_loss(fa: &FeatureStack, fb: &FeatureStack) -> Result<(f64, Vec<ImageTensor>), LossError> {
    if fa.layers().len() != fb.layers().len() {
        return Err(LossError::Shape(format!("{} feature layers vs {}", fa.layers().len(), fb.layers().len())));
    }
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(fa.layers().len());
    for (l, (a, b)) in fa.layers().iter().zip(fb.layers()).enumerate() {
        if a.channels != b.channels {
            return Err(LossError::Shape(format!("layer {l}: {} channels vs {}", a.channels, b.channels)));
        }
        let (ga, gb) = (gram(a), gram(b));
        let diff: Vec<f64> = ga.data.iter().zip(&gb.data).map(|(x, y)| x - y).collect();
        total += diff.iter().map(|d| d * d).sum::<f64>();

        // dL/dF = 4 (Ga - Gb) F / N, using the symmetry of the difference.
        let c = a.channels;
        let plane = a.plane();
        let scale = 4.0 / a.len() as f64;
        let mut grad = ImageTensor { data: vec![0.0; a.len()], ..a.clone() };
        for i in 0..c {
            let out = &mut grad.data[i * plane..(i + 1) * plane];
            for k in 0..c {
                let w = scale * diff[i * c + k];
                if w != 0.0 {
                    for (o, v) in out.iter_mut().zip(a.channel(k)) {
                        *o += w * v;
                    }
                }
            }
        }
        grads.push(grad);
    }
    Ok((total, grads))
}
