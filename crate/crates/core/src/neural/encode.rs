use crate::pose::{
    mean_visible_segment_length, normalize_params, KeypointSet, NormalizeParams, Point, Topology, NUM_JOINTS,
};

/// 18 normalized (x, y) pairs followed by 18 visibility bits.
pub const ENCODING_SIZE: usize = 3 * NUM_JOINTS;

/// Normalization used for model inputs. Falls back to the centroid of the
/// visible joints when the neck is hidden.
pub fn encoding_params(k: &KeypointSet, topo: &Topology) -> NormalizeParams {
    if let Ok(p) = normalize_params(k, topo) {
        return p;
    }
    let visible: Vec<Point> = k.joints.iter().flatten().copied().collect();
    let offset = if visible.is_empty() {
        Point::default()
    } else {
        let n = visible.len() as f64;
        Point::new(visible.iter().map(|p| p.x).sum::<f64>() / n, visible.iter().map(|p| p.y).sum::<f64>() / n)
    };
    let scale = mean_visible_segment_length(k, topo).filter(|s| *s > 0.0 && s.is_finite()).unwrap_or(1.0);
    NormalizeParams { scale, offset }
}

pub(crate) fn encode_with(k: &KeypointSet, params: &NormalizeParams) -> Vec<f64> {
    let mut out = vec![0.0; ENCODING_SIZE];
    for (j, p) in k.joints.iter().enumerate() {
        if let Some(p) = p {
            let q = params.apply(*p);
            out[2 * j] = q.x;
            out[2 * j + 1] = q.y;
            out[2 * NUM_JOINTS + j] = 1.0;
        }
    }
    out
}

/// Scale- and translation-free input vector for the pose models.
pub fn encode_factor_input(k: &KeypointSet, topo: &Topology) -> Vec<f64> {
    encode_with(k, &encoding_params(k, topo))
}
