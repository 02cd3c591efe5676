//! Parametric humanoid skeletons for training when no pose corpus is at hand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pose::*;

/// Upright front-facing template, neck at the origin, in pixels.
const TEMPLATE: [(f64, f64); NUM_JOINTS] = [
    (0.0, -50.0),   // nose
    (0.0, 0.0),     // neck
    (-55.0, 5.0),   // r_shoulder
    (-65.0, 90.0),  // r_elbow
    (-72.0, 165.0), // r_wrist
    (55.0, 5.0),    // l_shoulder
    (65.0, 90.0),   // l_elbow
    (72.0, 165.0),  // l_wrist
    (-25.0, 150.0), // r_hip
    (-28.0, 270.0), // r_knee
    (-30.0, 385.0), // r_ankle
    (25.0, 150.0),  // l_hip
    (28.0, 270.0),  // l_knee
    (30.0, 385.0),  // l_ankle
    (-12.0, -62.0), // r_eye
    (12.0, -62.0),  // l_eye
    (-30.0, -55.0), // r_ear
    (30.0, -55.0),  // l_ear
];

/// Half-width, in radians, of the uniform perturbation of each joint's
/// relative angle.
const ANGLE_BOUNDS: [f64; NUM_JOINTS] = [
    0.25, // nose
    0.0,  // neck
    0.12, // r_shoulder
    0.5,  // r_elbow
    0.5,  // r_wrist
    0.12, // l_shoulder
    0.5,  // l_elbow
    0.5,  // l_wrist
    0.08, // r_hip
    0.25, // r_knee
    0.2,  // r_ankle
    0.08, // l_hip
    0.25, // l_knee
    0.2,  // l_ankle
    0.1,  // r_eye
    0.1,  // l_eye
    0.15, // r_ear
    0.15, // l_ear
];

const ROTATION_JITTER: f64 = 0.2;
const SCALE_JITTER: (f64, f64) = (0.85, 1.15);
const TEMPLATE_NECK: Point = Point::new(256.0, 128.0);
const TRANSLATION_JITTER: f64 = 32.0;

/// The template placed with its neck at (256, 128).
pub fn template_pose() -> KeypointSet {
    let pts = TEMPLATE.map(|(x, y)| Point::new(x + TEMPLATE_NECK.x, y + TEMPLATE_NECK.y));
    KeypointSet::from_points(pts)
}

/// Segment lengths of the template, indexed by child joint (root is 0).
pub fn template_lengths() -> [f64; NUM_JOINTS] {
    let topo = Topology::default();
    let mut out = [0.0; NUM_JOINTS];
    for (p, j) in topo.segments() {
        let (a, b) = (TEMPLATE[p], TEMPLATE[j]);
        out[j] = (a.0 - b.0).hypot(a.1 - b.1);
    }
    out
}

fn template_polar(topo: &Topology) -> PolarPose {
    let centered = KeypointSet::from_points(TEMPLATE.map(|(x, y)| Point::new(x, y)));
    // Neck at the origin: the root segment is empty and the neck's children
    // are measured against +x.
    to_polar(&centered, topo).expect("template is complete")
}

/// `n` complete poses: template proportions, every relative angle jittered
/// within its bound, plus global rotation, scale and translation jitter.
pub fn synth_dataset(n: usize, seed: u64) -> Vec<KeypointSet> {
    let topo = Topology::default();
    let base = template_polar(&topo);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut p = base;
            let rotation = rng.random_range(-ROTATION_JITTER..=ROTATION_JITTER);
            let scale = rng.random_range(SCALE_JITTER.0..=SCALE_JITTER.1);
            for (parent, j) in topo.segments() {
                let b = ANGLE_BOUNDS[j];
                let e = &mut p.entries[j];
                if b > 0.0 {
                    e.alpha += rng.random_range(-b..=b);
                }
                if parent == topo.root() {
                    e.alpha += rotation;
                }
                e.alpha = wrap_angle(e.alpha);
                e.length *= scale;
            }
            p.root_position = Point::new(
                TEMPLATE_NECK.x + rng.random_range(-TRANSLATION_JITTER..=TRANSLATION_JITTER),
                TEMPLATE_NECK.y + rng.random_range(-TRANSLATION_JITTER..=TRANSLATION_JITTER),
            );
            to_cartesian(&p, &topo)
        })
        .collect()
}
