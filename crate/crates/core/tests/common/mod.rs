#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skeleform_core::pose::{KeypointSet, Point, Topology, NUM_JOINTS};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random full pose grown outward from the neck: every child sits at a random
/// direction and a length in [5, 120) from its parent.
pub fn random_pose(r: &mut impl Rng, topo: &Topology) -> KeypointSet {
    let mut pts = [Point::new(0.0, 0.0); NUM_JOINTS];
    for &j in topo.order() {
        pts[j] = match topo.parent(j) {
            None => Point::new(r.random_range(-500.0..500.0), r.random_range(-500.0..500.0)),
            Some(p) => {
                let a: f64 = r.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                let l: f64 = r.random_range(5.0..120.0);
                Point::new(pts[p].x + l * a.cos(), pts[p].y + l * a.sin())
            }
        };
    }
    KeypointSet::from_points(pts)
}

pub fn random_factors(r: &mut impl Rng) -> [f64; 6] {
    std::array::from_fn(|_| r.random_range(0.3..3.0))
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Largest coordinate difference relative to the pose's coordinate scale.
pub fn pose_rel_diff(a: &KeypointSet, b: &KeypointSet) -> f64 {
    let (pa, pb) = (a.points().unwrap(), b.points().unwrap());
    let scale = pa.iter().map(|p| p.x.abs().max(p.y.abs())).fold(1.0, f64::max);
    pa.iter().zip(&pb).map(|(p, q)| (p.x - q.x).abs().max((p.y - q.y).abs()) / scale).fold(0.0, f64::max)
}

pub fn seg_len(k: &KeypointSet, a: usize, b: usize) -> f64 {
    let (p, q) = (k.get(a).unwrap(), k.get(b).unwrap());
    (p.x - q.x).hypot(p.y - q.y)
}
