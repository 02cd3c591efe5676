//! Pose retargeting by group-wise body-ratio factors, and the naive
//! per-segment length swap it is compared against.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pose::{to_cartesian, to_polar, GroupId, KeypointSet, PolarPose, PoseError, Topology, NUM_GROUPS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeformError {
    #[error(transparent)]
    Pose(#[from] PoseError),
    #[error("invalid body-ratio factor for group {group}: {value}")]
    InvalidFactors { group: GroupId, value: f64 },
}

/// Six strictly positive body-ratio factors, indexed by [`GroupId`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; NUM_GROUPS]", into = "[f64; NUM_GROUPS]")]
pub struct GroupFactors([f64; NUM_GROUPS]);

impl GroupFactors {
    pub fn new(tau: [f64; NUM_GROUPS]) -> Result<Self, DeformError> {
        for (i, &value) in tau.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(DeformError::InvalidFactors { group: GroupId::ALL[i], value });
            }
        }
        Ok(Self(tau))
    }

    pub fn ones() -> Self {
        Self([1.0; NUM_GROUPS])
    }

    pub fn get(&self, g: GroupId) -> f64 {
        self.0[g.index()]
    }

    pub fn values(&self) -> [f64; NUM_GROUPS] {
        self.0
    }

    /// Per-group ratio `self / other`.
    pub fn ratio_to(&self, other: &GroupFactors) -> [f64; NUM_GROUPS] {
        std::array::from_fn(|g| self.0[g] / other.0[g])
    }
}

impl TryFrom<[f64; NUM_GROUPS]> for GroupFactors {
    type Error = DeformError;

    fn try_from(tau: [f64; NUM_GROUPS]) -> Result<Self, Self::Error> {
        Self::new(tau)
    }
}

impl From<GroupFactors> for [f64; NUM_GROUPS] {
    fn from(f: GroupFactors) -> Self {
        f.0
    }
}

/// Per-group sums of segment lengths.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupLengths(pub [f64; NUM_GROUPS]);

impl GroupLengths {
    pub fn get(&self, g: GroupId) -> f64 {
        self.0[g.index()]
    }
}

/// The root segment (origin to neck) only places the figure and is excluded.
pub fn group_lengths(p: &PolarPose, topo: &Topology) -> GroupLengths {
    let mut out = [0.0; NUM_GROUPS];
    for (_, j) in topo.segments() {
        out[topo.group(j).index()] += p.entries[j].length;
    }
    GroupLengths(out)
}

/// Multiplies every non-root segment length by its group's ratio.
pub fn scale_groups(p: &PolarPose, ratio: &[f64; NUM_GROUPS], topo: &Topology) -> PolarPose {
    let mut out = *p;
    for (_, j) in topo.segments() {
        out.entries[j].length *= ratio[topo.group(j).index()];
    }
    out
}

/// Retargets `person` to the proportions described by `tau_a`: each segment
/// length becomes `tau_a[g] * l / tau_p[g]`; angles and the neck position are
/// kept.
pub fn deform(
    person: &KeypointSet,
    tau_p: &GroupFactors,
    tau_a: &GroupFactors,
    topo: &Topology,
) -> Result<KeypointSet, DeformError> {
    let polar = to_polar(person, topo)?;
    let ratio = tau_a.ratio_to(tau_p);
    Ok(to_cartesian(&scale_groups(&polar, &ratio, topo), topo))
}

/// Keeps the person's angles and copies the art pose's segment lengths one by
/// one. The root segment stays the person's.
pub fn deform_naive(person: &KeypointSet, art: &KeypointSet, topo: &Topology) -> Result<KeypointSet, DeformError> {
    let mut polar = to_polar(person, topo)?;
    let art = to_polar(art, topo)?;
    for (_, j) in topo.segments() {
        polar.entries[j].length = art.entries[j].length;
    }
    Ok(to_cartesian(&polar, topo))
}
