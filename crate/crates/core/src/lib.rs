//! Skeleton retargeting toolkit.
//!
//! * [`pose`]: 18-joint topology, forward/inverse kinematics, mirroring and
//!   normalization.
//! * [`io`]: OpenPose and canonical pose JSON, dataset loading, SVG overlays.
//! * [`deform`]: group-factor retargeting and the naive length swap.
//! * [`neural`]: a small dense network engine, the body-ratio factor
//!   predictor, the pose completion model and their training loops.
//! * [`losses`]: L1, Gram-matrix style and embedding-distance kernels with
//!   analytic gradients.

pub mod deform;
pub mod io;
pub mod losses;
pub mod neural;
pub mod pose;

pub use deform::{deform, deform_naive, group_lengths, DeformError, GroupFactors, GroupLengths};
pub use pose::{
    mirror, normalize, to_cartesian, to_polar, GroupId, KeypointSet, Point, PolarEntry, PolarPose, PoseError, Topology,
    JOINT_NAMES, NUM_GROUPS, NUM_JOINTS,
};
