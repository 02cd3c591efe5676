//! Fixed 18-joint OpenPose body topology and the polar (angle, length)
//! parameterization of a 2D pose.
//!
//! Every joint owns the segment that connects it to its parent. The neck is
//! the root; its parent is the world origin `(0, 0)`, so the root segment
//! runs from the origin to the neck. Angles are signed, counterclockwise
//! positive in raw image coordinates (`atan2(dy, dx)` with y pointing down is
//! used as-is), and measured from the parent's segment direction.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NUM_JOINTS: usize = 18;
pub const NUM_GROUPS: usize = 6;

pub const NOSE: usize = 0;
pub const NECK: usize = 1;
pub const R_SHOULDER: usize = 2;
pub const R_ELBOW: usize = 3;
pub const R_WRIST: usize = 4;
pub const L_SHOULDER: usize = 5;
pub const L_ELBOW: usize = 6;
pub const L_WRIST: usize = 7;
pub const R_HIP: usize = 8;
pub const R_KNEE: usize = 9;
pub const R_ANKLE: usize = 10;
pub const L_HIP: usize = 11;
pub const L_KNEE: usize = 12;
pub const L_ANKLE: usize = 13;
pub const R_EYE: usize = 14;
pub const L_EYE: usize = 15;
pub const R_EAR: usize = 16;
pub const L_EAR: usize = 17;

/// Joint names in OpenPose BODY-18 index order.
pub const JOINT_NAMES: [&str; NUM_JOINTS] = [
    "nose",
    "neck",
    "r_shoulder",
    "r_elbow",
    "r_wrist",
    "l_shoulder",
    "l_elbow",
    "l_wrist",
    "r_hip",
    "r_knee",
    "r_ankle",
    "l_hip",
    "l_knee",
    "l_ankle",
    "r_eye",
    "l_eye",
    "r_ear",
    "l_ear",
];

pub fn joint_index(name: &str) -> Option<usize> {
    JOINT_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PoseError {
    #[error("joint {} ({}) is not visible", .0, JOINT_NAMES[*.0])]
    MissingJoint(usize),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
}

/// Body segment groups. Left/right symmetric segments always share a group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupId {
    Head = 0,
    Shoulders = 1,
    Arms = 2,
    Torso = 3,
    Waist = 4,
    Legs = 5,
}

impl GroupId {
    pub const ALL: [GroupId; NUM_GROUPS] =
        [GroupId::Head, GroupId::Shoulders, GroupId::Arms, GroupId::Torso, GroupId::Waist, GroupId::Legs];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupId::Head => "head",
            GroupId::Shoulders => "shoulders",
            GroupId::Arms => "arms",
            GroupId::Torso => "torso",
            GroupId::Waist => "waist",
            GroupId::Legs => "legs",
        }
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Parent/group structure of the 18-joint skeleton.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    parent: [Option<usize>; NUM_JOINTS],
    group: [GroupId; NUM_JOINTS],
    pairs: Vec<(usize, usize)>,
    root: usize,
    // Root first, every joint after its parent.
    order: Vec<usize>,
}

impl Topology {
    /// Builds a topology, checking that `parent` is a single tree whose root
    /// (the only joint with `None`) reaches every joint, and that mirrored
    /// pairs share a group.
    pub fn new(
        parent: [Option<usize>; NUM_JOINTS],
        group: [GroupId; NUM_JOINTS],
        pairs: Vec<(usize, usize)>,
    ) -> Result<Self, PoseError> {
        let roots: Vec<usize> = (0..NUM_JOINTS).filter(|&j| parent[j].is_none()).collect();
        if roots.len() != 1 {
            return Err(PoseError::InvalidTopology(format!("expected exactly one root, found {}", roots.len())));
        }
        let root = roots[0];
        if let Some(j) = parent.iter().flatten().find(|&&p| p >= NUM_JOINTS) {
            return Err(PoseError::InvalidTopology(format!("parent index {j} out of range")));
        }

        let mut order = vec![root];
        let mut head = 0;
        while head < order.len() {
            let p = order[head];
            head += 1;
            for j in 0..NUM_JOINTS {
                if parent[j] == Some(p) {
                    order.push(j);
                }
            }
        }
        if order.len() != NUM_JOINTS {
            return Err(PoseError::InvalidTopology("parent relation is not a connected tree".into()));
        }

        let mut seen = [false; NUM_JOINTS];
        for &(a, b) in &pairs {
            if a >= NUM_JOINTS || b >= NUM_JOINTS || a == b || seen[a] || seen[b] {
                return Err(PoseError::InvalidTopology(format!("bad mirror pair ({a}, {b})")));
            }
            seen[a] = true;
            seen[b] = true;
            if group[a] != group[b] {
                return Err(PoseError::InvalidTopology(format!(
                    "mirror pair ({a}, {b}) spans groups {} and {}",
                    group[a], group[b]
                )));
            }
        }

        Ok(Self { parent, group, pairs, root, order })
    }

    /// The canonical OpenPose BODY-18 tree rooted at the neck.
    pub fn openpose18() -> Self {
        use GroupId::*;
        let mut parent = [None; NUM_JOINTS];
        parent[NOSE] = Some(NECK);
        parent[R_EYE] = Some(NOSE);
        parent[L_EYE] = Some(NOSE);
        parent[R_EAR] = Some(R_EYE);
        parent[L_EAR] = Some(L_EYE);
        parent[R_SHOULDER] = Some(NECK);
        parent[L_SHOULDER] = Some(NECK);
        parent[R_ELBOW] = Some(R_SHOULDER);
        parent[L_ELBOW] = Some(L_SHOULDER);
        parent[R_WRIST] = Some(R_ELBOW);
        parent[L_WRIST] = Some(L_ELBOW);
        parent[R_HIP] = Some(NECK);
        parent[L_HIP] = Some(NECK);
        parent[R_KNEE] = Some(R_HIP);
        parent[L_KNEE] = Some(L_HIP);
        parent[R_ANKLE] = Some(R_KNEE);
        parent[L_ANKLE] = Some(L_KNEE);

        let mut group = [Head; NUM_JOINTS];
        group[NECK] = Torso;
        group[R_SHOULDER] = Shoulders;
        group[L_SHOULDER] = Shoulders;
        for j in [R_ELBOW, R_WRIST, L_ELBOW, L_WRIST] {
            group[j] = Arms;
        }
        group[R_HIP] = Torso;
        group[L_HIP] = Torso;
        group[R_KNEE] = Waist;
        group[L_KNEE] = Waist;
        group[R_ANKLE] = Legs;
        group[L_ANKLE] = Legs;

        let pairs = vec![
            (R_SHOULDER, L_SHOULDER),
            (R_ELBOW, L_ELBOW),
            (R_WRIST, L_WRIST),
            (R_HIP, L_HIP),
            (R_KNEE, L_KNEE),
            (R_ANKLE, L_ANKLE),
            (R_EYE, L_EYE),
            (R_EAR, L_EAR),
        ];
        Self::new(parent, group, pairs).expect("canonical topology is valid")
    }

    pub fn parent(&self, joint: usize) -> Option<usize> {
        self.parent[joint]
    }

    pub fn group(&self, joint: usize) -> GroupId {
        self.group[joint]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn left_right_pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Joints in root-outward order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Non-root joints, i.e. the 17 body segments, in index order.
    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..NUM_JOINTS).filter_map(|j| self.parent[j].map(|p| (p, j)))
    }

    /// Joint whose slot receives `joint` under a left/right mirror.
    pub fn mirror_of(&self, joint: usize) -> usize {
        for &(a, b) in &self.pairs {
            if a == joint {
                return b;
            }
            if b == joint {
                return a;
            }
        }
        joint
    }
}

impl Default for Topology {
    fn default() -> Self {
        Self::openpose18()
    }
}

/// 18 image-space joints; `None` marks an invisible joint.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KeypointSet {
    pub joints: [Option<Point>; NUM_JOINTS],
}

impl KeypointSet {
    pub fn from_points(points: [Point; NUM_JOINTS]) -> Self {
        Self { joints: points.map(Some) }
    }

    pub fn get(&self, joint: usize) -> Option<Point> {
        self.joints[joint]
    }

    pub fn is_visible(&self, joint: usize) -> bool {
        self.joints[joint].is_some()
    }

    pub fn is_complete(&self) -> bool {
        self.joints.iter().all(Option::is_some)
    }

    pub fn visible_count(&self) -> usize {
        self.joints.iter().flatten().count()
    }

    /// All points, or the first missing joint.
    pub fn points(&self) -> Result<[Point; NUM_JOINTS], PoseError> {
        let mut out = [Point::default(); NUM_JOINTS];
        for (j, p) in self.joints.iter().enumerate() {
            out[j] = p.ok_or(PoseError::MissingJoint(j))?;
        }
        Ok(out)
    }

    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Self {
        Self { joints: self.joints.map(|p| p.map(&f)) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolarEntry {
    pub alpha: f64,
    pub length: f64,
}

/// The (A, L) representation: per joint the angle to its parent segment and
/// the length of its own segment, plus the neck's image position.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolarPose {
    pub entries: [PolarEntry; NUM_JOINTS],
    pub root_position: Point,
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Direction a child of `joint` measures its angle against: the absolute
/// direction of the nearest ancestor-or-self segment with nonzero length,
/// falling back to the +x axis.
fn reference_direction(topo: &Topology, abs_dir: &[Option<f64>; NUM_JOINTS], mut joint: Option<usize>) -> f64 {
    while let Some(j) = joint {
        if let Some(d) = abs_dir[j] {
            return d;
        }
        joint = topo.parent(j);
    }
    0.0
}

/// Inverse kinematics: image coordinates to the polar representation.
pub fn to_polar(k: &KeypointSet, topo: &Topology) -> Result<PolarPose, PoseError> {
    let pts = k.points()?;
    let origin = Point::default();

    let mut abs_dir = [None; NUM_JOINTS];
    let mut entries = [PolarEntry::default(); NUM_JOINTS];
    for &j in topo.order() {
        let start = topo.parent(j).map_or(origin, |p| pts[p]);
        let (dx, dy) = (pts[j].x - start.x, pts[j].y - start.y);
        let length = dx.hypot(dy);
        let reference = reference_direction(topo, &abs_dir, topo.parent(j));
        let alpha = if length > 0.0 {
            let dir = dy.atan2(dx);
            abs_dir[j] = Some(dir);
            wrap_angle(dir - reference)
        } else {
            0.0
        };
        entries[j] = PolarEntry { alpha, length };
    }
    Ok(PolarPose { entries, root_position: pts[topo.root()] })
}

/// Forward kinematics: places the root at `root_position` and every other
/// joint root-outward along its rotated parent direction.
pub fn to_cartesian(p: &PolarPose, topo: &Topology) -> KeypointSet {
    let mut abs_dir = [None; NUM_JOINTS];
    let mut pts = [Point::default(); NUM_JOINTS];
    for &j in topo.order() {
        let e = p.entries[j];
        let reference = reference_direction(topo, &abs_dir, topo.parent(j));
        let dir = reference + e.alpha;
        if e.length > 0.0 {
            abs_dir[j] = Some(dir);
        }
        pts[j] = match topo.parent(j) {
            None => p.root_position,
            Some(parent) => {
                let base = pts[parent];
                Point::new(base.x + e.length * dir.cos(), base.y + e.length * dir.sin())
            }
        };
    }
    KeypointSet::from_points(pts)
}

/// Reflects about the vertical line `x = axis_x` and swaps left/right slots.
pub fn mirror(k: &KeypointSet, axis_x: f64, topo: &Topology) -> KeypointSet {
    let mut out = KeypointSet::default();
    for j in 0..NUM_JOINTS {
        out.joints[topo.mirror_of(j)] = k.joints[j].map(|p| Point::new(2.0 * axis_x - p.x, p.y));
    }
    out
}

/// Translation and scale removed by [`normalize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizeParams {
    pub scale: f64,
    pub offset: Point,
}

impl NormalizeParams {
    pub fn apply(&self, p: Point) -> Point {
        Point::new((p.x - self.offset.x) / self.scale, (p.y - self.offset.y) / self.scale)
    }

    pub fn invert(&self, p: Point) -> Point {
        Point::new(p.x * self.scale + self.offset.x, p.y * self.scale + self.offset.y)
    }
}

/// Mean length over segments whose both endpoints are visible.
pub fn mean_visible_segment_length(k: &KeypointSet, topo: &Topology) -> Option<f64> {
    let (sum, n) = topo
        .segments()
        .filter_map(|(p, j)| Some(k.get(p)?.distance(k.get(j)?)))
        .fold((0.0, 0usize), |(s, n), l| (s + l, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Normalization parameters: neck at the origin, unit mean segment length
/// (1.0 when nothing is measurable).
pub fn normalize_params(k: &KeypointSet, topo: &Topology) -> Result<NormalizeParams, PoseError> {
    let offset = k.get(topo.root()).ok_or(PoseError::MissingJoint(topo.root()))?;
    let scale = match mean_visible_segment_length(k, topo) {
        Some(s) if s > 0.0 && s.is_finite() => s,
        _ => 1.0,
    };
    Ok(NormalizeParams { scale, offset })
}

pub fn normalize(k: &KeypointSet, topo: &Topology) -> Result<(KeypointSet, NormalizeParams), PoseError> {
    let params = normalize_params(k, topo)?;
    Ok((k.map_points(|p| params.apply(p)), params))
}

pub fn denormalize(k: &KeypointSet, params: &NormalizeParams) -> KeypointSet {
    k.map_points(|p| params.invert(p))
}
