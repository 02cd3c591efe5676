use serde::Serialize;
use serde_json::Value;

use super::{parse_json, Error, PoseDocument};
use crate::pose::{joint_index, KeypointSet, Point, JOINT_NAMES, NUM_JOINTS};

pub const CANONICAL_VERSION: u64 = 1;
/// Fractional digits kept for coordinates and image sizes.
pub const COORD_DECIMALS: usize = 6;

#[derive(Serialize)]
struct DocOut<'a> {
    version: u64,
    poses: Vec<PoseOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    image_size: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    source: Option<&'a str>,
}

#[derive(Serialize)]
struct PoseOut {
    joints: Vec<JointOut>,
}

#[derive(Serialize)]
struct JointOut {
    name: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
    visible: bool,
}

pub(crate) fn round_decimals(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    format!("{v:.COORD_DECIMALS$}").parse().unwrap_or(v)
}

/// Serializes to the versioned canonical JSON document.
pub fn write_pose(doc: &PoseDocument) -> String {
    let out = DocOut {
        version: CANONICAL_VERSION,
        poses: doc
            .poses
            .iter()
            .map(|pose| PoseOut {
                joints: (0..NUM_JOINTS)
                    .map(|j| {
                        let p = pose.get(j);
                        JointOut {
                            name: JOINT_NAMES[j],
                            x: p.map(|p| round_decimals(p.x)),
                            y: p.map(|p| round_decimals(p.y)),
                            visible: p.is_some(),
                        }
                    })
                    .collect(),
            })
            .collect(),
        image_size: doc.image_size.map(|(w, h)| [round_decimals(w), round_decimals(h)]),
        source: doc.source.as_deref(),
    };
    serde_json::to_string(&out).expect("canonical document serializes")
}

pub fn parse_canonical(text: &[u8]) -> Result<PoseDocument, Error> {
    from_value(&parse_json(text)?)
}

fn number(v: &Value, path: &str) -> Result<f64, Error> {
    v.as_f64().ok_or_else(|| Error::schema(path, "expected a number"))
}

pub(crate) fn from_value(value: &Value) -> Result<PoseDocument, Error> {
    let obj = value.as_object().ok_or_else(|| Error::schema("$", "expected an object"))?;
    match obj.get("version") {
        Some(v) if v.as_u64() == Some(CANONICAL_VERSION) => {}
        Some(v) => return Err(Error::schema("version", format!("unsupported version {v}"))),
        None => return Err(Error::schema("version", "missing field")),
    }

    let poses_v = obj
        .get("poses")
        .ok_or_else(|| Error::schema("poses", "missing field"))?
        .as_array()
        .ok_or_else(|| Error::schema("poses", "expected an array"))?;
    let mut poses = Vec::with_capacity(poses_v.len());
    for (i, pose_v) in poses_v.iter().enumerate() {
        poses.push(parse_pose(pose_v, &format!("poses[{i}]"))?);
    }

    let image_size = match obj.get("image_size") {
        None | Some(Value::Null) => None,
        Some(v) => {
            let arr = v
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| Error::schema("image_size", "expected [width, height]"))?;
            Some((number(&arr[0], "image_size[0]")?, number(&arr[1], "image_size[1]")?))
        }
    };
    let source = match obj.get("source") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(Error::schema("source", "expected a string")),
    };

    Ok(PoseDocument { poses, source, image_size })
}

/// Reads one `{"joints": [...]}` pose object; joints are matched by name.
pub(crate) fn parse_pose(value: &Value, path: &str) -> Result<KeypointSet, Error> {
    let joints = value
        .get("joints")
        .ok_or_else(|| Error::schema(format!("{path}.joints"), "missing field"))?
        .as_array()
        .ok_or_else(|| Error::schema(format!("{path}.joints"), "expected an array"))?;
    if joints.len() != NUM_JOINTS {
        return Err(Error::schema(
            format!("{path}.joints"),
            format!("expected {NUM_JOINTS} joints, found {}", joints.len()),
        ));
    }

    let mut pose = KeypointSet::default();
    let mut seen = [false; NUM_JOINTS];
    for (k, joint) in joints.iter().enumerate() {
        let jpath = format!("{path}.joints[{k}]");
        let name = joint
            .get("name")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::schema(format!("{jpath}.name"), "expected a joint name"))?;
        let idx = joint_index(name)
            .ok_or_else(|| Error::schema(format!("{jpath}.name"), format!("unknown joint {name:?}")))?;
        if std::mem::replace(&mut seen[idx], true) {
            return Err(Error::schema(format!("{jpath}.name"), format!("duplicate joint {name:?}")));
        }
        let visible = joint
            .get("visible")
            .and_then(Value::as_bool)
            .ok_or_else(|| Error::schema(format!("{jpath}.visible"), "expected a boolean"))?;
        if visible {
            let x = number(joint.get("x").unwrap_or(&Value::Null), &format!("{jpath}.x"))?;
            let y = number(joint.get("y").unwrap_or(&Value::Null), &format!("{jpath}.y"))?;
            pose.joints[idx] = Some(Point::new(x, y));
        }
    }
    Ok(pose)
}
