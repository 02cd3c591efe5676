use serde_json::Value;

use super::{parse_json, Error, PoseDocument};
use crate::pose::{KeypointSet, Point, NUM_JOINTS};

const VALUES_PER_PERSON: usize = NUM_JOINTS * 3;

/// Reads OpenPose `"people"` output; joints with confidence `<= 0` are
/// invisible.
pub fn parse_openpose(text: &[u8]) -> Result<PoseDocument, Error> {
    parse_openpose_with_threshold(text, 0.0)
}

pub fn parse_openpose_with_threshold(text: &[u8], threshold: f64) -> Result<PoseDocument, Error> {
    from_value(&parse_json(text)?, threshold)
}

pub(crate) fn from_value(value: &Value, threshold: f64) -> Result<PoseDocument, Error> {
    let people = value
        .get("people")
        .ok_or_else(|| Error::schema("people", "missing field"))?
        .as_array()
        .ok_or_else(|| Error::schema("people", "expected an array"))?;

    let mut poses = Vec::with_capacity(people.len());
    for (i, person) in people.iter().enumerate() {
        let path = format!("people[{i}].pose_keypoints_2d");
        let values = person
            .get("pose_keypoints_2d")
            .ok_or_else(|| Error::schema(&path, "missing field"))?
            .as_array()
            .ok_or_else(|| Error::schema(&path, "expected an array"))?;
        if values.len() != VALUES_PER_PERSON {
            return Err(Error::schema(
                &path,
                format!("person {i}: expected {VALUES_PER_PERSON} numbers, found {}", values.len()),
            ));
        }
        let mut nums = [0.0; VALUES_PER_PERSON];
        for (k, v) in values.iter().enumerate() {
            nums[k] = v.as_f64().ok_or_else(|| Error::schema(format!("{path}[{k}]"), "expected a number"))?;
        }
        let mut pose = KeypointSet::default();
        for (j, chunk) in nums.chunks_exact(3).enumerate() {
            if chunk[2] > threshold {
                pose.joints[j] = Some(Point::new(chunk[0], chunk[1]));
            }
        }
        poses.push(pose);
    }
    Ok(PoseDocument::new(poses))
}
