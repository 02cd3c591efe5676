//! Pose file formats: OpenPose detector output, the canonical interchange
//! document, dataset directories and SVG overlays.

mod canonical;
mod dataset;
mod openpose;
mod svg;

use std::path::PathBuf;

use thiserror::Error;

use crate::pose::KeypointSet;

pub use canonical::{parse_canonical, write_pose, CANONICAL_VERSION, COORD_DECIMALS};
pub use dataset::{load_dataset, Dataset, FileWarning};
pub use openpose::{parse_openpose, parse_openpose_with_threshold};
pub use svg::{render_svg, SvgStyle, PALETTE};

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { path: path.into(), message: message.into() }
    }
}

/// A set of poses read from one file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoseDocument {
    pub poses: Vec<KeypointSet>,
    pub source: Option<String>,
    pub image_size: Option<(f64, f64)>,
}

impl PoseDocument {
    pub fn new(poses: Vec<KeypointSet>) -> Self {
        Self { poses, ..Default::default() }
    }

    pub fn single(pose: KeypointSet) -> Self {
        Self::new(vec![pose])
    }
}

/// Decodes UTF-8 JSON, mapping failures to byte offsets.
pub(crate) fn parse_json(text: &[u8]) -> Result<serde_json::Value, Error> {
    let s = std::str::from_utf8(text)
        .map_err(|e| Error::Parse { offset: e.valid_up_to(), message: "invalid UTF-8".into() })?;
    serde_json::from_str(s)
        .map_err(|e| Error::Parse { offset: byte_offset(s, e.line(), e.column()), message: e.to_string() })
}

fn byte_offset(s: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = s.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (line_start + column.saturating_sub(1)).min(s.len())
}

/// Parses either format. OpenPose output is recognized by its `"people"`
/// key (it carries a `"version"` too); everything else is read as canonical.
pub fn parse_any(text: &[u8], confidence_threshold: f64) -> Result<PoseDocument, Error> {
    let value = parse_json(text)?;
    if value.get("people").is_some() {
        openpose::from_value(&value, confidence_threshold)
    } else {
        canonical::from_value(&value)
    }
}
