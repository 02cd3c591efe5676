use std::path::{Path, PathBuf};

use super::{parse_any, Error};
use crate::pose::KeypointSet;

/// A file that could not be read or parsed while loading a dataset.
#[derive(Debug)]
pub struct FileWarning {
    pub path: PathBuf,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct Dataset {
    pub poses: Vec<KeypointSet>,
    pub warnings: Vec<FileWarning>,
}

/// Loads every `*.json` file in `dir` (canonical or OpenPose), in filename
/// order. Unreadable or malformed files become warnings.
pub fn load_dataset(dir: &Path, confidence_threshold: f64) -> Result<Dataset, Error> {
    let io_err = |source| Error::Io { path: dir.to_path_buf(), source };
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));

    let mut out = Dataset::default();
    for path in files {
        let parsed = std::fs::read(&path)
            .map_err(|source| Error::Io { path: path.clone(), source })
            .and_then(|bytes| parse_any(&bytes, confidence_threshold));
        match parsed {
            Ok(doc) => out.poses.extend(doc.poses),
            Err(error) => out.warnings.push(FileWarning { path, error }),
        }
    }
    Ok(out)
}
