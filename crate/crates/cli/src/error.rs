use std::fmt;

use serde::Serialize;
use skeleform_core::deform::DeformError;
use skeleform_core::io;
use skeleform_core::losses::LossError;
use skeleform_core::neural::NeuralError;
use skeleform_core::pose::{PoseError, JOINT_NAMES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Parse,
    Schema,
    MissingJoint,
    InvalidFactors,
    ModelMissing,
    Internal,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Parse => "parse",
            ErrorCode::Schema => "schema",
            ErrorCode::MissingJoint => "missing_joint",
            ErrorCode::InvalidFactors => "invalid_factors",
            ErrorCode::ModelMissing => "model_missing",
            ErrorCode::Internal => "internal",
        }
    }

    /// HTTP status for the service: everything but `internal` is the
    /// client's fault.
    pub fn status(self) -> u16 {
        match self {
            ErrorCode::Internal => 500,
            _ => 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), path: None }
    }

    pub fn at(mut self, path: impl Into<String>) -> Self {
        self.path = Some(path.into());
        self
    }

    /// Prefixes the detail path, e.g. `poses[0]` becomes `person.poses[0]`.
    pub fn within(mut self, prefix: &str) -> Self {
        self.path = Some(match self.path.take() {
            Some(p) if !p.is_empty() => format!("{prefix}.{p}"),
            _ => prefix.to_string(),
        });
        self
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            error: &'a ApiError,
        }
        serde_json::to_string(&Body { error: self }).expect("error body serializes")
    }
}

impl ApiError {
    /// Message plus the detail path, without the code.
    pub fn detail(&self) -> String {
        match &self.path {
            Some(p) => format!("{} (at {p})", self.message),
            None => self.message.clone(),
        }
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.detail())
    }
}

impl std::error::Error for ApiError {}

impl From<io::Error> for ApiError {
    fn from(e: io::Error) -> Self {
        match e {
            io::Error::Parse { offset, message } => {
                ApiError::new(ErrorCode::Parse, format!("byte {offset}: {message}"))
            }
            io::Error::Schema { path, message } => ApiError::new(ErrorCode::Schema, message).at(path),
            io::Error::Io { path, source } => {
                ApiError::new(ErrorCode::Parse, format!("cannot read {}: {source}", path.display()))
            }
        }
    }
}

impl From<PoseError> for ApiError {
    fn from(e: PoseError) -> Self {
        match e {
            PoseError::MissingJoint(j) => {
                ApiError::new(ErrorCode::MissingJoint, e.to_string()).at(JOINT_NAMES.get(j).copied().unwrap_or("?"))
            }
            PoseError::InvalidTopology(_) => ApiError::new(ErrorCode::Internal, e.to_string()),
        }
    }
}

impl From<DeformError> for ApiError {
    fn from(e: DeformError) -> Self {
        match e {
            DeformError::Pose(p) => p.into(),
            DeformError::InvalidFactors { .. } => ApiError::new(ErrorCode::InvalidFactors, e.to_string()),
        }
    }
}

impl From<NeuralError> for ApiError {
    fn from(e: NeuralError) -> Self {
        match e {
            NeuralError::MissingNeck => ApiError::new(ErrorCode::MissingJoint, e.to_string()).at("neck"),
            NeuralError::Pose(p) => p.into(),
            NeuralError::EmptyDataset | NeuralError::InvalidArgument(_) => {
                ApiError::new(ErrorCode::Schema, e.to_string())
            }
            NeuralError::Parse { .. } | NeuralError::Schema(_) | NeuralError::Version(_) => {
                ApiError::new(ErrorCode::ModelMissing, format!("unusable model file: {e}"))
            }
            NeuralError::Shape(_) => ApiError::new(ErrorCode::ModelMissing, e.to_string()),
        }
    }
}

impl From<LossError> for ApiError {
    fn from(e: LossError) -> Self {
        match e {
            LossError::Shape(_) => ApiError::new(ErrorCode::Schema, e.to_string()),
            LossError::Format(_) | LossError::Io { .. } => ApiError::new(ErrorCode::Parse, e.to_string()),
        }
    }
}
