//! Request-level operations shared by the command line and the HTTP service.
//! Both front ends call these with the same bytes and write the returned
//! string verbatim, so their outputs are identical.

use serde::Deserialize;
use serde_json::Value;
use skeleform_core::deform::{deform, deform_naive, GroupFactors};
use skeleform_core::io::{parse_any, render_svg, write_pose, PoseDocument, SvgStyle};
use skeleform_core::neural::{complete_pose, load_model, predict_factors, MlpModel, ModelKind};
use skeleform_core::pose::{KeypointSet, Topology, NUM_GROUPS};

use crate::error::{ApiError, ErrorCode};

/// Models loaded once at startup and only read afterwards.
#[derive(Debug, Default, Clone)]
pub struct Models {
    pub factor: Option<MlpModel>,
    pub completion: Option<MlpModel>,
}

impl Models {
    pub fn kinds(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.factor.is_some() {
            out.push(ModelKind::Factor.name());
        }
        if self.completion.is_some() {
            out.push(ModelKind::Completion.name());
        }
        out
    }

    fn factor(&self) -> Result<&MlpModel, ApiError> {
        self.factor.as_ref().ok_or_else(|| ApiError::new(ErrorCode::ModelMissing, "no factor model is loaded"))
    }

    fn completion(&self) -> Result<&MlpModel, ApiError> {
        self.completion.as_ref().ok_or_else(|| ApiError::new(ErrorCode::ModelMissing, "no completion model is loaded"))
    }
}

/// Reads a model file and checks that it holds the expected kind.
pub fn load_model_file(path: &std::path::Path, expected: ModelKind) -> Result<MlpModel, ApiError> {
    let bytes = std::fs::read(path)
        .map_err(|e| ApiError::new(ErrorCode::ModelMissing, format!("cannot read {}: {e}", path.display())))?;
    let (kind, model) = load_model(&bytes).map_err(|e| ApiError::from(e).at(path.display().to_string()))?;
    if kind != expected {
        return Err(ApiError::new(
            ErrorCode::ModelMissing,
            format!("{} holds a {} model, expected {}", path.display(), kind.name(), expected.name()),
        ));
    }
    Ok(model)
}

pub fn parse_document(bytes: &[u8], threshold: f64) -> Result<PoseDocument, ApiError> {
    Ok(parse_any(bytes, threshold)?)
}

fn document_from_value(v: &Value, threshold: f64, field: &str) -> Result<PoseDocument, ApiError> {
    let bytes = serde_json::to_vec(v).map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))?;
    parse_any(&bytes, threshold).map_err(|e| ApiError::from(e).within(field))
}

fn first_pose(doc: &PoseDocument, field: &str) -> Result<KeypointSet, ApiError> {
    doc.poses
        .first()
        .copied()
        .ok_or_else(|| ApiError::new(ErrorCode::Schema, "document holds no poses").at(format!("{field}.poses")))
}

fn with_poses(doc: &PoseDocument, poses: Vec<KeypointSet>) -> PoseDocument {
    PoseDocument { poses, source: doc.source.clone(), image_size: doc.image_size }
}

/// Fills invisible joints of every pose in the document.
pub fn complete(doc: &PoseDocument, models: &Models, topo: &Topology) -> Result<String, ApiError> {
    let m = models.completion()?;
    let poses = doc
        .poses
        .iter()
        .enumerate()
        .map(|(i, k)| complete_pose(m, k, topo).map_err(|e| ApiError::from(e).within(&format!("poses[{i}]"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(write_pose(&with_poses(doc, poses)))
}

/// `{"groups":[…],"factors":[[6 numbers] per pose]}`.
pub fn factors(doc: &PoseDocument, models: &Models, topo: &Topology) -> Result<String, ApiError> {
    let m = models.factor()?;
    let mut rows = Vec::with_capacity(doc.poses.len());
    for (i, k) in doc.poses.iter().enumerate() {
        let tau = predict_factors(m, k, topo).map_err(|e| ApiError::from(e).within(&format!("poses[{i}]")))?;
        rows.push(tau.values().to_vec());
    }
    let groups: Vec<&str> = skeleform_core::GroupId::ALL.iter().map(|g| g.name()).collect();
    Ok(serde_json::json!({ "groups": groups, "factors": rows }).to_string())
}

/// Source of the art reference's factors.
#[derive(Debug, Clone)]
pub enum ArtSource {
    Pose(PoseDocument),
    Factors([f64; NUM_GROUPS]),
}

#[derive(Debug, Clone)]
pub struct DeformRequest {
    pub person: PoseDocument,
    pub art: ArtSource,
    pub naive: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DeformBody {
    person: Value,
    art: Option<Value>,
    tau_a: Option<Vec<f64>>,
    #[serde(default)]
    naive: bool,
}

impl DeformRequest {
    /// Parses `{"person": doc, "art": doc | "tau_a": [6], "naive": bool}`.
    pub fn from_json(bytes: &[u8], threshold: f64) -> Result<Self, ApiError> {
        let value = crate::ops::parse_json_value(bytes)?;
        let body: DeformBody =
            serde_json::from_value(value).map_err(|e| ApiError::new(ErrorCode::Schema, e.to_string()))?;
        let person = document_from_value(&body.person, threshold, "person")?;
        let art = match (body.art, body.tau_a) {
            (Some(a), None) => ArtSource::Pose(document_from_value(&a, threshold, "art")?),
            (None, Some(t)) => ArtSource::Factors(factor_array(&t)?),
            _ => {
                return Err(ApiError::new(ErrorCode::Schema, "exactly one of art and tau_a is required"));
            }
        };
        Ok(Self { person, art, naive: body.naive })
    }
}

pub fn factor_array(v: &[f64]) -> Result<[f64; NUM_GROUPS], ApiError> {
    v.try_into().map_err(|_| {
        ApiError::new(ErrorCode::InvalidFactors, format!("expected {NUM_GROUPS} factors, got {}", v.len())).at("tau_a")
    })
}

pub(crate) fn parse_json_value(bytes: &[u8]) -> Result<Value, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| {
        let offset = byte_offset(bytes, e.line(), e.column());
        ApiError::new(ErrorCode::Parse, format!("byte {offset}: {e}"))
    })
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let start: usize = bytes.split_inclusive(|&b| b == b'\n').take(line - 1).map(<[u8]>::len).sum();
    (start + column.saturating_sub(1)).min(bytes.len())
}

/// Completes `k` when the completion model is loaded; otherwise returns it
/// unchanged and lets the caller fail on the missing joint.
fn auto_complete(k: &KeypointSet, models: &Models, topo: &Topology, field: &str) -> Result<KeypointSet, ApiError> {
    match (&models.completion, k.is_complete()) {
        (Some(m), false) => complete_pose(m, k, topo).map_err(|e| ApiError::from(e).within(field)),
        _ => Ok(*k),
    }
}

/// Retargets every person pose to the art reference's proportions.
pub fn deform_request(req: &DeformRequest, models: &Models, topo: &Topology) -> Result<String, ApiError> {
    let art_pose = match &req.art {
        ArtSource::Pose(doc) => {
            let k = first_pose(doc, "art")?;
            Some(auto_complete(&k, models, topo, "art")?)
        }
        ArtSource::Factors(_) => None,
    };
    let mut out = Vec::with_capacity(req.person.poses.len());
    if req.naive {
        let art = art_pose
            .ok_or_else(|| ApiError::new(ErrorCode::Schema, "naive deformation needs an art pose").at("art"))?;
        for (i, k) in req.person.poses.iter().enumerate() {
            let field = format!("person.poses[{i}]");
            let k = auto_complete(k, models, topo, &field)?;
            out.push(deform_naive(&k, &art, topo).map_err(|e| ApiError::from(e).within(&field))?);
        }
    } else {
        let m = models.factor()?;
        let tau_a = match (&req.art, art_pose) {
            (ArtSource::Factors(t), _) => GroupFactors::new(*t).map_err(|e| ApiError::from(e).at("tau_a"))?,
            (_, Some(a)) => predict_factors(m, &a, topo).map_err(|e| ApiError::from(e).within("art"))?,
            _ => unreachable!("art pose exists unless factors were given"),
        };
        for (i, k) in req.person.poses.iter().enumerate() {
            let field = format!("person.poses[{i}]");
            let k = auto_complete(k, models, topo, &field)?;
            let tau_p = predict_factors(m, &k, topo).map_err(|e| ApiError::from(e).within(&field))?;
            out.push(deform(&k, &tau_p, &tau_a, topo).map_err(|e| ApiError::from(e).within(&field))?);
        }
    }
    Ok(write_pose(&with_poses(&req.person, out)))
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StyleSpec {
    pub stroke_color: Option<String>,
    pub joint_radius: Option<f64>,
    pub opacity: Option<f64>,
}

impl StyleSpec {
    fn resolve(&self, i: usize) -> SvgStyle {
        let base = SvgStyle::palette(i);
        SvgStyle::new(
            self.stroke_color.clone().unwrap_or_else(|| base.stroke_color.clone()),
            self.joint_radius.unwrap_or(base.joint_radius),
            self.opacity.unwrap_or(base.opacity()),
        )
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RenderBody {
    poses: Value,
    #[serde(default)]
    styles: Vec<StyleSpec>,
    canvas: Option<(f64, f64)>,
}

/// Canvas used when neither the request nor the document names one.
pub const DEFAULT_CANVAS: (f64, f64) = (512.0, 512.0);

#[derive(Debug, Clone)]
pub struct RenderRequest {
    pub poses: PoseDocument,
    pub styles: Vec<StyleSpec>,
    pub canvas: Option<(f64, f64)>,
}

impl RenderRequest {
    /// Parses `{"poses": doc, "styles": [...]?, "canvas": [w, h]?}`.
    pub fn from_json(bytes: &[u8], threshold: f64) -> Result<Self, ApiError> {
        let body: RenderBody = serde_json::from_value(parse_json_value(bytes)?)
            .map_err(|e| ApiError::new(ErrorCode::Schema, e.to_string()))?;
        Ok(Self {
            poses: document_from_value(&body.poses, threshold, "poses")?,
            styles: body.styles,
            canvas: body.canvas,
        })
    }
}

pub fn render(req: &RenderRequest, topo: &Topology) -> Result<String, ApiError> {
    let canvas = req.canvas.or(req.poses.image_size).unwrap_or(DEFAULT_CANVAS);
    if !(canvas.0.is_finite() && canvas.1.is_finite() && canvas.0 > 0.0 && canvas.1 > 0.0) {
        return Err(ApiError::new(ErrorCode::Schema, "canvas must be two positive numbers").at("canvas"));
    }
    let layers: Vec<(KeypointSet, SvgStyle)> = req
        .poses
        .poses
        .iter()
        .enumerate()
        .map(|(i, k)| (*k, req.styles.get(i).cloned().unwrap_or_default().resolve(i)))
        .collect();
    Ok(render_svg(&layers, canvas, topo))
}

/// Health payload: crate version and the loaded model kinds.
pub fn health(models: &Models) -> String {
    serde_json::json!({ "version": env!("CARGO_PKG_VERSION"), "models": models.kinds() }).to_string()
}
