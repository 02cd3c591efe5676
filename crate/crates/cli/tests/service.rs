mod common;

use std::path::PathBuf;
use std::sync::OnceLock;

use common::*;
use skeleform_core::io::{parse_canonical, write_pose, PoseDocument};
use skeleform_core::neural::{completion_model_config, factor_model_config, mlp_init, save_model, ModelKind};
use skeleform_core::pose::{Topology, L_KNEE, NUM_JOINTS};

/// Untrained but valid models; the API contracts do not depend on training.
fn models() -> &'static (tempfile::TempDir, PathBuf, PathBuf) {
    static M: OnceLock<(tempfile::TempDir, PathBuf, PathBuf)> = OnceLock::new();
    M.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("factor.json");
        let c = dir.path().join("completion.json");
        std::fs::write(&f, save_model(&mlp_init(&factor_model_config(1)).unwrap(), ModelKind::Factor)).unwrap();
        std::fs::write(&c, save_model(&mlp_init(&completion_model_config(1)).unwrap(), ModelKind::Completion)).unwrap();
        (dir, f, c)
    })
}

fn full_server() -> Server {
    let (_, f, c) = models();
    Server::start(&[("--factor-model", f), ("--completion-model", c)])
}

fn pose_doc(seed: u64) -> String {
    write_pose(&PoseDocument::single(random_pose(&mut rng(seed), &Topology::openpose18())))
}

fn error_code(body: &str) -> String {
    let v: serde_json::Value = serde_json::from_str(body).unwrap();
    v["error"]["code"].as_str().unwrap().to_string()
}

#[test]
fn health_lists_loaded_models() {
    let server = full_server();
    let (status, body) = server.get("/api/health");
    assert_eq!(status, 200);
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["models"], serde_json::json!(["factor", "completion"]));
    assert!(v["version"].is_string());

    let bare = Server::start(&[]);
    let v: serde_json::Value = serde_json::from_str(&bare.get("/api/health").1).unwrap();
    assert_eq!(v["models"], serde_json::json!([]));
}

#[test]
fn factors_are_six_positive_numbers() {
    let server = full_server();
    for seed in 0..5 {
        let (status, body) = server.post("/api/factors", pose_doc(seed));
        assert_eq!(status, 200);
        let v: serde_json::Value = serde_json::from_str(&body).unwrap();
        let row = v["factors"][0].as_array().unwrap();
        assert_eq!(row.len(), 6);
        assert!(row.iter().all(|t| t.as_f64().unwrap() > 0.0));
    }
}

#[test]
fn complete_echoes_full_poses() {
    let server = full_server();
    let doc = pose_doc(10);
    let (status, body) = server.post("/api/complete", doc.clone());
    assert_eq!(status, 200);
    assert_eq!(body, doc);
}

#[test]
fn deform_identity_and_missing_joints() {
    let server = full_server();
    let doc = pose_doc(11);
    let (status, body) = server.post("/api/deform", format!(r#"{{"person":{doc},"art":{doc}}}"#));
    assert_eq!(status, 200);
    let (a, b) = (parse_canonical(doc.as_bytes()).unwrap(), parse_canonical(body.as_bytes()).unwrap());
    let (pa, pb) = (a.poses[0].points().unwrap(), b.poses[0].points().unwrap());
    for j in 0..NUM_JOINTS {
        assert!((pa[j].x - pb[j].x).abs() <= 1e-6 && (pa[j].y - pb[j].y).abs() <= 1e-6);
    }

    // Incomplete person: completed when a completion model is loaded,
    // rejected otherwise.
    let mut k = random_pose(&mut rng(12), &Topology::openpose18());
    k.joints[L_KNEE] = None;
    let partial = write_pose(&PoseDocument::single(k));
    let req = format!(r#"{{"person":{partial},"tau_a":[1,1,1,1,1,1]}}"#);
    let (status, body) = server.post("/api/deform", req.clone());
    assert_eq!(status, 200, "{body}");
    assert!(parse_canonical(body.as_bytes()).unwrap().poses[0].is_complete());

    let (_, f, _) = models();
    let factor_only = Server::start(&[("--factor-model", f)]);
    let (status, body) = factor_only.post("/api/deform", req);
    assert_eq!(status, 400);
    assert_eq!(error_code(&body), "missing_joint");
}

#[test]
fn client_errors_map_to_codes_and_the_service_survives() {
    let server = full_server();
    let cases = [
        ("/api/complete", "{not json".to_string(), "parse"),
        ("/api/complete", "\u{0}\u{1}".to_string(), "parse"),
        ("/api/factors", r#"{"version":1,"poses":[{"joints":7}]}"#.to_string(), "schema"),
        ("/api/deform", format!(r#"{{"person":{}}}"#, pose_doc(1)), "schema"),
        ("/api/deform", format!(r#"{{"person":{},"tau_a":[1,2,3]}}"#, pose_doc(1)), "invalid_factors"),
        ("/api/deform", format!(r#"{{"person":{},"tau_a":[1,1,1,1,1,-2]}}"#, pose_doc(1)), "invalid_factors"),
        ("/api/deform", format!(r#"{{"person":{},"tau_a":[1,1,1,1,1,1],"naive":true}}"#, pose_doc(1)), "schema"),
        ("/api/render.svg", r#"{"poses":{"version":1,"poses":[]},"canvas":[0,5]}"#.to_string(), "schema"),
    ];
    for (path, body, code) in cases {
        let (status, resp) = server.post(path, body);
        assert_eq!(status, 400, "{path}: {resp}");
        assert_eq!(error_code(&resp), code, "{path}: {resp}");
    }
    let bare = Server::start(&[]);
    let (status, resp) = bare.post("/api/factors", pose_doc(2));
    assert_eq!((status, error_code(&resp).as_str()), (400, "model_missing"));
    assert_eq!(server.get("/api/health").0, 200);
}

#[test]
fn schema_errors_carry_a_path() {
    let server = full_server();
    let body = r#"{"person":{"version":1,"poses":[{"joints":[{"name":"neck","x":1}]}]},"tau_a":[1,1,1,1,1,1]}"#;
    let (_, resp) = server.post("/api/deform", body);
    let v: serde_json::Value = serde_json::from_str(&resp).unwrap();
    assert_eq!(v["error"]["code"], "schema");
    assert!(v["error"]["path"].as_str().unwrap().starts_with("person.poses[0]"), "{resp}");
}

#[test]
fn render_returns_svg() {
    let server = full_server();
    let body =
        format!(r#"{{"poses":{},"styles":[{{"stroke_color":"red","opacity":0.5}}],"canvas":[300,200]}}"#, pose_doc(3));
    let client = reqwest::blocking::Client::new();
    let resp = client.post(format!("{}/api/render.svg", server.base)).body(body).send().unwrap();
    assert_eq!(resp.status().as_u16(), 200);
    assert_eq!(resp.headers()["content-type"], "image/svg+xml");
    let text = resp.text().unwrap();
    assert!(text.contains(r#"stroke="red""#) && text.contains(r#"opacity="0.500""#));
}

#[test]
fn repeated_and_concurrent_requests_agree() {
    let server = full_server();
    let body = format!(r#"{{"person":{},"art":{}}}"#, pose_doc(20), pose_doc(21));
    let first = server.post("/api/deform", body.clone());
    assert_eq!(first.0, 200);
    assert_eq!(server.post("/api/deform", body.clone()), first);
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..8).map(|_| s.spawn(|| server.post("/api/deform", body.clone()))).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(results.iter().all(|r| *r == first));
}
