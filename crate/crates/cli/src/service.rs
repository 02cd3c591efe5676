use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use skeleform_core::pose::Topology;

use crate::error::ApiError;
use crate::ops::{self, DeformRequest, Models, RenderRequest};

#[derive(Debug)]
pub struct AppState {
    pub models: Models,
    pub topology: Topology,
    pub confidence_threshold: f64,
}

const JSON: &str = "application/json";
const SVG: &str = "image/svg+xml";

fn respond(result: Result<String, ApiError>, content_type: &'static str) -> Response {
    match result {
        Ok(body) => ([(header::CONTENT_TYPE, content_type)], body).into_response(),
        Err(e) => {
            let status = StatusCode::from_u16(e.code.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            tracing::debug!(code = e.code.as_str(), "request failed: {}", e.message);
            (status, [(header::CONTENT_TYPE, JSON)], e.to_json()).into_response()
        }
    }
}

async fn health(State(s): State<Arc<AppState>>) -> Response {
    respond(Ok(ops::health(&s.models)), JSON)
}

async fn complete(State(s): State<Arc<AppState>>, body: Bytes) -> Response {
    let r =
        ops::parse_document(&body, s.confidence_threshold).and_then(|doc| ops::complete(&doc, &s.models, &s.topology));
    respond(r, JSON)
}

async fn factors(State(s): State<Arc<AppState>>, body: Bytes) -> Response {
    let r =
        ops::parse_document(&body, s.confidence_threshold).and_then(|doc| ops::factors(&doc, &s.models, &s.topology));
    respond(r, JSON)
}

async fn deform(State(s): State<Arc<AppState>>, body: Bytes) -> Response {
    let r = DeformRequest::from_json(&body, s.confidence_threshold)
        .and_then(|req| ops::deform_request(&req, &s.models, &s.topology));
    respond(r, JSON)
}

async fn render(State(s): State<Arc<AppState>>, body: Bytes) -> Response {
    let r = RenderRequest::from_json(&body, s.confidence_threshold).and_then(|req| ops::render(&req, &s.topology));
    respond(r, SVG)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/complete", post(complete))
        .route("/api/factors", post(factors))
        .route("/api/deform", post(deform))
        .route("/api/render.svg", post(render))
        .with_state(state)
}

/// Binds, prints `listening on <addr>` to stdout and serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    println!("listening on {local}");
    tracing::info!(%local, models = ?state.models.kinds(), "service started");
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
