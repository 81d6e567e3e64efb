//! Basic HTTP serving: health endpoint plus base64 OCR/structure endpoints
//! returning the canonical JSON.

use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::extract::State;
use axum::http::{HeaderValue, Request, StatusCode};
use axum::response::Response;
use axum::routing::{get, post};
use axum::Router;
use base64::Engine as _;

use crate::pipelines::{json_with_markdown, PipelineHandle, PipelineKind};
use crate::pool::{PoolError, WorkerPool};

/// Service settings.
#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind_address: String,
    pub port: u16,
    pub pipeline: PipelineKind,
    pub max_body_bytes: usize,
    pub timeout_secs: u64,
    pub parallelism: usize,
    pub max_queue: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind_address: "127.0.0.1".into(),
            port: 8080,
            pipeline: PipelineKind::Structure,
            max_body_bytes: 32 * 1024 * 1024,
            timeout_secs: 30,
            parallelism: 1,
            max_queue: 8,
        }
    }
}

pub(crate) struct AppState {
    pub handle: Arc<PipelineHandle>,
    pub pool: WorkerPool,
    pub config: ServiceConfig,
}

fn error_response(code: StatusCode, message: &str) -> Response {
    let body = serde_json::json!({
        "error": { "code": code.as_u16(), "message": message }
    });
    let mut response = Response::new(Body::from(body.to_string()));
    *response.status_mut() = code;
    response
        .headers_mut()
        .insert("content-type", HeaderValue::from_static("application/json"));
    if code == StatusCode::SERVICE_UNAVAILABLE {
        response
            .headers_mut()
            .insert("retry-after", HeaderValue::from_static("1"));
    }
    response
}

fn json_response(body: String) -> Response {
    let mut response = Response::new(Body::from(body));
    response
        .headers_mut()
        .insert("content-type", HeaderValue::from_static("application/json"));
    response
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    let body = serde_json::json!({
        "status": "ok",
        "pipeline": state.config.pipeline.as_str(),
        "workers": state.pool.parallelism(),
    });
    json_response(body.to_string())
}

/// Decodes the request payload: JSON body with a base64 `image` or `pdf`
/// field.
async fn read_payload(state: &AppState, request: Request<Body>) -> Result<Vec<u8>, Response> {
    if let Some(length) = request.headers().get("content-length") {
        let length: usize = length
            .to_str()
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0);
        if length > state.config.max_body_bytes {
            return Err(error_response(
                StatusCode::PAYLOAD_TOO_LARGE,
                "request body exceeds the configured limit",
            ));
        }
    }
    let bytes = axum::body::to_bytes(request.into_body(), state.config.max_body_bytes)
        .await
        .map_err(|_| {
            error_response(
                StatusCode::PAYLOAD_TOO_LARGE,
                "request body exceeds the configured limit",
            )
        })?;
    let value: serde_json::Value = serde_json::from_slice(&bytes)
        .map_err(|e| error_response(StatusCode::BAD_REQUEST, &format!("malformed JSON body: {e}")))?;
    let encoded = value
        .get("image")
        .or_else(|| value.get("pdf"))
        .and_then(|v| v.as_str())
        .ok_or_else(|| {
            error_response(
                StatusCode::BAD_REQUEST,
                "body must carry a base64 'image' or 'pdf' field",
            )
        })?;
    base64::engine::general_purpose::STANDARD
        .decode(encoded)
        .map_err(|e| error_response(StatusCode::BAD_REQUEST, &format!("invalid base64: {e}")))
}

async fn run_pipeline(
    state: Arc<AppState>,
    request: Request<Body>,
    kind: PipelineKind,
) -> Response {
    let payload = match read_payload(&state, request).await {
        Ok(payload) => payload,
        Err(response) => return response,
    };
    let handle = state.handle.clone();
    let job = state.pool.run(move |_instance| match kind {
        PipelineKind::Ocr => handle.run_ocr_bytes(&payload),
        PipelineKind::Structure => handle
            .run_structure_bytes(&payload)
            .map(|(json, markdown)| json_with_markdown(&json, &markdown)),
    });
    let outcome = tokio::time::timeout(Duration::from_secs(state.config.timeout_secs), job).await;
    match outcome {
        Err(_) => error_response(StatusCode::INTERNAL_SERVER_ERROR, "request timed out"),
        Ok(Err(PoolError::Saturated)) => {
            error_response(StatusCode::SERVICE_UNAVAILABLE, "worker queue is full")
        }
        Ok(Err(PoolError::Join(e))) => {
            error_response(StatusCode::INTERNAL_SERVER_ERROR, &format!("worker failed: {e}"))
        }
        Ok(Ok(Ok(body))) => json_response(body),
        Ok(Ok(Err(e))) => match e {
            ocrkit_core::Error::Image(_) | ocrkit_core::Error::UnsupportedInput(_) => {
                error_response(StatusCode::UNPROCESSABLE_ENTITY, &format!("undecodable input: {e}"))
            }
            other => error_response(
                StatusCode::INTERNAL_SERVER_ERROR,
                &format!("pipeline failure: {other}"),
            ),
        },
    }
}

fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route(
            "/v1/ocr",
            post(|State(state): State<Arc<AppState>>, request: Request<Body>| async move {
                run_pipeline(state, request, PipelineKind::Ocr).await
            }),
        )
        .route(
            "/v1/structure",
            post(|State(state): State<Arc<AppState>>, request: Request<Body>| async move {
                run_pipeline(state, request, PipelineKind::Structure).await
            }),
        )
        .with_state(state)
}

/// A running HTTP service.
pub struct RunningService {
    pub addr: std::net::SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<()>,
}

impl RunningService {
    /// Signals shutdown and waits for the server task.
    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = (&mut self.task).await;
    }
}

/// Binds and serves the pipelines; returns once the listener is ready.
pub async fn serve_http(
    config: ServiceConfig,
    handle: Arc<PipelineHandle>,
) -> std::io::Result<RunningService> {
    let pool = WorkerPool::new(config.parallelism, config.max_queue);
    let bind = format!("{}:{}", config.bind_address, config.port);
    let state = Arc::new(AppState {
        handle,
        pool,
        config,
    });
    let listener = tokio::net::TcpListener::bind(&bind).await?;
    let addr = listener.local_addr()?;
    let app = router(state);
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        let server = axum::serve(listener, app).with_graceful_shutdown(async {
            let _ = rx.await;
        });
        if let Err(e) = server.await {
            tracing::error!("http server error: {e}");
        }
    });
    tracing::info!(%addr, "http service listening");
    Ok(RunningService {
        addr,
        shutdown: Some(tx),
        task,
    })
}

