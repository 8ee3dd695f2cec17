use std::io::Write;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use etea_core::session::{CreateRequest, SamplesRequest, SpaceRequest};
use etea_core::{Error, SessionStore};
use serde_json::json;
use tokio::net::TcpListener;

use crate::commands::load_model;
use crate::error::{CliError, CliResult};
use crate::ServeArgs;

/// A core error rendered as `{"error": ...}` with a fitting status.
pub struct ApiError(Error);

impl ApiError {
    fn status(&self) -> StatusCode {
        match &self.0 {
            Error::UnknownSession(_) => StatusCode::NOT_FOUND,
            Error::WrongPhase { .. } | Error::MissingModel => StatusCode::CONFLICT,
            Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| Error::InvalidInput(format!("request body: {e}")).into())
}

/// Runs store work off the async workers; sessions lock and may touch disk.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> etea_core::Result<T> + Send + 'static) -> ApiResult<T> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError),
        Err(e) => Err(ApiError(Error::Io(std::io::Error::other(e.to_string())))),
    }
}

async fn health(State(store): State<Arc<SessionStore>>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "sessions": store.ids().len() }))
}

async fn create(State(store): State<Arc<SessionStore>>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let request: CreateRequest = parse_body(&body)?;
    let response = blocking(move || store.create(request)).await?;
    Ok((StatusCode::CREATED, Json(response)))
}

async fn samples(State(store): State<Arc<SessionStore>>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let request: SamplesRequest = parse_body(&body)?;
    Ok(Json(blocking(move || store.post_samples(&id, request)).await?))
}

/// The body is optional; an empty one means a press without a timestamp.
async fn space(State(store): State<Arc<SessionStore>>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let request: SpaceRequest = if body.iter().all(u8::is_ascii_whitespace) { SpaceRequest::default() } else { parse_body(&body)? };
    Ok(Json(blocking(move || store.space(&id, request)).await?))
}

async fn history(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(move || store.history(&id)).await?))
}

async fn export(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let csv = blocking(move || store.export(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv))
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create))
        .route("/sessions/{id}/samples", post(samples))
        .route("/sessions/{id}/space", post(space))
        .route("/sessions/{id}/history", get(history))
        .route("/sessions/{id}/export", get(export))
        .with_state(store)
}

/// Serves until ctrl-c.
pub async fn serve(listener: TcpListener, store: Arc<SessionStore>) -> std::io::Result<()> {
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

pub fn cmd_serve(args: &ServeArgs) -> CliResult<()> {
    let mut store = match &args.data_dir {
        Some(dir) => SessionStore::persistent(dir.clone()),
        None => SessionStore::in_memory(),
    };
    if let Some(path) = &args.model {
        store = store.with_model(Arc::new(load_model(path)?));
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let address = format!("{}:{}", args.host, args.port);
        let listener = TcpListener::bind(&address).await.map_err(|e| CliError::io(&address, e))?;
        let bound = listener.local_addr()?;
        println!("listening on http://{bound}");
        std::io::stdout().flush()?;
        serve(listener, Arc::new(store)).await?;
        Ok(())
    })
}
