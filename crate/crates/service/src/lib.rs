//! HTTP face of the ward simulator.
//!
//! Five endpoints under `/api/v1`: `health` (GET) plus `simulate`, `batch`,
//! `analytics` and `validate` (POST, JSON in/out). Simulation work runs on
//! blocking threads so slow runs never stall the accept loop. All error
//! responses carry an [`ErrorBody`]; configuration problems come back as
//! 400 with the offending field named.

use std::future::IntoFuture;
use std::net::SocketAddr;

use axum::extract::rejection::JsonRejection;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

use wardsim_core::api::{
    paths, AnalyticsRequest, BatchRequest, ErrorBody, HealthResponse, SimulateRequest,
    SimulateResponse, ValidateRequest,
};
use wardsim_core::analytics::{analytic_bundle, AnalyticsError};
use wardsim_core::batch::BatchOutcome;
use wardsim_core::config::ConfigError;
use wardsim_core::io::{timeseries_points, RunReport};
use wardsim_core::model::{run, RunOptions};
use wardsim_core::run_batch;

/// The complete API surface. Callers serve it themselves or through
/// [`serve`] / [`spawn`].
pub fn router() -> Router {
    Router::new()
        .route(paths::HEALTH, get(health))
        .route(paths::SIMULATE, post(simulate))
        .route(paths::BATCH, post(batch))
        .route(paths::ANALYTICS, post(analytics))
        .route(paths::VALIDATE, post(validate))
}

/// Serve until the process ends.
pub async fn serve(listener: TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router()).await
}

/// Serve in a background task; used for embedded (in-process) servers.
/// Returns the bound address and the server's join handle.
pub async fn spawn(addr: &str) -> std::io::Result<(SocketAddr, JoinHandle<std::io::Result<()>>)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let handle = tokio::spawn(axum::serve(listener, router()).into_future());
    Ok((local, handle))
}

struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn bad_request(error: String, field: Option<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody { error, field },
        }
    }

    fn internal(error: String) -> Self {
        Self {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: ErrorBody { error, field: None },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<ConfigError> for ApiError {
    fn from(e: ConfigError) -> Self {
        ApiError::bad_request(e.to_string(), e.field().map(str::to_owned))
    }
}

impl From<AnalyticsError> for ApiError {
    fn from(e: AnalyticsError) -> Self {
        ApiError::bad_request(e.to_string(), None)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request(e.body_text(), None)
    }
}

/// Run a closure on a blocking thread and surface panics as 500s.
async fn offload<T, F>(work: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(work)
        .await
        .map_err(|e| ApiError::internal(format!("simulation task failed: {e}")))?
}

type Payload<T> = Result<Json<T>, JsonRejection>;

async fn health() -> Json<HealthResponse> {
    Json(HealthResponse {
        status: "ok".into(),
    })
}

async fn simulate(payload: Payload<SimulateRequest>) -> Result<Json<SimulateResponse>, ApiError> {
    let Json(req) = payload?;
    offload(move || {
        let output = run(&req.config, &req.run_options())?;
        let report = RunReport::new(&output, &req.tolerances)?;
        let timeseries = req.include_timeseries.then(|| timeseries_points(&output));
        let events = req.include_events.then_some(output.log);
        Ok(Json(SimulateResponse {
            report,
            events,
            timeseries,
        }))
    })
    .await
}

async fn batch(payload: Payload<BatchRequest>) -> Result<Json<BatchOutcome>, ApiError> {
    let Json(req) = payload?;
    let spec = req.to_spec()?;
    offload(move || Ok(Json(run_batch(&spec)?))).await
}

async fn analytics(payload: Payload<AnalyticsRequest>) -> Result<Response, ApiError> {
    let Json(req) = payload?;
    let bundle = analytic_bundle(&req.config)?;
    Ok(Json(bundle).into_response())
}

async fn validate(payload: Payload<ValidateRequest>) -> Result<Json<RunReport>, ApiError> {
    let Json(req) = payload?;
    offload(move || {
        let output = run(&req.config, &RunOptions::summary_only())?;
        Ok(Json(RunReport::new(&output, &req.tolerances)?))
    })
    .await
}
