//! Typed client for the ward simulation HTTP API.
//!
//! Each method mirrors one endpoint and returns the same types the service
//! serialises, so callers never touch raw JSON. Non-2xx responses become
//! [`ClientError::Api`] carrying the service's error message and, for
//! configuration errors, the offending field.

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use wardsim_core::api::{
    paths, AnalyticsRequest, BatchRequest, ErrorBody, HealthResponse, SimulateRequest,
    SimulateResponse, ValidateRequest,
};
use wardsim_core::batch::BatchOutcome;
use wardsim_core::io::RunReport;
use wardsim_core::AnalyticBundle;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Http(#[from] reqwest::Error),
    /// The service answered with an error status.
    #[error("service error ({status}): {message}")]
    Api {
        status: u16,
        message: String,
        /// Offending configuration field, when the service named one.
        field: Option<String>,
    },
    #[error("invalid base URL `{0}`")]
    InvalidBase(String),
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the service root, e.g. `http://127.0.0.1:8314`; any
    /// trailing slash is ignored.
    pub fn new(base: &str) -> Result<Self, ClientError> {
        let base = base.trim_end_matches('/');
        if !base.starts_with("http://") && !base.starts_with("https://") {
            return Err(ClientError::InvalidBase(base.to_owned()));
        }
        Ok(Self {
            base: base.to_owned(),
            http: reqwest::Client::new(),
        })
    }

    pub async fn health(&self) -> Result<HealthResponse, ClientError> {
        let response = self
            .http
            .get(format!("{}{}", self.base, paths::HEALTH))
            .send()
            .await?;
        Self::read(response).await
    }

    pub async fn simulate(&self, req: &SimulateRequest) -> Result<SimulateResponse, ClientError> {
        self.post(paths::SIMULATE, req).await
    }

    pub async fn batch(&self, req: &BatchRequest) -> Result<BatchOutcome, ClientError> {
        self.post(paths::BATCH, req).await
    }

    pub async fn analytics(&self, req: &AnalyticsRequest) -> Result<AnalyticBundle, ClientError> {
        self.post(paths::ANALYTICS, req).await
    }

    pub async fn validate(&self, req: &ValidateRequest) -> Result<RunReport, ClientError> {
        self.post(paths::VALIDATE, req).await
    }

    async fn post<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        path: &str,
        req: &Req,
    ) -> Result<Resp, ClientError> {
        let response = self
            .http
            .post(format!("{}{}", self.base, path))
            .json(req)
            .send()
            .await?;
        Self::read(response).await
    }

    async fn read<Resp: DeserializeOwned>(response: reqwest::Response) -> Result<Resp, ClientError> {
        let status = response.status();
        if status.is_success() {
            return Ok(response.json().await?);
        }
        let code = status.as_u16();
        let text = response.text().await.unwrap_or_default();
        match serde_json::from_str::<ErrorBody>(&text) {
            Ok(body) => Err(ClientError::Api {
                status: code,
                message: body.error,
                field: body.field,
            }),
            Err(_) => Err(ClientError::Api {
                status: code,
                message: text,
                field: None,
            }),
        }
    }
}
