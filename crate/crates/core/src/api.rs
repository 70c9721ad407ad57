//! Wire types of the HTTP API. The service and the client both speak these,
//! and the CLI uses the client, so every interface shares one vocabulary.

use serde::{Deserialize, Serialize};

use crate::analytics::Tolerances;
use crate::config::{BatchSpec, ConfigError, HospitalStatus, SimulationConfig};
use crate::io::{RunReport, TimeSeriesPoint};
use crate::metrics::EventLogRow;
use crate::model::RunOptions;

pub mod paths {
    pub const HEALTH: &str = "/api/v1/health";
    pub const SIMULATE: &str = "/api/v1/simulate";
    pub const BATCH: &str = "/api/v1/batch";
    pub const ANALYTICS: &str = "/api/v1/analytics";
    pub const VALIDATE: &str = "/api/v1/validate";
}

fn default_true() -> bool {
    true
}

/// Run one simulation. Unset config fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateRequest {
    pub config: SimulationConfig,
    /// Return the chronological event log.
    pub include_events: bool,
    /// Return the state trajectory.
    pub include_timeseries: bool,
    /// Attach future-event-list snapshots to returned events.
    #[serde(default = "default_true")]
    pub include_fel: bool,
    /// Tolerances for the validation section of the report.
    pub tolerances: Tolerances,
}

impl Default for SimulateRequest {
    fn default() -> Self {
        Self {
            config: SimulationConfig::default(),
            include_events: false,
            include_timeseries: false,
            include_fel: true,
            tolerances: Tolerances::default(),
        }
    }
}

impl SimulateRequest {
    /// Recording options implied by what the caller wants back.
    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            record_events: self.include_events || self.include_timeseries,
            record_fel: self.include_events && self.include_fel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateResponse {
    pub report: RunReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<EventLogRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeseries: Option<Vec<TimeSeriesPoint>>,
}

/// A cross-product sweep over a base configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub base: SimulationConfig,
    pub untils: Vec<f64>,
    pub statuses: Vec<HospitalStatus>,
    pub seeds: Vec<u64>,
}

/// Run a batch, given either an explicit configuration list or a sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchRequest {
    pub configs: Vec<SimulationConfig>,
    pub sweep: Option<SweepSpec>,
}

impl BatchRequest {
    pub fn to_spec(&self) -> Result<BatchSpec, ConfigError> {
        match (&self.sweep, self.configs.is_empty()) {
            (Some(_), false) => Err(ConfigError::Field {
                field: "configs",
                reason: "give either explicit configs or a sweep, not both".into(),
            }),
            (Some(sweep), true) => Ok(BatchSpec::cross(
                &sweep.base,
                &sweep.untils,
                &sweep.statuses,
                &sweep.seeds,
            )),
            (None, false) => Ok(BatchSpec::new(self.configs.clone())),
            (None, true) => Err(ConfigError::EmptyBatch),
        }
    }
}

/// Evaluate the analytic pipeline alone; run controls in the config are
/// ignored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyticsRequest {
    pub config: SimulationConfig,
}

/// Run and validate against the analytics, with optional tolerances.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidateRequest {
    pub config: SimulationConfig,
    pub tolerances: Tolerances,
}

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    /// Offending configuration field, when the error is a config error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
}
