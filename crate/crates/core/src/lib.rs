//! Discrete-event simulation of sickness and hospital care in a closed
//! population, with queueing-theory analytics to validate it.
//!
//! A town's healthy residents fall sick at random; some seek one of a fixed
//! number of hospital beds and are turned away when all are busy. The
//! simulation ([`model`]) tracks every arrival and departure on an event
//! calendar ([`kernel`]), measures time-weighted responses ([`metrics`]),
//! and holds them against closed-form finite-source and Erlang-loss models
//! ([`analytics`]). Runs are configured through [`config`], executed singly
//! or in parallel batches ([`batch`]), and exported as CSV and JSON
//! ([`io`]). The [`api`] module defines the wire types the HTTP service and
//! client exchange.

pub mod analytics;
pub mod api;
pub mod batch;
pub mod config;
pub mod io;
pub mod kernel;
pub mod metrics;
pub mod model;

pub use analytics::{analytic_bundle, validate, AnalyticBundle, Tolerances, ValidationReport, Verdict};
pub use batch::{run_batch, BatchOutcome};
pub use config::{BatchSpec, ConfigError, HospitalStatus, SimulationConfig};
pub use io::RunReport;
pub use metrics::SummaryResponses;
pub use model::{run, RunOptions, RunOutput};
