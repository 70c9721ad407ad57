//! Batch execution: run many configurations in parallel and aggregate their
//! responses. Entries keep the order they were given regardless of how the
//! work is scheduled, so batch output is deterministic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BatchSpec, ConfigError, SimulationConfig};
use crate::metrics::SummaryResponses;
use crate::model::{run, RunOptions};

/// Result of one batch member. A member failing validation does not abort
/// the batch; the error is recorded in its slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchEntry {
    pub config: SimulationConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub responses: Option<SummaryResponses>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl BatchEntry {
    fn ok(config: SimulationConfig, responses: SummaryResponses) -> Self {
        Self {
            config,
            responses: Some(responses),
            error: None,
        }
    }

    fn failed(config: SimulationConfig, error: ConfigError) -> Self {
        Self {
            config,
            responses: None,
            error: Some(error.to_string()),
        }
    }
}

/// Mean and standard deviation of each response across the successful
/// entries. The deviation is the population form (divide by the entry
/// count), so a single-entry batch reports zero spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub runs: u32,
    pub mean: SummaryResponses,
    pub std_dev: SummaryResponses,
}

/// Everything a batch produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchOutcome {
    pub entries: Vec<BatchEntry>,
    /// Absent when no entry succeeded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<AggregateStats>,
}

type Field = (fn(&SummaryResponses) -> f64, fn(&mut SummaryResponses) -> &mut f64);

const FIELDS: [Field; 8] = [
    (|r| r.p_hospital_empty, |r| &mut r.p_hospital_empty),
    (
        |r| r.proportion_healed_in_hospital,
        |r| &mut r.proportion_healed_in_hospital,
    ),
    (|r| r.avg_sick, |r| &mut r.avg_sick),
    (|r| r.avg_proportion_sick, |r| &mut r.avg_proportion_sick),
    (|r| r.std_sick, |r| &mut r.std_sick),
    (|r| r.avg_beds, |r| &mut r.avg_beds),
    (|r| r.std_beds, |r| &mut r.std_beds),
    (|r| r.avg_sickness_time, |r| &mut r.avg_sickness_time),
];

fn zeroed() -> SummaryResponses {
    SummaryResponses {
        p_hospital_empty: 0.0,
        proportion_healed_in_hospital: 0.0,
        avg_sick: 0.0,
        avg_proportion_sick: 0.0,
        std_sick: 0.0,
        avg_beds: 0.0,
        std_beds: 0.0,
        avg_sickness_time: 0.0,
    }
}

fn aggregate(entries: &[BatchEntry]) -> Option<AggregateStats> {
    let successes: Vec<&SummaryResponses> =
        entries.iter().filter_map(|e| e.responses.as_ref()).collect();
    if successes.is_empty() {
        return None;
    }
    let n = successes.len() as f64;
    let mut mean = zeroed();
    let mut std_dev = zeroed();
    for (get, set) in FIELDS {
        let avg = successes.iter().map(|r| get(r)).sum::<f64>() / n;
        let var = successes
            .iter()
            .map(|r| {
                let d = get(r) - avg;
                d * d
            })
            .sum::<f64>()
            / n;
        *set(&mut mean) = avg;
        *set(&mut std_dev) = var.sqrt();
    }
    Some(AggregateStats {
        runs: successes.len() as u32,
        mean,
        std_dev,
    })
}

/// Run every configuration of the batch (in parallel) and aggregate. Only
/// summary responses are collected; event logs are never recorded here.
///
/// Spec-level problems (an empty batch, duplicate combinations) fail the
/// whole batch; an individual configuration failing validation only fails
/// its own entry.
pub fn run_batch(spec: &BatchSpec) -> Result<BatchOutcome, ConfigError> {
    if spec.configs.is_empty() {
        return Err(ConfigError::EmptyBatch);
    }
    if let Err(err @ ConfigError::DuplicateCombination { .. }) = spec.validate() {
        return Err(err);
    }
    let options = RunOptions::summary_only();
    let entries: Vec<BatchEntry> = spec
        .configs
        .par_iter()
        .map(|config| match run(config, &options) {
            Ok(output) => BatchEntry::ok(*config, output.responses),
            Err(err) => BatchEntry::failed(*config, err),
        })
        .collect();
    let aggregate = aggregate(&entries);
    Ok(BatchOutcome { entries, aggregate })
}
