//! Run configuration: model parameters, run controls, and batch specs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid value for `{field}`: {reason}")]
    Field { field: &'static str, reason: String },
    #[error("batch contains duplicate combination (until={until}, status={status}, seed={seed})")]
    DuplicateCombination {
        until: f64,
        status: HospitalStatus,
        seed: u64,
    },
    #[error("batch contains no configurations")]
    EmptyBatch,
}

impl ConfigError {
    pub fn field(&self) -> Option<&'static str> {
        match self {
            ConfigError::Field { field, .. } => Some(field),
            _ => None,
        }
    }
}

/// How many beds are occupied when the run starts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HospitalStatus {
    /// No beds occupied.
    #[default]
    Empty,
    /// Half the beds (rounded down) occupied by seeded patients.
    HalfFull,
    /// Every bed occupied by a seeded patient.
    Full,
}

impl HospitalStatus {
    pub const ALL: [HospitalStatus; 3] =
        [HospitalStatus::Empty, HospitalStatus::HalfFull, HospitalStatus::Full];

    /// Number of patients seeded into beds at time zero.
    pub fn seeded_patients(&self, bed_count: u32) -> u32 {
        match self {
            HospitalStatus::Empty => 0,
            HospitalStatus::HalfFull => bed_count / 2,
            HospitalStatus::Full => bed_count,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            HospitalStatus::Empty => "empty",
            HospitalStatus::HalfFull => "half-full",
            HospitalStatus::Full => "full",
        }
    }
}

impl fmt::Display for HospitalStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HospitalStatus {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "empty" => Ok(HospitalStatus::Empty),
            "half-full" | "half_full" | "halffull" => Ok(HospitalStatus::HalfFull),
            "full" => Ok(HospitalStatus::Full),
            other => Err(ConfigError::Field {
                field: "status",
                reason: format!("expected empty, half-full or full, got `{other}`"),
            }),
        }
    }
}

/// Everything one run needs: the model parameters and the run controls.
///
/// Unspecified fields take the defaults below, which describe a town of 1582
/// people where each healthy person falls sick about once every 300 days,
/// one in five sick people seeks one of 66 hospital beds, hospital stays
/// average 6 days, home stays 10 days, and a rejected patient's stay is
/// stretched by a factor drawn uniformly from [1, 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Population size (N).
    pub population: u32,
    /// Sickness rate per healthy person per day (lambda).
    pub sickness_rate: f64,
    /// Probability a sick person seeks a hospital bed (p).
    pub hospital_probability: f64,
    /// Number of hospital beds (K).
    pub bed_count: u32,
    /// Healing rate in a hospital bed (mu1 = 1/6 per day).
    pub hospital_heal_rate: f64,
    /// Healing rate at home by choice (mu2 = 1/10 per day).
    pub home_heal_rate: f64,
    /// Rejected patients heal at `hospital_heal_rate / r` with r uniform on
    /// [rejection_min, rejection_max).
    pub rejection_min: f64,
    pub rejection_max: f64,
    /// Simulation horizon in days.
    pub until: f64,
    /// Initial bed occupancy.
    pub status: HospitalStatus,
    /// RNG seed; a run is fully reproducible from its configuration.
    pub seed: u64,
    /// Measurement starts here: statistics ignore [0, warmup).
    pub warmup: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            population: 1582,
            sickness_rate: 1.0 / 300.0,
            hospital_probability: 0.2,
            bed_count: 66,
            hospital_heal_rate: 1.0 / 6.0,
            home_heal_rate: 1.0 / 10.0,
            rejection_min: 1.0,
            rejection_max: 2.0,
            until: 10_000.0,
            status: HospitalStatus::Empty,
            seed: 978,
            warmup: 0.0,
        }
    }
}

impl SimulationConfig {
    /// Check every field. Returns the first offending field by name.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let field = |field: &'static str, reason: String| Err(ConfigError::Field { field, reason });
        if self.population == 0 {
            return field("population", "must be at least 1".into());
        }
        if !(self.sickness_rate > 0.0) || !self.sickness_rate.is_finite() {
            return field(
                "sickness_rate",
                format!("must be positive and finite, got {}", self.sickness_rate),
            );
        }
        if !(0.0..=1.0).contains(&self.hospital_probability) {
            return field(
                "hospital_probability",
                format!("must lie in [0, 1], got {}", self.hospital_probability),
            );
        }
        if self.bed_count > self.population {
            return field(
                "bed_count",
                format!(
                    "{} beds exceed the population of {}",
                    self.bed_count, self.population
                ),
            );
        }
        for (name, rate) in [
            ("hospital_heal_rate", self.hospital_heal_rate),
            ("home_heal_rate", self.home_heal_rate),
        ] {
            if !(rate > 0.0) || !rate.is_finite() {
                return match name {
                    "hospital_heal_rate" => field(
                        "hospital_heal_rate",
                        format!("must be positive and finite, got {rate}"),
                    ),
                    _ => field(
                        "home_heal_rate",
                        format!("must be positive and finite, got {rate}"),
                    ),
                };
            }
        }
        if !(self.rejection_min >= 1.0) || !self.rejection_min.is_finite() {
            return field(
                "rejection_min",
                format!("must be at least 1, got {}", self.rejection_min),
            );
        }
        if !(self.rejection_max > self.rejection_min) || !self.rejection_max.is_finite() {
            return field(
                "rejection_max",
                format!(
                    "must exceed rejection_min ({}), got {}",
                    self.rejection_min, self.rejection_max
                ),
            );
        }
        if !(self.until >= 0.0) || !self.until.is_finite() {
            return field(
                "until",
                format!("must be non-negative and finite, got {}", self.until),
            );
        }
        if !(self.warmup >= 0.0) || !self.warmup.is_finite() {
            return field(
                "warmup",
                format!("must be non-negative and finite, got {}", self.warmup),
            );
        }
        if self.warmup >= self.until && self.until > 0.0 {
            return field(
                "warmup",
                format!(
                    "must be smaller than until ({}), got {}",
                    self.until, self.warmup
                ),
            );
        }
        if self.until == 0.0 && self.warmup > 0.0 {
            return field("warmup", "must be 0 for a zero-length run".into());
        }
        Ok(())
    }

    /// Patients occupying beds at time zero.
    pub fn seeded_patients(&self) -> u32 {
        self.status.seeded_patients(self.bed_count)
    }
}

/// An ordered list of run configurations executed as one batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSpec {
    pub configs: Vec<SimulationConfig>,
}

impl BatchSpec {
    pub fn new(configs: Vec<SimulationConfig>) -> Self {
        Self { configs }
    }

    /// Cross product of horizons, initial statuses and seeds over a shared
    /// base configuration, in `(until, status, seed)` lexicographic order.
    pub fn cross(
        base: &SimulationConfig,
        untils: &[f64],
        statuses: &[HospitalStatus],
        seeds: &[u64],
    ) -> Self {
        let mut configs = Vec::with_capacity(untils.len() * statuses.len() * seeds.len());
        for &until in untils {
            for &status in statuses {
                for &seed in seeds {
                    configs.push(SimulationConfig {
                        until,
                        status,
                        seed,
                        ..*base
                    });
                }
            }
        }
        Self { configs }
    }

    /// The standard 18-run sweep: horizons 1000/10000/100000 days, all three
    /// initial statuses, seeds 978 and 979.
    pub fn standard_sweep(base: &SimulationConfig) -> Self {
        Self::cross(
            base,
            &[1_000.0, 10_000.0, 100_000.0],
            &HospitalStatus::ALL,
            &[978, 979],
        )
    }

    /// Validate every configuration and reject duplicate
    /// `(until, status, seed)` combinations.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.configs.is_empty() {
            return Err(ConfigError::EmptyBatch);
        }
        let mut seen: Vec<(u64, HospitalStatus, u64)> = Vec::with_capacity(self.configs.len());
        for config in &self.configs {
            config.validate()?;
            let key = (config.until.to_bits(), config.status, config.seed);
            if seen.contains(&key) {
                return Err(ConfigError::DuplicateCombination {
                    until: config.until,
                    status: config.status,
                    seed: config.seed,
                });
            }
            seen.push(key);
        }
        Ok(())
    }
}
