//! Closed-form queueing analytics used to cross-check simulation output.
//!
//! Two classical models are evaluated:
//!
//! * A finite-source (machine-repair) model for the number of sick people:
//!   each of `n` healthy people falls sick at rate `lambda` and heals
//!   independently at rate `mu`, so the stationary sick count follows
//!   `P(k) = C(n,k) rho^k / sum_j C(n,j) rho^j` with `rho = lambda/mu`.
//! * An Erlang loss model for bed occupancy: sick people needing a bed
//!   arrive at rate `lambda_h` to `K` beds with mean stay `1/mu1`; arrivals
//!   that find all beds busy are lost.
//!
//! At realistic population sizes the sums involve terms like
//! `C(1582, 50) * rho^50`, far outside f64 range, so every sum is evaluated
//! in log space with a cumulative log-factorial table and log-sum-exp.
//!
//! Healing speed depends on where a patient ends up, so the single service
//! rate fed to the finite-source model is only known as an interval:
//! `mu_high` assumes every hospital-bound patient gets a bed, `mu_low`
//! assumes every one of them is rejected and heals slower at home.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SimulationConfig;
use crate::metrics::SummaryResponses;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative and finite, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("population must be at least 1")]
    EmptyPopulation,
    #[error("mean rejection factor must be at least 1, got {0}")]
    RejectionFactorBelowOne(f64),
}

fn require_positive(name: &'static str, value: f64) -> Result<f64, AnalyticsError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(AnalyticsError::NonPositive { name, value })
    }
}

/// Cumulative table of ln(k!) for k = 0..=n.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    table.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

/// ln(sum(exp(x))) with the usual max shift for stability.
fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Bounds for the healing rate of a randomly chosen sick person.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceRateInterval {
    /// Healing rate if every hospital-bound patient is rejected.
    pub mu_low: f64,
    /// Healing rate if every hospital-bound patient gets a bed.
    pub mu_high: f64,
}

/// Mean healing rate bounds for a population where a fraction `p` seeks a
/// hospital bed (mean stay `s_hospital` if admitted, stretched by `r_mean`
/// if rejected) and the rest heal at home (mean stay `s_home`).
pub fn service_rate_interval(
    p: f64,
    s_hospital: f64,
    s_home: f64,
    r_mean: f64,
) -> Result<ServiceRateInterval, AnalyticsError> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(AnalyticsError::InvalidProbability(p));
    }
    require_positive("hospital healing time", s_hospital)?;
    require_positive("home healing time", s_home)?;
    if !(r_mean >= 1.0) || !r_mean.is_finite() {
        return Err(AnalyticsError::RejectionFactorBelowOne(r_mean));
    }
    let best_case = p * s_hospital + (1.0 - p) * s_home;
    let worst_case = p * s_hospital * r_mean + (1.0 - p) * s_home;
    Ok(ServiceRateInterval {
        mu_low: 1.0 / worst_case,
        mu_high: 1.0 / best_case,
    })
}

/// Stationary quantities of the finite-source sickness model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineRepairResult {
    pub population: u32,
    /// Probability that nobody is sick.
    pub p_empty: f64,
    /// Natural log of `p_empty`, exact even when `p_empty` underflows.
    pub ln_p_empty: f64,
    /// Mean number of sick people.
    pub mean_sick: f64,
    /// Mean rate at which people fall sick: `lambda * (population - mean_sick)`.
    pub effective_arrival_rate: f64,
    /// Mean time spent sick, by Little's law.
    pub mean_sickness_time: f64,
}

fn machine_repair_log_terms(
    population: u32,
    lambda: f64,
    mu: f64,
) -> Result<Vec<f64>, AnalyticsError> {
    if population == 0 {
        return Err(AnalyticsError::EmptyPopulation);
    }
    require_positive("sickness rate", lambda)?;
    require_positive("healing rate", mu)?;
    let n = population as usize;
    let ln_rho = (lambda / mu).ln();
    let lnf = ln_factorials(n);
    Ok((0..=n)
        .map(|k| lnf[n] - lnf[k] - lnf[n - k] + k as f64 * ln_rho)
        .collect())
}

/// Evaluate the finite-source model for `population` people falling sick at
/// rate `lambda` each and healing at rate `mu` each.
pub fn machine_repair(
    population: u32,
    lambda: f64,
    mu: f64,
) -> Result<MachineRepairResult, AnalyticsError> {
    let terms = machine_repair_log_terms(population, lambda, mu)?;
    let lse = log_sum_exp(&terms);
    let mean_sick: f64 = terms
        .iter()
        .enumerate()
        .map(|(k, t)| k as f64 * (t - lse).exp())
        .sum();
    let effective_arrival_rate = lambda * (population as f64 - mean_sick);
    Ok(MachineRepairResult {
        population,
        p_empty: (-lse).exp(),
        ln_p_empty: -lse,
        mean_sick,
        effective_arrival_rate,
        mean_sickness_time: mean_sick / effective_arrival_rate,
    })
}

/// Full stationary distribution of the sick count, `P(0)..=P(population)`.
pub fn machine_repair_distribution(
    population: u32,
    lambda: f64,
    mu: f64,
) -> Result<Vec<f64>, AnalyticsError> {
    let terms = machine_repair_log_terms(population, lambda, mu)?;
    let lse = log_sum_exp(&terms);
    Ok(terms.iter().map(|t| (t - lse).exp()).collect())
}

/// Rate at which sick people ask for a hospital bed: the fraction `p` of the
/// overall sickness flow.
pub fn hospital_arrival_rate(effective_arrival_rate: f64, p: f64) -> f64 {
    effective_arrival_rate * p
}

/// Stationary quantities of the Erlang loss (blocked-customers-cleared)
/// model for bed occupancy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErlangLossResult {
    /// Arrival rate of bed requests.
    pub arrival_rate: f64,
    /// Offered load `a = arrival_rate / service_rate`, in erlangs. Equals the
    /// mean occupancy of an infinite-capacity hospital, and approximates the
    /// real mean occupancy when blocking is negligible.
    pub offered_load: f64,
    /// Mean number of occupied beds, `a * (1 - blocking)`.
    pub carried_load: f64,
    /// Probability that no bed is occupied.
    pub p_empty: f64,
    /// Probability that an arriving request finds every bed busy.
    pub blocking: f64,
}

/// Evaluate the Erlang loss model: requests at rate `arrival_rate`, mean
/// service time `1/service_rate`, and `servers` beds.
pub fn erlang_loss(
    arrival_rate: f64,
    service_rate: f64,
    servers: u32,
) -> Result<ErlangLossResult, AnalyticsError> {
    if !(arrival_rate >= 0.0) || !arrival_rate.is_finite() {
        return Err(AnalyticsError::Negative {
            name: "arrival rate",
            value: arrival_rate,
        });
    }
    require_positive("service rate", service_rate)?;
    let a = arrival_rate / service_rate;
    let k = servers as usize;
    let lnf = ln_factorials(k);
    // Term k=0 is pinned to 0 so a zero load does not produce 0 * ln(0).
    let terms: Vec<f64> = (0..=k)
        .map(|j| if j == 0 { 0.0 } else { j as f64 * a.ln() - lnf[j] })
        .collect();
    let lse = log_sum_exp(&terms);
    let p_empty = (-lse).exp();
    let blocking = (terms[k] - lse).exp();
    Ok(ErlangLossResult {
        arrival_rate,
        offered_load: a,
        carried_load: a * (1.0 - blocking),
        p_empty,
        blocking,
    })
}

/// Analytics evaluated at one end of the service-rate interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticBranch {
    /// The healing rate this branch assumes for every sick person.
    pub mu: f64,
    pub population: MachineRepairResult,
    pub hospital_arrival_rate: f64,
    pub hospital: ErlangLossResult,
}

/// The full analytic pipeline for one model configuration: healing-rate
/// bounds, then the finite-source and Erlang-loss models at each bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticBundle {
    pub service_rate: ServiceRateInterval,
    pub at_mu_low: AnalyticBranch,
    pub at_mu_high: AnalyticBranch,
}

fn branch(config: &SimulationConfig, mu: f64) -> Result<AnalyticBranch, AnalyticsError> {
    let population = machine_repair(config.population, config.sickness_rate, mu)?;
    let lambda_h = hospital_arrival_rate(
        population.effective_arrival_rate,
        config.hospital_probability,
    );
    let hospital = erlang_loss(lambda_h, config.hospital_heal_rate, config.bed_count)?;
    Ok(AnalyticBranch {
        mu,
        population,
        hospital_arrival_rate: lambda_h,
        hospital,
    })
}

/// Evaluate the whole analytic pipeline for a configuration.
pub fn analytic_bundle(config: &SimulationConfig) -> Result<AnalyticBundle, AnalyticsError> {
    let r_mean = (config.rejection_min + config.rejection_max) / 2.0;
    let service_rate = service_rate_interval(
        config.hospital_probability,
        1.0 / config.hospital_heal_rate,
        1.0 / config.home_heal_rate,
        r_mean,
    )?;
    Ok(AnalyticBundle {
        service_rate,
        at_mu_low: branch(config, service_rate.mu_low)?,
        at_mu_high: branch(config, service_rate.mu_high)?,
    })
}

/// Relative tolerances for simulation-versus-analytics comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// For time-average comparisons (sick counts, bed occupancy, times).
    pub mean_rel: f64,
    /// For the empty-hospital probability, a rare-event estimate with much
    /// higher variance.
    pub p_empty_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mean_rel: 0.05,
            p_empty_rel: 0.60,
        }
    }
}

/// One simulated-versus-analytic comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub response: String,
    pub simulated: f64,
    pub analytic: f64,
    pub abs_deviation: f64,
    /// `abs_deviation / |analytic|`.
    pub rel_deviation: f64,
    /// Relative tolerance this comparison is held to.
    pub tolerance: f64,
    pub pass: bool,
}

fn compare(response: &str, simulated: f64, analytic: f64, tolerance: f64) -> Comparison {
    let abs_deviation = (simulated - analytic).abs();
    let rel_deviation = if analytic != 0.0 {
        abs_deviation / analytic.abs()
    } else if abs_deviation == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Comparison {
        response: response.to_string(),
        simulated,
        analytic,
        abs_deviation,
        rel_deviation,
        tolerance,
        pass: rel_deviation <= tolerance,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome of holding a run's responses against the analytic pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub comparisons: Vec<Comparison>,
    pub verdict: Verdict,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Compare a run's responses against the admitted-everywhere analytic branch
/// (`mu_high`), which is the tight bound when blocking is rare.
pub fn validate(
    responses: &SummaryResponses,
    bundle: &AnalyticBundle,
    tolerances: &Tolerances,
) -> ValidationReport {
    let branch = &bundle.at_mu_high;
    let pop = &branch.population;
    let comparisons = vec![
        compare(
            "avg_sick",
            responses.avg_sick,
            pop.mean_sick,
            tolerances.mean_rel,
        ),
        compare(
            "avg_proportion_sick",
            responses.avg_proportion_sick,
            pop.mean_sick / pop.population as f64,
            tolerances.mean_rel,
        ),
        compare(
            "avg_sickness_time",
            responses.avg_sickness_time,
            pop.mean_sickness_time,
            tolerances.mean_rel,
        ),
        compare(
            "avg_beds",
            responses.avg_beds,
            branch.hospital.offered_load,
            tolerances.mean_rel,
        ),
        compare(
            "p_hospital_empty",
            responses.p_hospital_empty,
            branch.hospital.p_empty,
            tolerances.p_empty_rel,
        ),
    ];
    let verdict = if comparisons.iter().all(|c| c.pass) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    ValidationReport {
        comparisons,
        verdict,
    }
}
