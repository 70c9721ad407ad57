//! `wardsim` — run ward simulations, batches and queueing analytics from
//! the command line.
//!
//! Every subcommand except `serve` talks to the HTTP service: either a
//! remote one named with `--server`, or an ephemeral in-process server
//! started transparently for the duration of the command. Data goes to
//! stdout (or to files named by flags); progress notes go to stderr.
//!
//! Exit codes: 0 success, 1 validation failure or runtime error,
//! 2 configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use wardsim_client::{Client, ClientError};
use wardsim_core::api::{
    AnalyticsRequest, BatchRequest, SimulateRequest, SweepSpec, ValidateRequest,
};
use wardsim_core::config::{HospitalStatus, SimulationConfig};
use wardsim_core::io::{emit_event_log, emit_summary, emit_timeseries, IoError};
use wardsim_core::Tolerances;

/// Keys accepted in `--config` files. All are optional; flags override.
const CONFIG_KEYS: &str = "\
Config file keys (TOML, all optional; flags take precedence):
  population, sickness_rate, hospital_probability, bed_count,
  hospital_heal_rate, home_heal_rate, rejection_min, rejection_max,
  until, status (\"empty\" | \"half-full\" | \"full\"), seed, warmup,
  summary_path, events_path, timeseries_path";

#[derive(Parser)]
#[command(
    name = "wardsim",
    version,
    about = "Simulate sickness and hospital care in a closed population",
    after_help = CONFIG_KEYS
)]
struct Cli {
    /// Base URL of a running wardsim service. Without it, each command
    /// starts a private in-process server.
    #[arg(long, global = true, value_name = "URL")]
    server: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and emit its summary, event log and time series.
    Simulate(SimulateArgs),
    /// Run a sweep or an explicit list of configurations and aggregate them.
    Batch(BatchArgs),
    /// Evaluate the closed-form queueing models without simulating.
    Analytics(AnalyticsArgs),
    /// Run a simulation and hold it against the closed-form models.
    Validate(ValidateArgs),
    /// Serve the HTTP API until interrupted.
    Serve(ServeArgs),
}

/// Model and run parameters, shared by every data subcommand.
#[derive(Args, Default)]
struct ModelArgs {
    /// TOML config file; see the key list at the bottom of --help.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Number of people in the town.
    #[arg(long)]
    population: Option<u32>,
    /// Per-person daily probability intensity of falling sick.
    #[arg(long, allow_negative_numbers = true)]
    sickness_rate: Option<f64>,
    /// Probability a new case seeks a hospital bed.
    #[arg(long, allow_negative_numbers = true)]
    hospital_probability: Option<f64>,
    /// Hospital bed capacity.
    #[arg(long)]
    bed_count: Option<u32>,
    /// Healing rate in a hospital bed (1/mean days).
    #[arg(long, allow_negative_numbers = true)]
    hospital_heal_rate: Option<f64>,
    /// Healing rate at home by choice (1/mean days).
    #[arg(long, allow_negative_numbers = true)]
    home_heal_rate: Option<f64>,
    /// Lower bound of the slowdown factor for rejected patients.
    #[arg(long, allow_negative_numbers = true)]
    rejection_min: Option<f64>,
    /// Upper bound of the slowdown factor for rejected patients.
    #[arg(long, allow_negative_numbers = true)]
    rejection_max: Option<f64>,
    /// Simulated horizon in days.
    #[arg(long, allow_negative_numbers = true)]
    until: Option<f64>,
    /// Beds occupied at the start: empty, half-full or full.
    #[arg(long, value_parser = parse_status)]
    status: Option<HospitalStatus>,
    /// Random seed; identical seeds reproduce runs exactly.
    #[arg(long)]
    seed: Option<u64>,
    /// Days to discard before statistics begin.
    #[arg(long, allow_negative_numbers = true)]
    warmup: Option<f64>,
}

fn parse_status(s: &str) -> Result<HospitalStatus, String> {
    match s {
        "empty" => Ok(HospitalStatus::Empty),
        "half-full" | "half_full" => Ok(HospitalStatus::HalfFull),
        "full" => Ok(HospitalStatus::Full),
        other => Err(format!(
            "`{other}` is not a hospital status (expected empty, half-full or full)"
        )),
    }
}

/// The `--config` file schema: the simulation keys plus output paths.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    population: Option<u32>,
    sickness_rate: Option<f64>,
    hospital_probability: Option<f64>,
    bed_count: Option<u32>,
    hospital_heal_rate: Option<f64>,
    home_heal_rate: Option<f64>,
    rejection_min: Option<f64>,
    rejection_max: Option<f64>,
    until: Option<f64>,
    status: Option<HospitalStatus>,
    seed: Option<u64>,
    warmup: Option<f64>,
    summary_path: Option<PathBuf>,
    events_path: Option<PathBuf>,
    timeseries_path: Option<PathBuf>,
}

impl FileConfig {
    fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }

    fn apply(&self, c: &mut SimulationConfig) {
        macro_rules! take {
            ($($field:ident),+) => {
                $(if let Some(v) = self.$field { c.$field = v; })+
            };
        }
        take!(
            population,
            sickness_rate,
            hospital_probability,
            bed_count,
            hospital_heal_rate,
            home_heal_rate,
            rejection_min,
            rejection_max,
            until,
            status,
            seed,
            warmup
        );
    }
}

impl ModelArgs {
    /// Defaults, overlaid by the config file, overlaid by explicit flags.
    /// Validation is left to the service so there is a single authority.
    fn resolve(&self) -> Result<(SimulationConfig, FileConfig), Failure> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let mut c = SimulationConfig::default();
        file.apply(&mut c);
        macro_rules! take {
            ($($field:ident),+) => {
                $(if let Some(v) = self.$field { c.$field = v; })+
            };
        }
        take!(
            population,
            sickness_rate,
            hospital_probability,
            bed_count,
            hospital_heal_rate,
            home_heal_rate,
            rejection_min,
            rejection_max,
            until,
            status,
            seed,
            warmup
        );
        Ok((c, file))
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Write the summary report JSON here instead of stdout.
    #[arg(long, value_name = "PATH")]
    summary: Option<PathBuf>,
    /// Write the chronological event log CSV here.
    #[arg(long, value_name = "PATH")]
    events: Option<PathBuf>,
    /// Write the plot-ready `time,num_sick,num_in_hospital` CSV here.
    #[arg(long, value_name = "PATH")]
    timeseries: Option<PathBuf>,
    /// Omit the future-event-list column from the event log.
    #[arg(long)]
    no_fel: bool,
}

#[derive(Args)]
struct BatchArgs {
    /// Base configuration for sweeps (file and flags as in `simulate`).
    #[command(flatten)]
    model: ModelArgs,
    /// Horizons to sweep (comma-separated). Default: 1000,10000,100000.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    untils: Vec<f64>,
    /// Initial hospital statuses to sweep. Default: all three.
    #[arg(long, value_delimiter = ',', value_parser = parse_status)]
    statuses: Vec<HospitalStatus>,
    /// Seeds to sweep. Default: 978,979.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// TOML file with explicit `[[run]]` tables instead of a sweep.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["untils", "statuses", "seeds"])]
    spec: Option<PathBuf>,
    /// Write the batch outcome JSON here instead of stdout.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyticsArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Write the analytic bundle JSON here instead of stdout.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Relative tolerance for time-average responses.
    #[arg(long, allow_negative_numbers = true)]
    mean_tolerance: Option<f64>,
    /// Relative tolerance for the empty-hospital probability.
    #[arg(long, allow_negative_numbers = true)]
    p_empty_tolerance: Option<f64>,
    /// Write the full report JSON here instead of stdout.
    #[arg(long, value_name = "PATH")]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    /// Address to listen on.
    #[arg(long, default_value = "127.0.0.1:8314")]
    addr: String,
}

/// Explicit batch file: `[[run]]` tables of simulation keys, each applied
/// over the base configuration.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SpecFile {
    run: Vec<FileConfig>,
}

enum Failure {
    /// Bad parameters, files or requests — exit 2.
    Config(String),
    /// Everything else that stops the command — exit 1.
    Runtime(String),
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Api { status: 400, message, .. } => Failure::Config(message),
            bad @ ClientError::InvalidBase(_) => Failure::Config(bad.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .expect("tokio runtime");
    match runtime.block_on(dispatch(cli)) {
        Ok(code) => code,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

async fn dispatch(cli: Cli) -> Result<ExitCode, Failure> {
    if let Command::Serve(args) = &cli.command {
        return serve(args).await;
    }
    let client = connect(cli.server.as_deref()).await?;
    match cli.command {
        Command::Simulate(args) => simulate(&client, args).await,
        Command::Batch(args) => batch(&client, args).await,
        Command::Analytics(args) => analytics(&client, args).await,
        Command::Validate(args) => validate(&client, args).await,
        Command::Serve(_) => unreachable!("handled above"),
    }
}

/// Use the named server, or start a private one on a loopback port. The
/// private server lives in this process and dies with it.
async fn connect(server: Option<&str>) -> Result<Client, Failure> {
    let base = match server {
        Some(url) => url.to_owned(),
        None => {
            let (addr, _task) = wardsim_service::spawn("127.0.0.1:0")
                .await
                .map_err(|e| Failure::Runtime(format!("cannot start embedded server: {e}")))?;
            format!("http://{addr}")
        }
    };
    Ok(Client::new(&base)?)
}

async fn serve(args: &ServeArgs) -> Result<ExitCode, Failure> {
    let listener = tokio::net::TcpListener::bind(&args.addr)
        .await
        .map_err(|e| Failure::Config(format!("cannot listen on {}: {e}", args.addr)))?;
    let addr = listener
        .local_addr()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    eprintln!("listening on http://{addr}");
    wardsim_service::serve(listener)
        .await
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok(ExitCode::SUCCESS)
}

/// Print pretty JSON to stdout, or write it to `path` and note that on
/// stderr.
fn deliver<T: Serialize>(value: &T, path: Option<&Path>, what: &str) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    match path {
        None => println!("{json}"),
        Some(path) => {
            std::fs::write(path, json + "\n").map_err(|e| {
                Failure::Runtime(format!("cannot write {}: {e}", path.display()))
            })?;
            eprintln!("wrote {what} to {}", path.display());
        }
    }
    Ok(())
}

async fn simulate(client: &Client, args: SimulateArgs) -> Result<ExitCode, Failure> {
    let (config, file) = args.model.resolve()?;
    let summary_path = args.summary.or(file.summary_path);
    let events_path = args.events.or(file.events_path);
    let timeseries_path = args.timeseries.or(file.timeseries_path);

    let request = SimulateRequest {
        config,
        include_events: events_path.is_some(),
        include_timeseries: timeseries_path.is_some(),
        include_fel: !args.no_fel,
        ..SimulateRequest::default()
    };
    let response = client.simulate(&request).await?;

    if let (Some(path), Some(events)) = (&events_path, &response.events) {
        emit_event_log(path, events, !args.no_fel)?;
        eprintln!("wrote {} events to {}", events.len(), path.display());
    }
    if let (Some(path), Some(points)) = (&timeseries_path, &response.timeseries) {
        emit_timeseries(path, points)?;
        eprintln!("wrote {} points to {}", points.len(), path.display());
    }
    match &summary_path {
        Some(path) => {
            emit_summary(path, &response.report)?;
            eprintln!("wrote summary to {}", path.display());
        }
        None => deliver(&response.report, None, "summary")?,
    }
    Ok(ExitCode::SUCCESS)
}

async fn batch(client: &Client, args: BatchArgs) -> Result<ExitCode, Failure> {
    let (base, _) = args.model.resolve()?;
    let request = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            let spec: SpecFile = toml::from_str(&text)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            let configs = spec
                .run
                .iter()
                .map(|entry| {
                    let mut c = base;
                    entry.apply(&mut c);
                    c
                })
                .collect();
            BatchRequest {
                configs,
                sweep: None,
            }
        }
        None => BatchRequest {
            configs: vec![],
            sweep: Some(SweepSpec {
                base,
                untils: defaulted(args.untils, &[1_000.0, 10_000.0, 100_000.0]),
                statuses: defaulted(args.statuses, &HospitalStatus::ALL),
                seeds: defaulted(args.seeds, &[978, 979]),
            }),
        },
    };

    let outcome = client.batch(&request).await?;
    let failures: Vec<&str> = outcome
        .entries
        .iter()
        .filter_map(|e| e.error.as_deref())
        .collect();
    for error in &failures {
        eprintln!("run failed: {error}");
    }
    deliver(&outcome, args.output.as_deref(), "batch outcome")?;
    if outcome.aggregate.is_none() {
        return Err(Failure::Runtime("every run in the batch failed".into()));
    }
    Ok(ExitCode::SUCCESS)
}

fn defaulted<T: Clone>(given: Vec<T>, fallback: &[T]) -> Vec<T> {
    if given.is_empty() {
        fallback.to_vec()
    } else {
        given
    }
}

async fn analytics(client: &Client, args: AnalyticsArgs) -> Result<ExitCode, Failure> {
    let (config, _) = args.model.resolve()?;
    let bundle = client.analytics(&AnalyticsRequest { config }).await?;
    deliver(&bundle, args.output.as_deref(), "analytics")?;
    Ok(ExitCode::SUCCESS)
}

async fn validate(client: &Client, args: ValidateArgs) -> Result<ExitCode, Failure> {
    let (config, file) = args.model.resolve()?;
    let mut tolerances = Tolerances::default();
    if let Some(t) = args.mean_tolerance {
        tolerances.mean_rel = t;
    }
    if let Some(t) = args.p_empty_tolerance {
        tolerances.p_empty_rel = t;
    }
    let report = client
        .validate(&ValidateRequest { config, tolerances })
        .await?;
    let summary_path = args.summary.or(file.summary_path);
    match &summary_path {
        Some(path) => {
            emit_summary(path, &report)?;
            eprintln!("wrote report to {}", path.display());
        }
        None => deliver(&report, None, "report")?,
    }
    if !report.validation.passed() {
        let failed = report
            .validation
            .comparisons
            .iter()
            .filter(|c| !c.pass)
            .count();
        eprintln!(
            "validation failed: {failed} of {} comparisons out of tolerance",
            report.validation.comparisons.len()
        );
        return Ok(ExitCode::from(1));
    }
    eprintln!("validation passed");
    Ok(ExitCode::SUCCESS)
}
