//! File outputs: the event-log CSV, the occupancy time series CSV, and the
//! JSON summary report. Floats in CSV cells are printed with six
//! significant digits; the JSON summary keeps full precision and
//! round-trips exactly.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{analytic_bundle, validate, AnalyticBundle, AnalyticsError, Tolerances, ValidationReport};
use crate::config::SimulationConfig;
use crate::kernel::{EventKind, ScheduledEvent};
use crate::metrics::{EpisodeCounts, EventLogRow, EventType, HealingPlace, SummaryResponses};
use crate::model::RunOutput;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("event log parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("failed to encode JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Format with up to `sig` significant digits, dropping trailing zeros, in
/// fixed or scientific notation depending on magnitude (printf `%g` style).
pub fn fmt_sig(x: f64, sig: usize) -> String {
    debug_assert!(sig >= 1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("{:e} always carries an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if exp >= -4 && exp < sig as i32 {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_fraction(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_fraction(mantissa.to_string()))
    }
}

fn trim_fraction(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

const SIG_DIGITS: usize = 6;

/// Column order of the event-log CSV.
pub const EVENT_LOG_HEADER: &str =
    "sim_time,person_id,event_type,healing_place,heal_time,interarrival,num_sick,num_in_hospital,fel";

fn header_without_fel() -> &'static str {
    EVENT_LOG_HEADER
        .strip_suffix(",fel")
        .expect("header ends with the fel column")
}

fn fel_cell(entries: &[ScheduledEvent]) -> String {
    entries
        .iter()
        .map(|e| format!("{}:{}:{}", fmt_sig(e.time, SIG_DIGITS), e.kind.as_str(), e.person))
        .collect::<Vec<_>>()
        .join(";")
}

fn opt_cell(value: Option<f64>) -> String {
    value.map(|v| fmt_sig(v, SIG_DIGITS)).unwrap_or_default()
}

/// Render the event log as CSV. With `include_fel` false the snapshot
/// column is omitted entirely.
pub fn event_log_to_csv(rows: &[EventLogRow], include_fel: bool) -> String {
    let mut out = String::new();
    out.push_str(if include_fel {
        EVENT_LOG_HEADER
    } else {
        header_without_fel()
    });
    out.push('\n');
    for row in rows {
        out.push_str(&fmt_sig(row.sim_time, SIG_DIGITS));
        out.push(',');
        out.push_str(&row.person_id.to_string());
        out.push(',');
        out.push_str(row.event_type.as_str());
        out.push(',');
        out.push_str(row.healing_place.as_str());
        out.push(',');
        out.push_str(&opt_cell(row.heal_time));
        out.push(',');
        out.push_str(&opt_cell(row.interarrival));
        out.push(',');
        out.push_str(&row.num_sick.to_string());
        out.push(',');
        out.push_str(&row.num_in_hospital.to_string());
        if include_fel {
            out.push(',');
            out.push_str(&fel_cell(&row.fel));
        }
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    let mut file = std::fs::File::create(path).map_err(|source| IoError::Write {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(contents.as_bytes()).map_err(|source| IoError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Write the event log CSV to `path`.
pub fn emit_event_log(path: &Path, rows: &[EventLogRow], include_fel: bool) -> Result<(), IoError> {
    write_file(path, &event_log_to_csv(rows, include_fel))
}

/// Parse an event log produced by [`event_log_to_csv`]. Returns the rows and
/// whether the fel column was present.
pub fn parse_event_log_csv(text: &str) -> Result<(Vec<EventLogRow>, bool), IoError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(IoError::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let has_fel = if header == EVENT_LOG_HEADER {
        true
    } else if header == header_without_fel() {
        false
    } else {
        return Err(IoError::Parse {
            line: 1,
            message: format!("unexpected header `{header}`"),
        });
    };
    let expected_cells = if has_fel { 9 } else { 8 };
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != expected_cells {
            return Err(IoError::Parse {
                line: lineno,
                message: format!("expected {expected_cells} cells, got {}", cells.len()),
            });
        }
        let parse_f64 = |cell: &str, what: &str| -> Result<f64, IoError> {
            cell.parse().map_err(|_| IoError::Parse {
                line: lineno,
                message: format!("bad {what} `{cell}`"),
            })
        };
        let parse_opt = |cell: &str, what: &str| -> Result<Option<f64>, IoError> {
            if cell.is_empty() {
                Ok(None)
            } else {
                parse_f64(cell, what).map(Some)
            }
        };
        let event_type = match cells[2] {
            "sick" => EventType::Sick,
            "heal" => EventType::Heal,
            other => {
                return Err(IoError::Parse {
                    line: lineno,
                    message: format!("bad event_type `{other}`"),
                })
            }
        };
        let healing_place = match cells[3] {
            "hospital" => HealingPlace::Hospital,
            "home" => HealingPlace::Home,
            "rejected_home" => HealingPlace::RejectedHome,
            other => {
                return Err(IoError::Parse {
                    line: lineno,
                    message: format!("bad healing_place `{other}`"),
                })
            }
        };
        let fel = if has_fel && !cells[8].is_empty() {
            cells[8]
                .split(';')
                .map(|entry| -> Result<ScheduledEvent, IoError> {
                    let parts: Vec<&str> = entry.split(':').collect();
                    if parts.len() != 3 {
                        return Err(IoError::Parse {
                            line: lineno,
                            message: format!("bad fel entry `{entry}`"),
                        });
                    }
                    let kind = match parts[1] {
                        "arrival" => EventKind::Arrival,
                        "departure" => EventKind::Departure,
                        other => {
                            return Err(IoError::Parse {
                                line: lineno,
                                message: format!("bad fel kind `{other}`"),
                            })
                        }
                    };
                    Ok(ScheduledEvent {
                        time: parse_f64(parts[0], "fel time")?,
                        kind,
                        person: parts[2].parse().map_err(|_| IoError::Parse {
                            line: lineno,
                            message: format!("bad fel person `{}`", parts[2]),
                        })?,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?
        } else {
            Vec::new()
        };
        rows.push(EventLogRow {
            sim_time: parse_f64(cells[0], "sim_time")?,
            person_id: cells[1].parse().map_err(|_| IoError::Parse {
                line: lineno,
                message: format!("bad person_id `{}`", cells[1]),
            })?,
            event_type,
            healing_place,
            heal_time: parse_opt(cells[4], "heal_time")?,
            interarrival: parse_opt(cells[5], "interarrival")?,
            num_sick: cells[6].parse().map_err(|_| IoError::Parse {
                line: lineno,
                message: format!("bad num_sick `{}`", cells[6]),
            })?,
            num_in_hospital: cells[7].parse().map_err(|_| IoError::Parse {
                line: lineno,
                message: format!("bad num_in_hospital `{}`", cells[7]),
            })?,
            fel,
        });
    }
    Ok((rows, has_fel))
}

/// One sampled point of the sick-count and occupancy trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesPoint {
    pub time: f64,
    pub num_sick: u32,
    pub num_in_hospital: u32,
}

impl PartialEq<(f64, u32, u32)> for TimeSeriesPoint {
    fn eq(&self, other: &(f64, u32, u32)) -> bool {
        self.time == other.0 && self.num_sick == other.1 && self.num_in_hospital == other.2
    }
}

/// State trajectory of a run: the initial state at time zero followed by the
/// post-event state of every logged event.
pub fn timeseries_points(output: &RunOutput) -> Vec<TimeSeriesPoint> {
    let mut points = Vec::with_capacity(output.log.len() + 1);
    points.push(TimeSeriesPoint {
        time: 0.0,
        num_sick: output.initial_sick,
        num_in_hospital: output.initial_beds,
    });
    points.extend(output.log.iter().map(|row| TimeSeriesPoint {
        time: row.sim_time,
        num_sick: row.num_sick,
        num_in_hospital: row.num_in_hospital,
    }));
    points
}

pub const TIMESERIES_HEADER: &str = "time,num_sick,num_in_hospital";

pub fn timeseries_to_csv(points: &[TimeSeriesPoint]) -> String {
    let mut out = String::from(TIMESERIES_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_sig(p.time, SIG_DIGITS),
            p.num_sick,
            p.num_in_hospital
        ));
    }
    out
}

pub fn emit_timeseries(path: &Path, points: &[TimeSeriesPoint]) -> Result<(), IoError> {
    write_file(path, &timeseries_to_csv(points))
}

/// The summary document of one run: configuration, observed responses,
/// the analytic pipeline for the same parameters, and the comparison of
/// the two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: SimulationConfig,
    pub initial_sick: u32,
    pub initial_beds: u32,
    pub events_processed: u64,
    pub responses: SummaryResponses,
    pub episodes: EpisodeCounts,
    pub analytic: AnalyticBundle,
    pub validation: ValidationReport,
}

impl RunReport {
    pub fn new(output: &RunOutput, tolerances: &Tolerances) -> Result<Self, AnalyticsError> {
        let analytic = analytic_bundle(&output.config)?;
        let validation = validate(&output.responses, &analytic, tolerances);
        Ok(Self {
            config: output.config,
            initial_sick: output.initial_sick,
            initial_beds: output.initial_beds,
            events_processed: output.events_processed,
            responses: output.responses,
            episodes: output.episodes,
            analytic,
            validation,
        })
    }
}

/// Write a summary report as pretty-printed JSON.
pub fn emit_summary(path: &Path, report: &RunReport) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    write_file(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::HospitalStatus;
    use crate::model::{run, RunOptions};

    #[test]
    fn fmt_sig_covers_fixed_and_scientific_ranges() {
        let cases: Vec<(f64, &str)> = vec![
            (0.0, "0"),
            (6.0, "6"),
            (-9.8, "-9.8"),
            (46.85, "46.85"),
            (1234.567, "1234.57"),
            (100000.0, "100000"),
            (1000000.0, "1e6"),
            (9999999.0, "1e7"),
            (0.000123456789, "0.000123457"),
            (0.0000123456789, "1.23457e-5"),
            (0.102040816, "0.102041"),
            (3.5e-5, "3.5e-5"),
            (2.0143e-21, "2.0143e-21"),
            (50.06334, "50.0633"),
        ];
        for (x, expected) in cases {
            assert_eq!(fmt_sig(x, 6), expected, "for {x}");
        }
        assert_eq!(fmt_sig(46.944, 3), "46.9");
        assert_eq!(fmt_sig(0.5, 1), "0.5");
    }

    fn sample_rows() -> Vec<EventLogRow> {
        vec![
            EventLogRow {
                sim_time: 5.5,
                person_id: 12,
                event_type: EventType::Sick,
                healing_place: HealingPlace::Hospital,
                heal_time: None,
                interarrival: Some(0.25),
                num_sick: 3,
                num_in_hospital: 1,
                fel: vec![
                    ScheduledEvent {
                        time: 6.5,
                        kind: EventKind::Departure,
                        person: 12,
                    },
                    ScheduledEvent {
                        time: 7.25,
                        kind: EventKind::Arrival,
                        person: 40,
                    },
                ],
            },
            EventLogRow {
                sim_time: 6.5,
                person_id: 12,
                event_type: EventType::Heal,
                healing_place: HealingPlace::Hospital,
                heal_time: Some(1.0),
                interarrival: None,
                num_sick: 2,
                num_in_hospital: 0,
                fel: vec![ScheduledEvent {
                    time: 7.25,
                    kind: EventKind::Arrival,
                    person: 40,
                }],
            },
        ]
    }

    #[test]
    fn event_log_csv_layout_is_stable() {
        let csv = event_log_to_csv(&sample_rows(), true);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], EVENT_LOG_HEADER);
        assert_eq!(
            lines[1],
            "5.5,12,sick,hospital,,0.25,3,1,6.5:departure:12;7.25:arrival:40"
        );
        assert_eq!(lines[2], "6.5,12,heal,hospital,1,,2,0,7.25:arrival:40");
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn empty_log_is_just_the_header() {
        assert_eq!(event_log_to_csv(&[], true), format!("{EVENT_LOG_HEADER}\n"));
    }

    #[test]
    fn fel_column_can_be_omitted() {
        let csv = event_log_to_csv(&sample_rows(), false);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "sim_time,person_id,event_type,healing_place,heal_time,interarrival,num_sick,num_in_hospital");
        assert_eq!(lines[1], "5.5,12,sick,hospital,,0.25,3,1");
    }

    #[test]
    fn csv_round_trips_through_the_parser() {
        let rows = sample_rows();
        for include_fel in [true, false] {
            let csv = event_log_to_csv(&rows, include_fel);
            let (parsed, had_fel) = parse_event_log_csv(&csv).unwrap();
            assert_eq!(had_fel, include_fel);
            assert_eq!(parsed.len(), rows.len());
            for (p, r) in parsed.iter().zip(&rows) {
                assert_eq!(p.sim_time, r.sim_time);
                assert_eq!(p.person_id, r.person_id);
                assert_eq!(p.event_type, r.event_type);
                assert_eq!(p.healing_place, r.healing_place);
                assert_eq!(p.heal_time, r.heal_time);
                assert_eq!(p.interarrival, r.interarrival);
                assert_eq!((p.num_sick, p.num_in_hospital), (r.num_sick, r.num_in_hospital));
                if include_fel {
                    assert_eq!(p.fel, r.fel);
                } else {
                    assert!(p.fel.is_empty());
                }
            }
        }
    }

    #[test]
    fn parser_flags_malformed_input() {
        assert!(matches!(
            parse_event_log_csv("nonsense\n"),
            Err(IoError::Parse { line: 1, .. })
        ));
        let bad_row = format!("{EVENT_LOG_HEADER}\n1.0,5,sick,hospital\n");
        assert!(matches!(
            parse_event_log_csv(&bad_row),
            Err(IoError::Parse { line: 2, .. })
        ));
        let bad_value = format!("{EVENT_LOG_HEADER}\nxyz,5,sick,hospital,,0.2,1,1,\n");
        assert!(matches!(
            parse_event_log_csv(&bad_value),
            Err(IoError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn timeseries_starts_at_the_initial_state() {
        let c = SimulationConfig {
            until: 50.0,
            status: HospitalStatus::Full,
            ..SimulationConfig::default()
        };
        let out = run(&c, &RunOptions::default()).unwrap();
        let points = timeseries_points(&out);
        assert_eq!(points.len(), out.log.len() + 1);
        assert_eq!(points[0], (0.0, 66, 66));
        let csv = timeseries_to_csv(&points);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(TIMESERIES_HEADER));
        assert_eq!(lines.next(), Some("0,66,66"));
    }

    #[test]
    fn summary_json_round_trips_exactly() {
        let c = SimulationConfig {
            until: 200.0,
            ..SimulationConfig::default()
        };
        let out = run(&c, &RunOptions::summary_only()).unwrap();
        let report = RunReport::new(&out, &Tolerances::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.json");
        emit_summary(&path, &report).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let parsed: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, report);
        // Spot-check the vocabulary of the document.
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(value["responses"]["avg_sick"].is_number());
        assert!(value["analytic"]["at_mu_high"]["population"]["mean_sick"].is_number());
        assert!(value["validation"]["verdict"].is_string());
        assert_eq!(value["config"]["population"], 1582);
    }

    #[test]
    fn missing_directories_surface_as_io_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nope").join("out.csv");
        let err = emit_event_log(&path, &[], true).unwrap_err();
        assert!(matches!(err, IoError::Write { .. }));
        assert!(err.to_string().contains("out.csv"));
    }

    /// Recomputing the responses from the emitted CSV (6 significant
    /// digits) must agree with the live run to print precision.
    #[test]
    fn emitted_csv_reproduces_the_summary_within_print_precision() {
        let config = SimulationConfig {
            until: 1_000.0,
            status: HospitalStatus::Full,
            ..SimulationConfig::default()
        };
        let out = run(&config, &RunOptions::default()).unwrap();
        let text = event_log_to_csv(&out.log, false);
        let (rows, _) = parse_event_log_csv(&text).unwrap();
        let replayed = crate::metrics::replay_responses(
            &rows,
            config.population,
            out.initial_sick,
            out.initial_beds,
            config.warmup,
            config.until,
        )
        .unwrap();
        // Timestamps carry 6 significant digits, so durations inherit an
        // absolute error around the time granularity; allow that on top of
        // a relative band.
        let close = |a: f64, b: f64, what: &str| {
            assert!(
                (a - b).abs() < 1e-4 * b.abs() + 1e-6,
                "{what}: replayed {a} vs live {b}"
            );
        };
        let live = out.responses;
        close(replayed.avg_sick, live.avg_sick, "avg_sick");
        close(replayed.std_sick, live.std_sick, "std_sick");
        close(replayed.avg_beds, live.avg_beds, "avg_beds");
        close(replayed.std_beds, live.std_beds, "std_beds");
        close(
            replayed.avg_proportion_sick,
            live.avg_proportion_sick,
            "avg_proportion_sick",
        );
        close(
            replayed.avg_sickness_time,
            live.avg_sickness_time,
            "avg_sickness_time",
        );
        close(
            replayed.p_hospital_empty,
            live.p_hospital_empty,
            "p_hospital_empty",
        );
        assert_eq!(
            replayed.proportion_healed_in_hospital,
            live.proportion_healed_in_hospital,
            "episode counts are integers and must replay exactly"
        );
    }
}
