//! Run instrumentation: the event log, time-weighted statistics, and the
//! summary responses extracted from a run.
//!
//! All time averages are integrals of a piecewise-constant state trajectory
//! divided by the observed duration. When a warmup horizon is set, the
//! integration window is [warmup, until] and only episodes beginning at or
//! after warmup are counted.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{EventKind, PersonId, ScheduledEvent};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    /// Observations must be fed in non-decreasing time order.
    #[error("observation at t={attempted} precedes last observation at t={last}")]
    TimeRegression { last: f64, attempted: f64 },
    /// The requested window end precedes the last observation.
    #[error("window end t={end} precedes last observation at t={last}")]
    EndBeforeLast { last: f64, end: f64 },
}

/// Integrates a piecewise-constant signal over time.
///
/// `record(t, v)` means: the signal held its previous value up to `t`, and is
/// `v` from `t` on. Alongside the running integral it tracks the integral of
/// the square (for the standard deviation) and the total time spent exactly
/// at zero (for empty-system probabilities).
#[derive(Debug, Clone)]
pub struct TimeWeightedAccumulator {
    start: f64,
    last_time: f64,
    last_value: f64,
    integral: f64,
    integral_sq: f64,
    zero_time: f64,
}

/// Summary of an accumulated signal over a closed window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWeightedStats {
    pub mean: f64,
    pub std_dev: f64,
    /// Fraction of the window spent exactly at zero.
    pub zero_fraction: f64,
    pub duration: f64,
}

impl TimeWeightedAccumulator {
    pub fn new(start: f64, initial_value: f64) -> Self {
        Self {
            start,
            last_time: start,
            last_value: initial_value,
            integral: 0.0,
            integral_sq: 0.0,
            zero_time: 0.0,
        }
    }

    fn accumulate(&mut self, until: f64) {
        let dt = until - self.last_time;
        self.integral += self.last_value * dt;
        self.integral_sq += self.last_value * self.last_value * dt;
        if self.last_value == 0.0 {
            self.zero_time += dt;
        }
        self.last_time = until;
    }

    /// Record that the signal changes to `value` at `time`.
    pub fn record(&mut self, time: f64, value: f64) -> Result<(), MetricsError> {
        if time < self.last_time {
            return Err(MetricsError::TimeRegression {
                last: self.last_time,
                attempted: time,
            });
        }
        self.accumulate(time);
        self.last_value = value;
        Ok(())
    }

    /// Statistics over [start, end]. Does not consume the accumulator; the
    /// segment from the last observation to `end` is included virtually.
    ///
    /// A zero-length window is degenerate: mean and deviation are 0, and the
    /// zero fraction reports 1 or 0 from the initial value alone.
    pub fn stats(&self, end: f64) -> Result<TimeWeightedStats, MetricsError> {
        if end < self.last_time {
            return Err(MetricsError::EndBeforeLast {
                last: self.last_time,
                end,
            });
        }
        let duration = end - self.start;
        if duration <= 0.0 {
            return Ok(TimeWeightedStats {
                mean: 0.0,
                std_dev: 0.0,
                zero_fraction: if self.last_value == 0.0 { 1.0 } else { 0.0 },
                duration: 0.0,
            });
        }
        let tail = end - self.last_time;
        let integral = self.integral + self.last_value * tail;
        let integral_sq = self.integral_sq + self.last_value * self.last_value * tail;
        let zero_time = self.zero_time + if self.last_value == 0.0 { tail } else { 0.0 };
        let mean = integral / duration;
        let variance = (integral_sq / duration - mean * mean).max(0.0);
        Ok(TimeWeightedStats {
            mean,
            std_dev: variance.sqrt(),
            zero_fraction: zero_time / duration,
            duration,
        })
    }
}

/// Where a sick person heals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HealingPlace {
    /// Admitted to a hospital bed.
    Hospital,
    /// Healing at home by choice (never asked for a bed).
    Home,
    /// Wanted a bed, found the hospital full, heals at home more slowly.
    RejectedHome,
}

impl HealingPlace {
    pub fn as_str(&self) -> &'static str {
        match self {
            HealingPlace::Hospital => "hospital",
            HealingPlace::Home => "home",
            HealingPlace::RejectedHome => "rejected_home",
        }
    }
}

/// Row type in the event log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    /// A person fell sick.
    Sick,
    /// A person finished healing.
    Heal,
}

impl EventType {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventType::Sick => "sick",
            EventType::Heal => "heal",
        }
    }
}

/// One line of the chronological event log. Counters reflect the state just
/// after the event; the future-event-list snapshot (when captured) likewise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLogRow {
    pub sim_time: f64,
    pub person_id: PersonId,
    pub event_type: EventType,
    pub healing_place: HealingPlace,
    /// Sampled healing duration; present on heal rows.
    pub heal_time: Option<f64>,
    /// Time from this person's selection to their falling sick; present on
    /// sick rows.
    pub interarrival: Option<f64>,
    pub num_sick: u32,
    pub num_in_hospital: u32,
    /// Future event list at this instant, in firing order. Empty when
    /// snapshots are disabled.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fel: Vec<ScheduledEvent>,
}

/// Episode tallies over the measured window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeCounts {
    /// Sickness episodes begun.
    pub total: u64,
    pub hospital: u64,
    pub home: u64,
    pub rejected: u64,
    /// Episodes that also finished inside the window (seeded patients'
    /// initial stays excluded).
    pub completed: u64,
}

/// The eight summary responses of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryResponses {
    /// Fraction of time no hospital bed is occupied.
    pub p_hospital_empty: f64,
    /// Fraction of sickness episodes admitted to the hospital.
    pub proportion_healed_in_hospital: f64,
    /// Time-average number of sick people.
    pub avg_sick: f64,
    /// `avg_sick` over the population size.
    pub avg_proportion_sick: f64,
    /// Time-weighted standard deviation of the number of sick people.
    pub std_sick: f64,
    /// Time-average number of occupied beds.
    pub avg_beds: f64,
    pub std_beds: f64,
    /// Mean sampled healing duration over completed episodes.
    pub avg_sickness_time: f64,
}

/// Collects state changes and episode facts during a run and turns them into
/// [`SummaryResponses`].
#[derive(Debug, Clone)]
pub struct ResponseCollector {
    population: u32,
    warmup: f64,
    // Live values before the warmup horizon is reached.
    cur_sick: u32,
    cur_beds: u32,
    sick_acc: Option<TimeWeightedAccumulator>,
    beds_acc: Option<TimeWeightedAccumulator>,
    episodes: EpisodeCounts,
    heal_time_total: f64,
}

impl ResponseCollector {
    pub fn new(population: u32, warmup: f64, initial_sick: u32, initial_beds: u32) -> Self {
        let mut c = Self {
            population,
            warmup,
            cur_sick: initial_sick,
            cur_beds: initial_beds,
            sick_acc: None,
            beds_acc: None,
            episodes: EpisodeCounts::default(),
            heal_time_total: 0.0,
        };
        if warmup <= 0.0 {
            c.open_window();
        }
        c
    }

    fn open_window(&mut self) {
        self.sick_acc = Some(TimeWeightedAccumulator::new(self.warmup, self.cur_sick as f64));
        self.beds_acc = Some(TimeWeightedAccumulator::new(self.warmup, self.cur_beds as f64));
    }

    /// Record the post-event state at `time`.
    pub fn record_state(&mut self, time: f64, sick: u32, beds: u32) -> Result<(), MetricsError> {
        if time < self.warmup {
            self.cur_sick = sick;
            self.cur_beds = beds;
            return Ok(());
        }
        if self.sick_acc.is_none() {
            self.open_window();
        }
        self.sick_acc.as_mut().unwrap().record(time, sick as f64)?;
        self.beds_acc.as_mut().unwrap().record(time, beds as f64)?;
        Ok(())
    }

    /// Record the start of a sickness episode.
    pub fn record_episode(&mut self, time: f64, place: HealingPlace) {
        if time < self.warmup {
            return;
        }
        self.episodes.total += 1;
        match place {
            HealingPlace::Hospital => self.episodes.hospital += 1,
            HealingPlace::Home => self.episodes.home += 1,
            HealingPlace::RejectedHome => self.episodes.rejected += 1,
        }
    }

    /// Record the end of an episode. `counted` is false for patients seeded
    /// at initialization, whose stays are not sampled episodes.
    pub fn record_completion(&mut self, time: f64, heal_time: f64, counted: bool) {
        if time < self.warmup || !counted {
            return;
        }
        self.episodes.completed += 1;
        self.heal_time_total += heal_time;
    }

    pub fn episodes(&self) -> EpisodeCounts {
        self.episodes
    }

    /// Close the window at `until` and compute the responses.
    pub fn finalize(&self, until: f64) -> Result<SummaryResponses, MetricsError> {
        let (sick, beds) = match (&self.sick_acc, &self.beds_acc) {
            (Some(s), Some(b)) => (s.stats(until)?, b.stats(until)?),
            // No event reached the window; the pre-warmup state holds
            // throughout it.
            _ => {
                let s = TimeWeightedAccumulator::new(self.warmup, self.cur_sick as f64);
                let b = TimeWeightedAccumulator::new(self.warmup, self.cur_beds as f64);
                (s.stats(until)?, b.stats(until)?)
            }
        };
        let e = &self.episodes;
        Ok(SummaryResponses {
            p_hospital_empty: beds.zero_fraction,
            proportion_healed_in_hospital: if e.total > 0 {
                e.hospital as f64 / e.total as f64
            } else {
                0.0
            },
            avg_sick: sick.mean,
            avg_proportion_sick: sick.mean / self.population as f64,
            std_sick: sick.std_dev,
            avg_beds: beds.mean,
            std_beds: beds.std_dev,
            avg_sickness_time: if e.completed > 0 {
                self.heal_time_total / e.completed as f64
            } else {
                0.0
            },
        })
    }
}

/// Recompute [`SummaryResponses`] from an event log plus the initial state.
/// Independent of the live collector's bookkeeping; used to cross-check that
/// emitted logs and emitted summaries tell the same story.
///
/// Completed episodes are heal rows whose person has a sick row earlier in
/// the log, which excludes seeded patients' initial stays exactly like the
/// live collector does.
pub fn replay_responses(
    rows: &[EventLogRow],
    population: u32,
    initial_sick: u32,
    initial_beds: u32,
    warmup: f64,
    until: f64,
) -> Result<SummaryResponses, MetricsError> {
    let mut collector = ResponseCollector::new(population, warmup, initial_sick, initial_beds);
    let mut sampled: HashMap<PersonId, bool> = HashMap::new();
    for row in rows {
        match row.event_type {
            EventType::Sick => {
                collector.record_episode(row.sim_time, row.healing_place);
                sampled.insert(row.person_id, true);
            }
            EventType::Heal => {
                let counted = sampled.remove(&row.person_id).unwrap_or(false);
                collector.record_completion(row.sim_time, row.heal_time.unwrap_or(0.0), counted);
            }
        }
        collector.record_state(row.sim_time, row.num_sick, row.num_in_hospital)?;
    }
    collector.finalize(until)
}

/// What the auditor verified and counted while walking a log.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LogAudit {
    pub episodes: EpisodeCounts,
    pub max_occupancy: u32,
    pub max_sick: u32,
}

#[derive(Debug, Error, PartialEq)]
#[error("event log violation at row {row}: {message}")]
pub struct AuditError {
    /// Zero-based row index.
    pub row: usize,
    pub message: String,
}

/// Walk an event log and verify its internal invariants: the clock never
/// moves backwards, counters change exactly as each row's event dictates,
/// occupancy never exceeds capacity, rejections happen only against a full
/// hospital, and nobody falls sick twice without healing in between.
///
/// Patients seeded at initialization are, by convention, persons
/// `0..initial_sick`, hospitalized at time zero; their first heal row has no
/// matching sick row.
pub fn audit_log(
    rows: &[EventLogRow],
    population: u32,
    bed_count: u32,
    initial_sick: u32,
) -> Result<LogAudit, AuditError> {
    let fail = |row: usize, message: String| Err(AuditError { row, message });
    let mut sick_state: Vec<Option<HealingPlace>> = vec![None; population as usize];
    for p in 0..initial_sick.min(population) {
        sick_state[p as usize] = Some(HealingPlace::Hospital);
    }
    let mut prev_time = 0.0;
    let mut num_sick = initial_sick;
    let mut num_beds = initial_sick;
    let mut audit = LogAudit {
        max_occupancy: initial_sick,
        max_sick: initial_sick,
        ..LogAudit::default()
    };

    for (i, row) in rows.iter().enumerate() {
        if row.sim_time < prev_time {
            return fail(i, format!("time {} precedes {}", row.sim_time, prev_time));
        }
        prev_time = row.sim_time;
        if row.person_id >= population {
            return fail(i, format!("person {} out of range", row.person_id));
        }
        let p = row.person_id as usize;
        match row.event_type {
            EventType::Sick => {
                if row.interarrival.is_none() || row.heal_time.is_some() {
                    return fail(i, "sick row must carry interarrival only".into());
                }
                if sick_state[p].is_some() {
                    return fail(i, format!("person {p} fell sick while already sick"));
                }
                if row.healing_place == HealingPlace::RejectedHome && num_beds != bed_count {
                    return fail(
                        i,
                        format!("rejection with {num_beds}/{bed_count} beds occupied"),
                    );
                }
                sick_state[p] = Some(row.healing_place);
                num_sick += 1;
                if row.healing_place == HealingPlace::Hospital {
                    num_beds += 1;
                }
                audit.episodes.total += 1;
                match row.healing_place {
                    HealingPlace::Hospital => audit.episodes.hospital += 1,
                    HealingPlace::Home => audit.episodes.home += 1,
                    HealingPlace::RejectedHome => audit.episodes.rejected += 1,
                }
            }
            EventType::Heal => {
                if row.heal_time.is_none() || row.interarrival.is_some() {
                    return fail(i, "heal row must carry heal_time only".into());
                }
                let Some(place) = sick_state[p] else {
                    return fail(i, format!("person {p} healed without being sick"));
                };
                if place != row.healing_place {
                    return fail(
                        i,
                        format!("heal place {:?} does not match {:?}", row.healing_place, place),
                    );
                }
                sick_state[p] = None;
                num_sick -= 1;
                if row.healing_place == HealingPlace::Hospital {
                    num_beds -= 1;
                }
                audit.episodes.completed += 1;
            }
        }
        if row.num_sick != num_sick {
            return fail(i, format!("num_sick {} but expected {num_sick}", row.num_sick));
        }
        if row.num_in_hospital != num_beds {
            return fail(
                i,
                format!("num_in_hospital {} but expected {num_beds}", row.num_in_hospital),
            );
        }
        if num_beds > bed_count {
            return fail(i, format!("occupancy {num_beds} exceeds capacity {bed_count}"));
        }
        if num_beds > num_sick {
            return fail(i, format!("{num_beds} beds occupied by {num_sick} sick"));
        }
        if !row.fel.is_empty() {
            let mut arrivals = 0;
            let mut last = row.sim_time;
            for entry in &row.fel {
                if entry.time < last {
                    return fail(i, "future event list out of order".into());
                }
                last = entry.time;
                if entry.kind == EventKind::Arrival {
                    arrivals += 1;
                }
            }
            if arrivals > 1 {
                return fail(i, format!("{arrivals} pending arrivals; at most one allowed"));
            }
        }
        audit.max_occupancy = audit.max_occupancy.max(num_beds);
        audit.max_sick = audit.max_sick.max(num_sick);
    }
    Ok(audit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_signal_has_its_value_as_mean_and_zero_deviation() {
        let acc = TimeWeightedAccumulator::new(0.0, 5.0);
        let s = acc.stats(10.0).unwrap();
        assert_eq!(s.mean, 5.0);
        assert_eq!(s.std_dev, 0.0);
        assert_eq!(s.zero_fraction, 0.0);
        assert_eq!(s.duration, 10.0);
    }

    #[test]
    fn step_signal_integrates_piecewise() {
        // 0 on [0,3), 10 on [3,10]: mean 7, zero fraction 0.3.
        let mut acc = TimeWeightedAccumulator::new(0.0, 0.0);
        acc.record(3.0, 10.0).unwrap();
        let s = acc.stats(10.0).unwrap();
        assert!((s.mean - 7.0).abs() < 1e-12);
        assert!((s.zero_fraction - 0.3).abs() < 1e-12);
        // Variance: E[X^2] - mean^2 = 70 - 49 = 21.
        assert!((s.std_dev - 21.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hand_integrated_three_step_case() {
        // 2 on [0,1), 0 on [1,4), 6 on [4,6]: integral 2 + 0 + 12 = 14.
        let mut acc = TimeWeightedAccumulator::new(0.0, 2.0);
        acc.record(1.0, 0.0).unwrap();
        acc.record(4.0, 6.0).unwrap();
        let s = acc.stats(6.0).unwrap();
        assert!((s.mean - 14.0 / 6.0).abs() < 1e-12);
        assert!((s.zero_fraction - 0.5).abs() < 1e-12);
    }

    #[test]
    fn time_regression_is_rejected() {
        let mut acc = TimeWeightedAccumulator::new(0.0, 1.0);
        acc.record(5.0, 2.0).unwrap();
        assert_eq!(
            acc.record(4.0, 3.0).unwrap_err(),
            MetricsError::TimeRegression {
                last: 5.0,
                attempted: 4.0
            }
        );
        assert!(matches!(acc.stats(4.0), Err(MetricsError::EndBeforeLast { .. })));
    }

    #[test]
    fn repeated_timestamps_are_allowed() {
        let mut acc = TimeWeightedAccumulator::new(0.0, 1.0);
        acc.record(2.0, 5.0).unwrap();
        acc.record(2.0, 3.0).unwrap();
        let s = acc.stats(4.0).unwrap();
        // 1 for 2 days, then 3 for 2 days; the transient 5 lasts zero time.
        assert!((s.mean - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_run_yields_zeroes_and_certain_empty_hospital() {
        let collector = ResponseCollector::new(100, 0.0, 0, 0);
        let r = collector.finalize(10.0).unwrap();
        assert_eq!(r.p_hospital_empty, 1.0);
        assert_eq!(r.avg_sick, 0.0);
        assert_eq!(r.std_sick, 0.0);
        assert_eq!(r.avg_beds, 0.0);
        assert_eq!(r.proportion_healed_in_hospital, 0.0);
        assert_eq!(r.avg_sickness_time, 0.0);
        assert_eq!(r.avg_proportion_sick, 0.0);
    }

    #[test]
    fn zero_length_window_reports_initial_emptiness() {
        let collector = ResponseCollector::new(10, 0.0, 0, 0);
        let r = collector.finalize(0.0).unwrap();
        assert_eq!(r.p_hospital_empty, 1.0);
        assert_eq!(r.avg_sick, 0.0);
        let seeded = ResponseCollector::new(10, 0.0, 3, 3);
        assert_eq!(seeded.finalize(0.0).unwrap().p_hospital_empty, 0.0);
    }

    #[test]
    fn collector_tracks_a_small_scripted_run() {
        // One person sick on [1, 4) in hospital, horizon 10.
        let mut c = ResponseCollector::new(50, 0.0, 0, 0);
        c.record_episode(1.0, HealingPlace::Hospital);
        c.record_state(1.0, 1, 1).unwrap();
        c.record_completion(4.0, 3.0, true);
        c.record_state(4.0, 0, 0).unwrap();
        let r = c.finalize(10.0).unwrap();
        assert!((r.avg_sick - 0.3).abs() < 1e-12);
        assert!((r.avg_beds - 0.3).abs() < 1e-12);
        assert!((r.p_hospital_empty - 0.7).abs() < 1e-12);
        assert_eq!(r.proportion_healed_in_hospital, 1.0);
        assert_eq!(r.avg_sickness_time, 3.0);
        assert!((r.avg_proportion_sick - 0.3 / 50.0).abs() < 1e-15);
    }

    #[test]
    fn warmup_discards_early_history() {
        // Signal: 4 sick on [0,5), 2 on [5,20]; warmup 10 sees only the 2.
        let mut c = ResponseCollector::new(10, 10.0, 4, 4);
        c.record_episode(2.0, HealingPlace::Home); // before warmup: ignored
        c.record_state(5.0, 2, 2).unwrap();
        c.record_episode(12.0, HealingPlace::Hospital);
        c.record_state(12.0, 3, 3).unwrap();
        let r = c.finalize(20.0).unwrap();
        // [10,12): 2 sick; [12,20]: 3 sick -> mean (4 + 24) / 10 = 2.8.
        assert!((r.avg_sick - 2.8).abs() < 1e-12);
        assert_eq!(r.proportion_healed_in_hospital, 1.0);
        let e = c.episodes();
        assert_eq!(e.total, 1);
        assert_eq!(e.hospital, 1);
    }

    #[test]
    fn seeded_completions_do_not_skew_sickness_time() {
        let mut c = ResponseCollector::new(10, 0.0, 1, 1);
        c.record_completion(2.0, 100.0, false); // seeded patient
        c.record_state(2.0, 0, 0).unwrap();
        c.record_episode(3.0, HealingPlace::Home);
        c.record_state(3.0, 1, 0).unwrap();
        c.record_completion(7.0, 4.0, true);
        c.record_state(7.0, 0, 0).unwrap();
        let r = c.finalize(10.0).unwrap();
        assert_eq!(r.avg_sickness_time, 4.0);
        assert_eq!(c.episodes().completed, 1);
    }

    fn sick_row(t: f64, p: PersonId, place: HealingPlace, sick: u32, beds: u32) -> EventLogRow {
        EventLogRow {
            sim_time: t,
            person_id: p,
            event_type: EventType::Sick,
            healing_place: place,
            heal_time: None,
            interarrival: Some(0.5),
            num_sick: sick,
            num_in_hospital: beds,
            fel: vec![],
        }
    }

    fn heal_row(t: f64, p: PersonId, place: HealingPlace, sick: u32, beds: u32) -> EventLogRow {
        EventLogRow {
            sim_time: t,
            person_id: p,
            event_type: EventType::Heal,
            healing_place: place,
            heal_time: Some(2.0),
            interarrival: None,
            num_sick: sick,
            num_in_hospital: beds,
            fel: vec![],
        }
    }

    #[test]
    fn audit_accepts_a_consistent_log() {
        let rows = vec![
            sick_row(1.0, 3, HealingPlace::Hospital, 1, 1),
            sick_row(2.0, 4, HealingPlace::Home, 2, 1),
            heal_row(3.0, 3, HealingPlace::Hospital, 1, 0),
            heal_row(4.0, 4, HealingPlace::Home, 0, 0),
        ];
        let audit = audit_log(&rows, 10, 2, 0).unwrap();
        assert_eq!(audit.episodes.total, 2);
        assert_eq!(audit.episodes.hospital, 1);
        assert_eq!(audit.episodes.home, 1);
        assert_eq!(audit.episodes.completed, 2);
        assert_eq!(audit.max_occupancy, 1);
        assert_eq!(audit.max_sick, 2);
    }

    #[test]
    fn audit_rejects_rejection_against_free_beds() {
        let rows = vec![sick_row(1.0, 3, HealingPlace::RejectedHome, 1, 0)];
        let err = audit_log(&rows, 10, 2, 0).unwrap_err();
        assert!(err.message.contains("rejection"), "{err}");
    }

    #[test]
    fn audit_rejects_wrong_counters() {
        let rows = vec![sick_row(1.0, 3, HealingPlace::Home, 2, 0)];
        let err = audit_log(&rows, 10, 2, 0).unwrap_err();
        assert!(err.message.contains("num_sick"), "{err}");
    }

    #[test]
    fn audit_rejects_double_sickness() {
        let rows = vec![
            sick_row(1.0, 3, HealingPlace::Home, 1, 0),
            sick_row(2.0, 3, HealingPlace::Home, 2, 0),
        ];
        let err = audit_log(&rows, 10, 2, 0).unwrap_err();
        assert!(err.message.contains("already sick"), "{err}");
    }

    #[test]
    fn audit_honors_seeded_patients() {
        // Person 0 seeded in hospital: its heal row needs no prior sick row.
        let rows = vec![heal_row(4.0, 0, HealingPlace::Hospital, 0, 0)];
        let audit = audit_log(&rows, 10, 2, 1).unwrap();
        assert_eq!(audit.episodes.completed, 1);
        assert_eq!(audit.episodes.total, 0);
    }

    #[test]
    fn replay_matches_collector_bookkeeping() {
        let rows = vec![
            sick_row(1.0, 3, HealingPlace::Hospital, 1, 1),
            sick_row(2.5, 4, HealingPlace::Home, 2, 1),
            heal_row(3.0, 3, HealingPlace::Hospital, 1, 0),
            heal_row(6.0, 4, HealingPlace::Home, 0, 0),
        ];
        let r = replay_responses(&rows, 20, 0, 0, 0.0, 10.0).unwrap();
        // Sick counts: 0,[0,1) 1,[1,2.5) 2,[2.5,3) 1,[3,6) 0,[6,10].
        let expect_avg = (1.0 * 1.5 + 2.0 * 0.5 + 1.0 * 3.0) / 10.0;
        assert!((r.avg_sick - expect_avg).abs() < 1e-12);
        // Beds occupied on [1,3) only.
        assert!((r.avg_beds - 0.2).abs() < 1e-12);
        assert!((r.p_hospital_empty - 0.8).abs() < 1e-12);
        assert_eq!(r.proportion_healed_in_hospital, 0.5);
        assert_eq!(r.avg_sickness_time, 2.0);
    }
}
