//! The sickness-and-healing process over a closed population.
//!
//! A town of `population` people shares `bed_count` hospital beds. Healthy
//! people fall sick independently at rate `sickness_rate`; a sick person
//! seeks a bed with probability `hospital_probability` and otherwise heals
//! at home. A bed-seeker who finds the hospital full is turned away and
//! heals at home at the hospital rate slowed by a factor drawn uniformly
//! from `[rejection_min, rejection_max)`. Healing durations are exponential.
//!
//! One arrival is outstanding at a time: the model pre-selects who falls
//! sick next and schedules that arrival after an exponential wait at the
//! aggregate rate `sickness_rate * healthy_count`. Whenever a departure
//! changes the healthy count while an arrival is outstanding, the remaining
//! wait is re-drawn at the new aggregate rate; exponential waits are
//! memoryless, so the pending arrival always fires at the rate the current
//! population dictates. If everyone is sick the selection suspends and the
//! next departure revives it.
//!
//! # Draw order
//!
//! A run is reproducible from its seed because randomness is consumed in a
//! fixed order:
//!
//! 1. Initialization: patients seeded into beds (persons `0..seeded`) draw
//!    their healing duration in id order.
//! 2. Selection: one draw to pick the next sick person uniformly from the
//!    healthy, then one exponential draw for the wait until they fall sick.
//! 3. Arrival: one uniform draw to decide home versus hospital; for a
//!    bed-seeker finding a full hospital, one uniform draw for the slowdown
//!    factor; then one exponential draw for the healing duration; then the
//!    next selection (step 2) if anyone is still healthy.
//! 4. Departure: step 2 if the selection was suspended, otherwise one
//!    exponential draw to refresh the outstanding arrival's wait.

use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, SimulationConfig};
use crate::kernel::{
    Acquisition, CapacityResource, EventKind, FutureEventList, PersonId, RngStream, ScheduledEvent,
    SimClock,
};
use crate::metrics::{
    EpisodeCounts, EventLogRow, EventType, HealingPlace, ResponseCollector, SummaryResponses,
};

/// What a run records beyond its summary responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunOptions {
    /// Keep the chronological event log.
    pub record_events: bool,
    /// Attach a future-event-list snapshot to every log row. Snapshots make
    /// long logs large; disable for bulk runs.
    pub record_fel: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            record_events: true,
            record_fel: true,
        }
    }
}

impl RunOptions {
    /// Keep only the summary responses.
    pub fn summary_only() -> Self {
        Self {
            record_events: false,
            record_fel: false,
        }
    }
}

/// Everything a finished run hands back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub config: SimulationConfig,
    /// People sick at time zero (the seeded patients).
    pub initial_sick: u32,
    /// Beds occupied at time zero.
    pub initial_beds: u32,
    pub events_processed: u64,
    /// Chronological event log; empty unless `record_events` was set.
    pub log: Vec<EventLogRow>,
    pub responses: SummaryResponses,
    /// Episode tallies over the measured window.
    pub episodes: EpisodeCounts,
}

struct Episode {
    place: HealingPlace,
    duration: f64,
    seeded: bool,
}

struct PendingArrival {
    person: PersonId,
    selected_at: f64,
    handle: crate::kernel::EventHandle,
}

/// Set of healthy people supporting O(1) uniform selection and re-insertion.
struct IndexedSet {
    members: Vec<PersonId>,
    position: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl IndexedSet {
    fn new(population: u32, first_member: u32) -> Self {
        let members: Vec<PersonId> = (first_member..population).collect();
        let mut position = vec![ABSENT; population as usize];
        for (i, &p) in members.iter().enumerate() {
            position[p as usize] = i as u32;
        }
        Self { members, position }
    }

    fn len(&self) -> usize {
        self.members.len()
    }

    fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn remove_at(&mut self, idx: usize) -> PersonId {
        let person = self.members.swap_remove(idx);
        if idx < self.members.len() {
            self.position[self.members[idx] as usize] = idx as u32;
        }
        self.position[person as usize] = ABSENT;
        person
    }

    fn insert(&mut self, person: PersonId) {
        debug_assert_eq!(self.position[person as usize], ABSENT);
        self.position[person as usize] = self.members.len() as u32;
        self.members.push(person);
    }
}

struct Simulation<'a> {
    config: &'a SimulationConfig,
    options: &'a RunOptions,
    clock: SimClock,
    fel: FutureEventList,
    beds: CapacityResource,
    rng: RngStream,
    episodes: Vec<Option<Episode>>,
    healthy: IndexedSet,
    pending: Option<PendingArrival>,
    sick_count: u32,
    collector: ResponseCollector,
    log: Vec<EventLogRow>,
    events_processed: u64,
}

impl<'a> Simulation<'a> {
    fn new(config: &'a SimulationConfig, options: &'a RunOptions) -> Self {
        let seeded = config.seeded_patients();
        let clock = SimClock::new();
        let mut fel = FutureEventList::new();
        let mut beds = CapacityResource::new(config.bed_count);
        let mut rng = RngStream::new(config.seed);
        let mut episodes: Vec<Option<Episode>> = (0..config.population).map(|_| None).collect();

        for person in 0..seeded {
            let granted = beds.acquire();
            debug_assert_eq!(granted, Acquisition::Granted);
            let duration = rng
                .exponential(config.hospital_heal_rate)
                .expect("hospital heal rate validated positive");
            fel.schedule(
                &clock,
                ScheduledEvent {
                    time: duration,
                    kind: EventKind::Departure,
                    person,
                },
            )
            .expect("initial departures lie in the future");
            episodes[person as usize] = Some(Episode {
                place: HealingPlace::Hospital,
                duration,
                seeded: true,
            });
        }

        let mut sim = Self {
            config,
            options,
            clock,
            fel,
            beds,
            rng,
            episodes,
            healthy: IndexedSet::new(config.population, seeded),
            pending: None,
            sick_count: seeded,
            collector: ResponseCollector::new(config.population, config.warmup, seeded, seeded),
            log: Vec::new(),
            events_processed: 0,
        };
        sim.select_next_sick();
        sim
    }

    /// Aggregate sickness rate over everyone currently eligible to fall
    /// sick, which includes an already-selected pending person.
    fn aggregate_rate(&self, eligible: u32) -> f64 {
        self.config.sickness_rate * eligible as f64
    }

    /// Step 2 of the draw order: pick who falls sick next and schedule it.
    /// With nobody healthy the selection suspends (no pending arrival) until
    /// a departure calls this again.
    fn select_next_sick(&mut self) {
        debug_assert!(self.pending.is_none());
        if self.healthy.is_empty() {
            return;
        }
        let eligible = self.healthy.len();
        debug_assert_eq!(eligible as u32, self.config.population - self.sick_count);
        let idx = self.rng.index(eligible);
        let person = self.healthy.remove_at(idx);
        let wait = self
            .rng
            .exponential(self.aggregate_rate(eligible as u32))
            .expect("aggregate rate positive while anyone is healthy");
        let now = self.clock.now();
        let handle = self
            .fel
            .schedule(
                &self.clock,
                ScheduledEvent {
                    time: now + wait,
                    kind: EventKind::Arrival,
                    person,
                },
            )
            .expect("arrival lies in the future");
        self.pending = Some(PendingArrival {
            person,
            selected_at: now,
            handle,
        });
    }

    /// Re-draw the outstanding arrival's wait after the healthy count
    /// changed. Memorylessness makes discarding the old remaining wait
    /// statistically neutral; what changes is only the rate.
    fn refresh_pending_arrival(&mut self) {
        let rate = self.aggregate_rate(self.config.population - self.sick_count);
        let wait = self
            .rng
            .exponential(rate)
            .expect("someone is eligible while an arrival is pending");
        let pending = self.pending.as_mut().expect("checked by caller");
        self.fel.cancel(pending.handle);
        pending.handle = self
            .fel
            .schedule(
                &self.clock,
                ScheduledEvent {
                    time: self.clock.now() + wait,
                    kind: EventKind::Arrival,
                    person: pending.person,
                },
            )
            .expect("arrival lies in the future");
    }

    fn on_arrival(&mut self, person: PersonId) {
        let pending = self.pending.take().expect("arrival fired without pending");
        debug_assert_eq!(pending.person, person);
        let now = self.clock.now();

        let seeks_bed = self.rng.unit() < self.config.hospital_probability;
        let (place, heal_rate) = if seeks_bed {
            match self.beds.acquire() {
                Acquisition::Granted => (HealingPlace::Hospital, self.config.hospital_heal_rate),
                Acquisition::Rejected => {
                    let r = self
                        .rng
                        .uniform(self.config.rejection_min, self.config.rejection_max)
                        .expect("rejection range validated");
                    (HealingPlace::RejectedHome, self.config.hospital_heal_rate / r)
                }
            }
        } else {
            (HealingPlace::Home, self.config.home_heal_rate)
        };
        let duration = self.rng.exponential(heal_rate).expect("heal rate positive");
        self.fel
            .schedule(
                &self.clock,
                ScheduledEvent {
                    time: now + duration,
                    kind: EventKind::Departure,
                    person,
                },
            )
            .expect("departure lies in the future");
        self.episodes[person as usize] = Some(Episode {
            place,
            duration,
            seeded: false,
        });
        self.sick_count += 1;
        self.collector.record_episode(now, place);
        self.collector
            .record_state(now, self.sick_count, self.beds.occupied())
            .expect("clock is monotone");
        // Select the successor before logging so the row's event-list
        // snapshot shows both this person's departure and the next arrival.
        self.select_next_sick();
        self.push_row(
            person,
            EventType::Sick,
            place,
            None,
            Some(now - pending.selected_at),
        );
    }

    fn on_departure(&mut self, person: PersonId) {
        let episode = self.episodes[person as usize]
            .take()
            .expect("departure fired for a healthy person");
        self.sick_count -= 1;
        if episode.place == HealingPlace::Hospital {
            self.beds.release().expect("bed held by this patient");
        }
        self.healthy.insert(person);
        let now = self.clock.now();
        self.collector
            .record_completion(now, episode.duration, !episode.seeded);
        self.collector
            .record_state(now, self.sick_count, self.beds.occupied())
            .expect("clock is monotone");
        if self.pending.is_none() {
            // Selection was suspended because everyone was sick.
            self.select_next_sick();
        } else {
            self.refresh_pending_arrival();
        }
        self.push_row(person, EventType::Heal, episode.place, Some(episode.duration), None);
    }

    fn push_row(
        &mut self,
        person: PersonId,
        event_type: EventType,
        place: HealingPlace,
        heal_time: Option<f64>,
        interarrival: Option<f64>,
    ) {
        if !self.options.record_events {
            return;
        }
        let fel = if self.options.record_fel {
            self.fel.snapshot()
        } else {
            Vec::new()
        };
        self.log.push(EventLogRow {
            sim_time: self.clock.now(),
            person_id: person,
            event_type,
            healing_place: place,
            heal_time,
            interarrival,
            num_sick: self.sick_count,
            num_in_hospital: self.beds.occupied(),
            fel,
        });
    }

    fn run_to(&mut self, until: f64) {
        while let Some(t) = self.fel.peek_time() {
            if t > until {
                break;
            }
            let event = self.fel.advance(&mut self.clock).expect("peeked non-empty");
            match event.kind {
                EventKind::Arrival => self.on_arrival(event.person),
                EventKind::Departure => self.on_departure(event.person),
            }
            self.events_processed += 1;
        }
    }
}

/// Run one simulation to its horizon.
pub fn run(config: &SimulationConfig, options: &RunOptions) -> Result<RunOutput, ConfigError> {
    config.validate()?;
    let mut sim = Simulation::new(config, options);
    sim.run_to(config.until);
    let responses = sim
        .collector
        .finalize(config.until)
        .expect("events never pass the horizon");
    Ok(RunOutput {
        config: *config,
        initial_sick: config.seeded_patients(),
        initial_beds: config.seeded_patients(),
        events_processed: sim.events_processed,
        episodes: sim.collector.episodes(),
        log: sim.log,
        responses,
    })
}
