//! Discrete-event engine: simulation clock, future event list, a
//! capacity-limited resource with loss (no-queue) semantics, and seeded
//! random variate streams.
//!
//! The engine is deliberately minimal. Model processes are written as plain
//! event handlers; waiting is expressed by scheduling a future event, and a
//! suspended process is simply one with nothing on the calendar. Everything
//! here is deterministic given a seed: the same seed and the same sequence of
//! calls produce bit-identical trajectories.

use std::collections::{BinaryHeap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a person in the population, `0..population`.
pub type PersonId = u32;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    /// Attempt to schedule an event before the current clock time.
    #[error("cannot schedule event at t={scheduled} before current time t={now}")]
    PastEvent { scheduled: f64, now: f64 },
    /// Attempt to advance an empty calendar.
    #[error("future event list is empty")]
    EmptyCalendar,
    /// Exponential variates require a positive, finite rate.
    #[error("exponential rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    /// Uniform variates require a non-empty half-open interval.
    #[error("uniform range requires lo < hi, got [{lo}, {hi})")]
    InvalidRange { lo: f64, hi: f64 },
    /// More releases than successful acquisitions.
    #[error("release on an empty resource")]
    ResourceUnderflow,
}

/// Simulation clock, in days. It only moves when the event list advances it,
/// and it never moves backwards.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimClock {
    now: f64,
}

impl SimClock {
    pub fn new() -> Self {
        Self { now: 0.0 }
    }

    pub fn now(&self) -> f64 {
        self.now
    }
}

/// What a scheduled event does when it fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// A selected person falls sick.
    Arrival,
    /// A sick person finishes healing.
    Departure,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Arrival => "arrival",
            EventKind::Departure => "departure",
        }
    }
}

/// An event on the calendar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledEvent {
    pub time: f64,
    pub kind: EventKind,
    pub person: PersonId,
}

/// Opaque handle to a calendar entry; allows cancelling it later.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventHandle(u64);

#[derive(Debug)]
struct HeapEntry {
    time: f64,
    seq: u64,
    kind: EventKind,
    person: PersonId,
}

// Order entries so the BinaryHeap (a max-heap) pops the earliest time first,
// breaking ties by insertion order (FIFO).
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}

impl Eq for HeapEntry {}

/// Future event list: a priority calendar ordered by event time, with FIFO
/// ordering among events scheduled for the same instant. Cancellation is
/// lazy: cancelled entries stay in the heap and are skipped when reached.
#[derive(Debug, Default)]
pub struct FutureEventList {
    heap: BinaryHeap<HeapEntry>,
    cancelled: HashSet<u64>,
    next_seq: u64,
    live: usize,
}

impl FutureEventList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of live (not cancelled) entries.
    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// Insert an event. Rejects times earlier than the current clock.
    pub fn schedule(
        &mut self,
        clock: &SimClock,
        event: ScheduledEvent,
    ) -> Result<EventHandle, KernelError> {
        if event.time < clock.now() {
            return Err(KernelError::PastEvent {
                scheduled: event.time,
                now: clock.now(),
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(HeapEntry {
            time: event.time,
            seq,
            kind: event.kind,
            person: event.person,
        });
        self.live += 1;
        Ok(EventHandle(seq))
    }

    /// Cancel a previously scheduled entry. Returns whether the entry was
    /// still live. Cancelling twice is a no-op.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        if handle.0 >= self.next_seq {
            return false;
        }
        if self.cancelled.insert(handle.0) {
            self.live -= 1;
            true
        } else {
            false
        }
    }

    // Drop cancelled entries sitting at the top of the heap.
    fn purge_top(&mut self) {
        while let Some(top) = self.heap.peek() {
            if self.cancelled.remove(&top.seq) {
                self.heap.pop();
            } else {
                break;
            }
        }
    }

    /// Timestamp of the next live event, if any.
    pub fn peek_time(&mut self) -> Option<f64> {
        self.purge_top();
        self.heap.peek().map(|e| e.time)
    }

    /// Pop the next event and move the clock to its timestamp.
    pub fn advance(&mut self, clock: &mut SimClock) -> Result<ScheduledEvent, KernelError> {
        self.purge_top();
        let entry = self.heap.pop().ok_or(KernelError::EmptyCalendar)?;
        self.live -= 1;
        clock.now = entry.time;
        Ok(ScheduledEvent {
            time: entry.time,
            kind: entry.kind,
            person: entry.person,
        })
    }

    /// All live entries in firing order. Used for event-log snapshots.
    pub fn snapshot(&self) -> Vec<ScheduledEvent> {
        let mut live: Vec<&HeapEntry> = self
            .heap
            .iter()
            .filter(|e| !self.cancelled.contains(&e.seq))
            .collect();
        live.sort_by(|a, b| a.time.total_cmp(&b.time).then_with(|| a.seq.cmp(&b.seq)));
        live.iter()
            .map(|e| ScheduledEvent {
                time: e.time,
                kind: e.kind,
                person: e.person,
            })
            .collect()
    }
}

/// Outcome of asking the resource for one unit of capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acquisition {
    Granted,
    /// No capacity free. The caller is turned away, never queued.
    Rejected,
}

/// A counted resource (hospital beds) with loss semantics: an acquire against
/// a full resource is rejected immediately rather than queued.
#[derive(Debug, Clone)]
pub struct CapacityResource {
    capacity: u32,
    occupied: u32,
}

impl CapacityResource {
    pub fn new(capacity: u32) -> Self {
        Self {
            capacity,
            occupied: 0,
        }
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn occupied(&self) -> u32 {
        self.occupied
    }

    pub fn is_full(&self) -> bool {
        self.occupied >= self.capacity
    }

    pub fn acquire(&mut self) -> Acquisition {
        if self.is_full() {
            Acquisition::Rejected
        } else {
            self.occupied += 1;
            Acquisition::Granted
        }
    }

    pub fn release(&mut self) -> Result<(), KernelError> {
        if self.occupied == 0 {
            return Err(KernelError::ResourceUnderflow);
        }
        self.occupied -= 1;
        Ok(())
    }
}

/// Seeded stream of random variates. All model randomness flows through one
/// stream so a run is reproducible from its seed alone.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Uniform draw on [0, 1).
    pub fn unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform draw on [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64, KernelError> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(KernelError::InvalidRange { lo, hi });
        }
        Ok(lo + (hi - lo) * self.unit())
    }

    /// Exponential draw with the given rate, by inversion: -ln(U)/rate with
    /// U on the open interval (0, 1), so the result is strictly positive and
    /// finite. Consumes exactly one draw from the stream.
    pub fn exponential(&mut self, rate: f64) -> Result<f64, KernelError> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(KernelError::InvalidRate(rate));
        }
        let u: f64 = self.rng.sample(rand::distr::Open01);
        Ok(-u.ln() / rate)
    }

    /// Uniform index in 0..len for selecting a person.
    pub fn index(&mut self, len: usize) -> usize {
        debug_assert!(len > 0);
        self.rng.random_range(0..len)
    }
}
