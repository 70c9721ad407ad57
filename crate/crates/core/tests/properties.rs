//! Randomized invariant checks for the engine, the statistics, the
//! analytics, and whole small-scale runs.

use proptest::prelude::*;

use wardsim_core::analytics::{machine_repair, machine_repair_distribution};
use wardsim_core::config::{HospitalStatus, SimulationConfig};
use wardsim_core::io::event_log_to_csv;
use wardsim_core::kernel::{EventKind, FutureEventList, ScheduledEvent, SimClock};
use wardsim_core::metrics::{audit_log, replay_responses, TimeWeightedAccumulator};
use wardsim_core::model::{run, RunOptions};

proptest! {
    /// The event list pops by time, falling back to insertion order on ties
    /// (exactly a stable sort by time).
    #[test]
    fn fel_pop_order_is_a_stable_sort_by_time(
        times in proptest::collection::vec(0.0f64..100.0, 1..200),
        coarse in proptest::bool::ANY,
    ) {
        // Coarse grid times force plenty of exact ties.
        let times: Vec<f64> = if coarse {
            times.into_iter().map(|t| (t / 10.0).round()).collect()
        } else {
            times
        };
        let mut clock = SimClock::new();
        let mut fel = FutureEventList::new();
        for (i, &t) in times.iter().enumerate() {
            fel.schedule(&clock, ScheduledEvent { time: t, kind: EventKind::Arrival, person: i as u32 }).unwrap();
        }
        let mut expected: Vec<(f64, u32)> =
            times.iter().enumerate().map(|(i, &t)| (t, i as u32)).collect();
        expected.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut popped = Vec::with_capacity(times.len());
        while !fel.is_empty() {
            let e = fel.advance(&mut clock).unwrap();
            popped.push((e.time, e.person));
        }
        prop_assert_eq!(popped, expected);
    }

    /// Cancelled entries disappear; the rest keep their order.
    #[test]
    fn fel_cancellation_preserves_survivor_order(
        times in proptest::collection::vec(0.0f64..50.0, 1..100),
        cancel_mask in proptest::collection::vec(proptest::bool::ANY, 100),
    ) {
        let mut clock = SimClock::new();
        let mut fel = FutureEventList::new();
        let mut handles = Vec::new();
        for (i, &t) in times.iter().enumerate() {
            handles.push(fel.schedule(&clock, ScheduledEvent { time: t, kind: EventKind::Departure, person: i as u32 }).unwrap());
        }
        let mut expected: Vec<(f64, u32)> = Vec::new();
        for (i, &t) in times.iter().enumerate() {
            if cancel_mask[i] {
                prop_assert!(fel.cancel(handles[i]));
            } else {
                expected.push((t, i as u32));
            }
        }
        expected.sort_by(|a, b| a.0.total_cmp(&b.0));
        prop_assert_eq!(fel.len(), expected.len());
        let snapshot: Vec<(f64, u32)> = fel.snapshot().iter().map(|e| (e.time, e.person)).collect();
        prop_assert_eq!(&snapshot, &expected);
        let mut popped = Vec::new();
        while !fel.is_empty() {
            let e = fel.advance(&mut clock).unwrap();
            popped.push((e.time, e.person));
        }
        prop_assert_eq!(popped, expected);
    }

    /// The accumulator equals a brute-force integral over the segments.
    #[test]
    fn accumulator_matches_brute_force_integration(
        initial in 0.0f64..20.0,
        steps in proptest::collection::vec((0.01f64..5.0, 0.0f64..20.0), 0..50),
        tail in 0.0f64..5.0,
        zero_out in proptest::bool::ANY,
    ) {
        // Snap some values to zero so the zero-fraction path is exercised.
        let snap = |v: f64| if zero_out && v < 10.0 { 0.0 } else { v };
        let initial = snap(initial);
        let mut acc = TimeWeightedAccumulator::new(0.0, initial);
        let mut segments: Vec<(f64, f64)> = Vec::new(); // (duration, value)
        let mut t = 0.0;
        let mut value = initial;
        for &(dt, v) in &steps {
            let v = snap(v);
            acc.record(t + dt, v).unwrap();
            segments.push((dt, value));
            t += dt;
            value = v;
        }
        segments.push((tail, value));
        let end = t + tail;
        let stats = acc.stats(end).unwrap();

        let total: f64 = segments.iter().map(|(dt, _)| dt).sum();
        if total > 0.0 {
            let integral: f64 = segments.iter().map(|(dt, v)| v * dt).sum();
            let integral_sq: f64 = segments.iter().map(|(dt, v)| v * v * dt).sum();
            let zero: f64 = segments.iter().filter(|(_, v)| *v == 0.0).map(|(dt, _)| dt).sum();
            let mean = integral / total;
            let var = (integral_sq / total - mean * mean).max(0.0);
            prop_assert!((stats.mean - mean).abs() <= 1e-9 * (1.0 + mean.abs()));
            prop_assert!((stats.std_dev - var.sqrt()).abs() <= 1e-7 * (1.0 + var.sqrt()));
            prop_assert!((stats.zero_fraction - zero / total).abs() <= 1e-9);
        }
    }

    /// The summed stationary law is a proper distribution and matches the
    /// binomial closed form.
    #[test]
    fn machine_repair_closed_form_holds_everywhere(
        population in 1u32..300,
        lambda in 1e-4f64..2.0,
        mu in 1e-2f64..5.0,
    ) {
        let r = machine_repair(population, lambda, mu).unwrap();
        let rho = lambda / mu;
        let closed_mean = population as f64 * rho / (1.0 + rho);
        prop_assert!((r.mean_sick - closed_mean).abs() <= 1e-10 * closed_mean.max(1.0));
        let ln_closed = -(population as f64) * rho.ln_1p();
        prop_assert!((r.ln_p_empty - ln_closed).abs() <= 1e-9 * (1.0 + ln_closed.abs()));
        let dist = machine_repair_distribution(population, lambda, mu).unwrap();
        let total: f64 = dist.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }
}

fn small_config(
    population: u32,
    beds: u32,
    p: f64,
    lambda: f64,
    until: f64,
    warmup_frac: f64,
    status: HospitalStatus,
    seed: u64,
) -> SimulationConfig {
    SimulationConfig {
        population,
        bed_count: beds.min(population),
        hospital_probability: p,
        sickness_rate: lambda,
        until,
        warmup: (until * warmup_frac * 0.9).floor(),
        status,
        seed,
        ..SimulationConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Whole-run invariants on small random configurations: the log audits
    /// clean, recording options do not perturb the dynamics, replaying the
    /// log reproduces the responses, and runs are reproducible.
    #[test]
    fn runs_satisfy_structural_invariants(
        population in 1u32..=20,
        beds in 0u32..=8,
        p in 0.0f64..=1.0,
        lambda in 0.001f64..0.3,
        until in 1.0f64..150.0,
        warmup_frac in 0.0f64..1.0,
        status_pick in 0usize..3,
        seed in proptest::num::u64::ANY,
    ) {
        let status = HospitalStatus::ALL[status_pick];
        let config = small_config(population, beds, p, lambda, until, warmup_frac, status, seed);
        let out = run(&config, &RunOptions::default()).unwrap();

        prop_assert_eq!(out.log.len() as u64, out.events_processed);
        let audit = audit_log(&out.log, config.population, config.bed_count, out.initial_sick).unwrap();
        prop_assert!(audit.max_occupancy <= config.bed_count.max(out.initial_beds));
        prop_assert!(audit.max_sick <= config.population);

        // avg_proportion_sick is avg_sick scaled by the population, exactly.
        let expected_prop = out.responses.avg_sick / config.population as f64;
        prop_assert_eq!(out.responses.avg_proportion_sick.to_bits(), expected_prop.to_bits());

        // Same seed, same story: identical logs and identical CSV bytes.
        let again = run(&config, &RunOptions::default()).unwrap();
        prop_assert_eq!(&again.log, &out.log);
        prop_assert_eq!(
            event_log_to_csv(&again.log, true),
            event_log_to_csv(&out.log, true)
        );

        // Recording is observation only.
        let silent = run(&config, &RunOptions::summary_only()).unwrap();
        prop_assert!(silent.log.is_empty());
        prop_assert_eq!(silent.responses, out.responses);
        prop_assert_eq!(silent.events_processed, out.events_processed);

        // The emitted log carries everything needed to recompute responses.
        let replayed = replay_responses(
            &out.log,
            config.population,
            out.initial_sick,
            out.initial_beds,
            config.warmup,
            config.until,
        )
        .unwrap();
        prop_assert_eq!(replayed, out.responses);
    }
}
