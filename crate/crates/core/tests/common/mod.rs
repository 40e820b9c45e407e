//! Strategies and invariant checks shared by the property and acceptance suites.
#![allow(dead_code)]

use std::collections::HashSet;

use proptest::prelude::*;

use episim::city::{build_roster, GridSpec, WeightFn};
use episim::engine::{CitySource, Intervention, Reporting, RunConfig, Seeding, Simulation};
use episim::epidemic::{exposures, generate_contacts, transmit, AgentStates, CovidState, SimParams};
use episim::intervention::{QuarantineTable, RestrictionView};
use episim::report::write_timeseries;
use episim::rng::{Purpose, RunRng};
use episim::testing::Policy;
use episim::{AgentId, CityModel};

pub fn policy() -> impl Strategy<Value = Policy> {
    prop_oneof![Just(Policy::None), Just(Policy::Rst), Just(Policy::Ct), Just(Policy::Lbt)]
}

pub fn intervention() -> impl Strategy<Value = Intervention> {
    prop_oneof![
        Just(Intervention::None),
        Just(Intervention::Quarantine),
        Just(Intervention::LockdownIndefinite),
        Just(Intervention::LockdownFixed),
    ]
}

prop_compose! {
    pub fn small_config()(
        rows in 1usize..4,
        cols in 1usize..4,
        visit in 0.0f64..1.0,
        agents in 1usize..300,
        p in 0.0f64..1.0,
        t_ir in 1.0f64..10.0,
        t_si in 1.0f64..60.0,
        t_is in 1.0f64..10.0,
        k in (0usize..3, 0usize..6, 0usize..3, 0usize..8),
        days in 1u32..20,
        budget in 0usize..30,
        policy in policy(),
        intervention in intervention(),
        tau in -0.5f64..1.0,
        clustered in any::<bool>(),
        count in 0usize..40,
        rho in 0.0f64..1.0,
        seed in any::<u64>(),
    ) -> RunConfig {
        let grid = GridSpec::new(rows, cols)
            .with_weights(WeightFn::Random)
            .with_destinations((rows * cols).min(3))
            .with_visit_fraction(visit)
            .with_seed(seed);
        let mut cfg = RunConfig {
            city: CitySource::Grid(grid),
            agents,
            params: SimParams {
                p, t_ei: 1.0, t_ir, t_si, t_is,
                k_nr: k.0, k_nf: k.1, k_wr: k.2, k_wf: k.3,
                days, budget, false_negative_rate: 0.0,
            },
            policy,
            intervention,
            seeding: if clustered {
                Seeding::Clustered { locality: 1, count }
            } else {
                Seeding::Uniform { trials: 3, prob: 0.3 }
            },
            reporting: Reporting::Uniform(rho),
            master_seed: seed,
            runs: 1,
            ..RunConfig::default()
        };
        cfg.trigger.tau = tau;
        cfg.trigger.chord = 3;
        cfg.trigger.lockdown_days = 4;
        cfg.trigger.quarantine_days = 3;
        cfg
    }
}

pub fn timeseries_bytes(cfg: &RunConfig, city: &CityModel) -> Vec<u8> {
    let out = Simulation::new(cfg, city, cfg.master_seed).unwrap().finish().unwrap();
    let mut buf = Vec::new();
    write_timeseries(&out, &mut buf).unwrap();
    buf
}

/// Conservation, R absorption, no reinfection, budget, observability and
/// test-result correctness over a full stepped run.
pub fn check_run(cfg: &RunConfig) -> Result<(), TestCaseError> {
    let city = cfg.city_model().unwrap();
    let mut sim = Simulation::new(cfg, &city, cfg.master_seed).unwrap();
    let n = sim.roster().len();
    prop_assert_eq!(n, cfg.agents);
    sim.roster().audit(&city).map_err(TestCaseError::fail)?;

    let mut ever_left_s = vec![false; n];
    let mut prev = sim.states().clone();
    let mut prev_cumulative = 0;
    while !sim.is_done() {
        let rec = sim.step().unwrap().clone();
        let now = sim.states();

        let c = now.counts();
        prop_assert_eq!(c.s + c.e + c.i + c.r, n);
        prop_assert!(rec.cumulative >= prev_cumulative);
        prev_cumulative = rec.cumulative;
        prop_assert_eq!(rec.locality_active.iter().map(|&x| x as u64).sum::<u64>(), rec.ground_truth_active);
        prop_assert_eq!(rec.locality_positives.iter().map(|&x| x as u64).sum::<u64>(), rec.positives);

        for (i, left) in ever_left_s.iter_mut().enumerate() {
            let (before, after) = (prev.covid[i], now.covid[i]);
            if before == CovidState::R {
                prop_assert_eq!(after, CovidState::R);
            }
            if before != CovidState::S {
                *left = true;
            }
            if *left {
                prop_assert_ne!(after, CovidState::S);
            }
        }

        let results = sim.last_results();
        prop_assert!(results.len() <= cfg.params.budget);
        prop_assert!(results.len() as u64 <= rec.symptomatic_reported);
        let distinct: HashSet<AgentId> = results.iter().map(|r| r.0).collect();
        prop_assert_eq!(distinct.len(), results.len());
        for &(a, r) in results {
            prop_assert!(prev.is_symptomatic(a));
            if r.is_positive() {
                prop_assert_eq!(prev.covid[a.index()], CovidState::I);
            }
            if cfg.params.false_negative_rate == 0.0 && prev.covid[a.index()] == CovidState::I {
                prop_assert!(r.is_positive());
            }
        }
        if cfg.policy == Policy::None {
            prop_assert_eq!(rec.tests, 0);
        }
        if matches!(cfg.intervention, Intervention::None | Intervention::Quarantine) {
            prop_assert!(!rec.lockdown);
        }
        prev = now.clone();
    }
    Ok(())
}

/// Contact symmetry of the event list and isolation of restricted agents.
pub fn check_contacts(cfg: &RunConfig, frac: f64, day: u32) -> Result<(), TestCaseError> {
    let city = cfg.city_model().unwrap();
    let roster = build_roster(&city, cfg.agents, &cfg.params, cfg.master_seed).unwrap();
    let rng = RunRng::new(cfg.master_seed);
    let mut table = QuarantineTable::new(roster.len());
    let step = (1.0 / frac.max(0.01)) as usize;
    for i in (0..roster.len()).step_by(step.max(1)) {
        table.place(AgentId::from_index(i), day, day + 2);
    }
    let view = RestrictionView::new(day, false, &table);
    let events = generate_contacts(&roster, &cfg.params, day, &view, &rng);
    let mut seen = HashSet::new();
    for e in &events {
        prop_assert!(e.a < e.b);
        prop_assert_eq!(e.day, day);
        prop_assert!(!view.is_restricted(e.a) && !view.is_restricted(e.b));
        prop_assert!(seen.insert((e.channel, e.a, e.b)), "duplicate event in a channel");
    }
    let locked = RestrictionView::new(day, true, &table);
    prop_assert!(generate_contacts(&roster, &cfg.params, day, &locked, &rng).is_empty());
    Ok(())
}

/// The S/I-only fast path agrees with transmission over the full event list.
pub fn check_exposures(cfg: &RunConfig, day: u32, infected: f64) -> Result<(), TestCaseError> {
    let city = cfg.city_model().unwrap();
    let roster = build_roster(&city, cfg.agents, &cfg.params, cfg.master_seed).unwrap();
    let rng = RunRng::new(cfg.master_seed ^ 0xabc);
    let mut states = AgentStates::susceptible(roster.len());
    let mut s = rng.stream(Purpose::Seeding, 9, 9);
    for st in states.covid.iter_mut() {
        let u = s.next_f64();
        *st = if u < infected {
            CovidState::I
        } else if u < infected + 0.1 {
            CovidState::R
        } else {
            CovidState::S
        };
    }
    let mut table = QuarantineTable::new(roster.len());
    for i in (0..roster.len()).step_by(7) {
        table.place(AgentId::from_index(i), day, day + 1);
    }
    let view = RestrictionView::new(day, false, &table);
    let full = transmit(&states, &generate_contacts(&roster, &cfg.params, day, &view, &rng), cfg.params.p, &rng);
    let fast = exposures(&roster, &states, &cfg.params, day, &view, &rng);
    prop_assert_eq!(full, fast);
    Ok(())
}
