use rayon::prelude::*;

use super::config::{Intervention, RunConfig, Seeding};
use super::seeding::{seed_clustered, seed_uniform};
use crate::city::{build_roster, AgentRoster, CityModel};
use crate::epidemic::{advance_epidemic_day, AgentStates, CovidState};
use crate::error::Result;
use crate::ids::{AgentId, Day};
use crate::intervention::{chord_slope, quarantine_update, LockdownController, QuarantineTable, RestrictionView};
use crate::report::{aggregate, BatchOutput, DayRecord, RunOutput};
use crate::rng::{child_seed, RunRng};
use crate::testing::{build_pool, run_policy, Policy, TestResult, TestingHistory, TestingPolicy};

/// One run, stepped a day at a time.
///
/// Each day `t` runs: build the symptomatic pool and test (1); update
/// quarantine and the lockdown trigger from the history (2), taking effect
/// from `t + 1`; advance the epidemic under day `t`'s restrictions (3);
/// record (4). Ground-truth counts in a day's record are taken at testing
/// time, before the day's evolution.
pub struct Simulation<'c> {
    config: &'c RunConfig,
    city: &'c CityModel,
    rng: RunRng,
    roster: AgentRoster,
    states: AgentStates,
    history: TestingHistory,
    policy: TestingPolicy,
    quarantine: QuarantineTable,
    lockdown: Option<LockdownController>,
    reporting: Vec<f64>,
    seeded: usize,
    day: Day,
    records: Vec<DayRecord>,
    last_results: Vec<(AgentId, TestResult)>,
}

impl<'c> Simulation<'c> {
    /// Builds the population, seeds infections, and positions the run before day 1.
    pub fn new(config: &'c RunConfig, city: &'c CityModel, seed: u64) -> Result<Self> {
        config.validate()?;
        let rng = RunRng::new(seed);
        let roster = build_roster(city, config.agents, &config.params, seed)?;
        let mut states = AgentStates::initial(roster.len(), &config.params, &rng);
        let seeded = match config.seeding {
            Seeding::Clustered { locality, count } => {
                seed_clustered(&roster, &mut states, city.by_label(locality)?, count, &rng)
            }
            Seeding::Uniform { trials, prob } => seed_uniform(&roster, &mut states, trials, prob, &rng),
        };
        let n = roster.len();
        Ok(Self {
            policy: TestingPolicy::new(config.policy, config.lbt.clone(), &roster),
            lockdown: config.intervention.lockdown_mode(&config.trigger).map(LockdownController::new),
            reporting: config.reporting.per_locality(city.len()),
            history: TestingHistory::new(n),
            quarantine: QuarantineTable::new(n),
            config,
            city,
            rng,
            roster,
            states,
            seeded,
            day: 0,
            records: Vec::with_capacity(config.params.days as usize),
            last_results: Vec::new(),
        })
    }

    pub fn day(&self) -> Day {
        self.day
    }

    pub fn is_done(&self) -> bool {
        self.day >= self.config.params.days
    }

    pub fn roster(&self) -> &AgentRoster {
        &self.roster
    }

    pub fn states(&self) -> &AgentStates {
        &self.states
    }

    pub fn history(&self) -> &TestingHistory {
        &self.history
    }

    pub fn quarantine(&self) -> &QuarantineTable {
        &self.quarantine
    }

    pub fn lockdown(&self) -> Option<&LockdownController> {
        self.lockdown.as_ref()
    }

    pub fn rng(&self) -> &RunRng {
        &self.rng
    }

    pub fn seeded(&self) -> usize {
        self.seeded
    }

    pub fn records(&self) -> &[DayRecord] {
        &self.records
    }

    /// Test outcomes of the most recent day.
    pub fn last_results(&self) -> &[(AgentId, TestResult)] {
        &self.last_results
    }

    /// Restrictions in force on `day`, as far as they are known now.
    pub fn restrictions(&self, day: Day) -> RestrictionView<'_> {
        let locked = self.lockdown.as_ref().is_some_and(|l| l.is_active(day));
        RestrictionView::new(day, locked, &self.quarantine)
    }

    /// Simulates the next day and returns its record.
    pub fn step(&mut self) -> Result<&DayRecord> {
        let t = self.day + 1;
        let cfg = self.config;
        let params = &cfg.params;

        let active = self.states.counts().i;
        let locality_active = self.states.infected_by_locality(&self.roster);

        // (1) testing
        let pool = build_pool(&self.roster, &self.states, t, &self.reporting, &self.history, &self.rng);
        self.last_results = if cfg.policy == Policy::None {
            self.history.open_day(t);
            Vec::new()
        } else {
            run_policy(
                &mut self.policy,
                &pool,
                &self.roster,
                &self.states,
                &mut self.history,
                t,
                params.budget,
                params.false_negative_rate,
                &self.rng,
            )?
        };
        let positives: Vec<AgentId> =
            self.last_results.iter().filter(|(_, r)| r.is_positive()).map(|&(a, _)| a).collect();

        // (2) interventions for t + 1 onwards
        if cfg.intervention == Intervention::Quarantine {
            quarantine_update(&mut self.quarantine, &positives, &self.roster, t, &cfg.trigger);
        }
        if let Some(ctl) = self.lockdown.as_mut() {
            let theta = chord_slope(self.history.daily_positive_counts(), t, &cfg.trigger);
            ctl.evaluate(theta, t, cfg.trigger.tau);
        }

        // (3) evolution under today's restrictions
        let locked = self.lockdown.as_ref().is_some_and(|l| l.is_active(t));
        let view = RestrictionView::new(t, locked, &self.quarantine);
        let quarantined = if cfg.intervention == Intervention::Quarantine { self.quarantine.count_on(t) } else { 0 };
        let delta = advance_epidemic_day(&self.roster, &mut self.states, params, t, &view, &self.rng);

        // (4) record
        let mut locality_positives = vec![0u32; self.city.len()];
        for a in &positives {
            locality_positives[self.roster.agent(*a).home.index()] += 1;
        }
        let cumulative = self.roster.len() - delta.totals.s;
        self.records.push(DayRecord {
            day: t,
            ground_truth_active: active as u64,
            new_infections: delta.new_infections as u64,
            cumulative: cumulative as u64,
            positives: positives.len() as u64,
            tests: self.last_results.len() as u64,
            symptomatic_reported: pool.len() as u64,
            lockdown: locked,
            quarantined: quarantined as u64,
            locality_active,
            locality_positives,
        });
        self.day = t;
        Ok(self.records.last().expect("just pushed"))
    }

    /// Runs the remaining days.
    pub fn finish(mut self) -> Result<RunOutput> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(RunOutput {
            config_hash: self.config.hash(),
            seed: self.rng.seed(),
            seeded: self.seeded as u64,
            locality_labels: self.city.localities().map(|l| self.city.label(l)).collect(),
            lockdown_episodes: self.lockdown.map(|l| l.episodes().to_vec()).unwrap_or_default(),
            days: self.records,
        })
    }
}

/// Count of agents currently COVID-I; shorthand for tests and audits.
pub fn active_infected(states: &AgentStates) -> usize {
    states.covid.iter().filter(|s| **s == CovidState::I).count()
}

/// A single run with an explicit seed.
pub fn run_simulation_with_seed(config: &RunConfig, city: &CityModel, seed: u64) -> Result<RunOutput> {
    Simulation::new(config, city, seed)?.finish()
}

/// A single run seeded with the config's first child seed.
pub fn run_simulation(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let city = config.city_model()?;
    run_simulation_with_seed(config, &city, child_seed(config.master_seed, 0))
}

/// `config.runs` independent runs with seeds derived from `master_seed`,
/// executed on the current rayon pool, then aggregated per day.
pub fn run_batch(config: &RunConfig) -> Result<BatchOutput> {
    config.validate()?;
    let city = config.city_model()?;
    run_batch_on(config, &city)
}

pub fn run_batch_on(config: &RunConfig, city: &CityModel) -> Result<BatchOutput> {
    config.validate()?;
    let runs = (0..config.runs as u64)
        .into_par_iter()
        .map(|i| run_simulation_with_seed(config, city, child_seed(config.master_seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(runs))
}
