//! Daily state evolution: COVID and flu Markov steps, contact generation, and
//! transmission.
//!
//! Transmission is synchronous. All infection checks read the day-start
//! snapshot, so an agent infected today cannot infect anyone until tomorrow,
//! and the outcome does not depend on the order agents are visited in.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::city::AgentRoster;
use crate::ids::{AgentId, Day, LocalityId};
use crate::intervention::RestrictionView;
use crate::rng::{Purpose, RunRng, StreamRng};

/// Rates, contact counts, horizon, and testing budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
// flattened into the run config, so unknown keys are checked there
#[serde(default)]
pub struct SimParams {
    /// Per-meeting infection probability.
    pub p: f64,
    /// Mean dwell times in days; per-day exit probability is `1 / T`.
    pub t_ei: f64,
    pub t_ir: f64,
    pub t_si: f64,
    pub t_is: f64,
    /// Random neighborhood meetings per day.
    pub k_nr: usize,
    /// Fixed neighborhood contacts drawn per agent.
    pub k_nf: usize,
    /// Random workplace meetings per day.
    pub k_wr: usize,
    /// Fixed workplace contacts drawn per agent.
    pub k_wf: usize,
    /// Horizon `T` in days.
    pub days: u32,
    /// Tests per day.
    pub budget: usize,
    /// Probability that testing a COVID-I agent returns negative.
    pub false_negative_rate: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            p: 0.1,
            t_ei: 1.0,
            t_ir: 8.0,
            t_si: 50.0,
            t_is: 8.0,
            k_nr: 1,
            k_nf: 5,
            k_wr: 2,
            k_wf: 10,
            days: 100,
            budget: 50,
            false_negative_rate: 0.0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, t) in [("t_ei", self.t_ei), ("t_ir", self.t_ir), ("t_si", self.t_si), ("t_is", self.t_is)] {
            if !t.is_finite() || t < 1.0 {
                return Err(format!("{name} must be a finite value >= 1, got {t}"));
            }
        }
        for (name, v) in [("p", self.p), ("false_negative_rate", self.false_negative_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        Ok(())
    }

    /// Long-run share of agents in flu state I.
    pub fn flu_stationary_infected(&self) -> f64 {
        let up = 1.0 / self.t_si;
        let down = 1.0 / self.t_is;
        up / (up + down)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum CovidState {
    S,
    E,
    I,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum FluState {
    S,
    I,
}

/// Local COVID transition: E→I w.p. `1/t_ei`, I→R w.p. `1/t_ir`.
/// S leaves only through infection and R is absorbing.
#[inline]
pub fn covid_local_step(state: CovidState, params: &SimParams, rng: &mut StreamRng) -> CovidState {
    match state {
        CovidState::E if rng.chance(1.0 / params.t_ei) => CovidState::I,
        CovidState::I if rng.chance(1.0 / params.t_ir) => CovidState::R,
        s => s,
    }
}

/// Flu SI chain: S→I w.p. `1/t_si`, I→S w.p. `1/t_is`.
#[inline]
pub fn flu_step(state: FluState, params: &SimParams, rng: &mut StreamRng) -> FluState {
    match state {
        FluState::S if rng.chance(1.0 / params.t_si) => FluState::I,
        FluState::I if rng.chance(1.0 / params.t_is) => FluState::S,
        s => s,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Channel {
    NeighborhoodRandom,
    NeighborhoodFixed,
    WorkplaceRandom,
    WorkplaceFixed,
}

impl Channel {
    pub fn is_fixed(self) -> bool {
        matches!(self, Channel::NeighborhoodFixed | Channel::WorkplaceFixed)
    }
}

/// A meeting between two agents. Stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContactEvent {
    pub channel: Channel,
    pub a: AgentId,
    pub b: AgentId,
    pub day: Day,
}

impl ContactEvent {
    pub fn new(x: AgentId, y: AgentId, channel: Channel, day: Day) -> Self {
        debug_assert_ne!(x, y);
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        Self { channel, a, b, day }
    }

    pub fn involves(&self, agent: AgentId) -> bool {
        self.a == agent || self.b == agent
    }
}

/// COVID and flu state of every agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentStates {
    pub covid: Vec<CovidState>,
    pub flu: Vec<FluState>,
}

impl AgentStates {
    pub fn susceptible(n: usize) -> Self {
        Self { covid: vec![CovidState::S; n], flu: vec![FluState::S; n] }
    }

    /// All COVID-S; flu drawn from its stationary distribution so the
    /// symptomatic background starts in equilibrium.
    pub fn initial(n: usize, params: &SimParams, rng: &RunRng) -> Self {
        let share = params.flu_stationary_infected();
        let flu = (0..n as u64)
            .map(|i| if rng.stream(Purpose::FluStep, 0, i).chance(share) { FluState::I } else { FluState::S })
            .collect();
        Self { covid: vec![CovidState::S; n], flu }
    }

    pub fn len(&self) -> usize {
        self.covid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.covid.is_empty()
    }

    pub fn counts(&self) -> CompartmentCounts {
        let mut c = CompartmentCounts::default();
        for s in &self.covid {
            match s {
                CovidState::S => c.s += 1,
                CovidState::E => c.e += 1,
                CovidState::I => c.i += 1,
                CovidState::R => c.r += 1,
            }
        }
        c
    }

    pub fn is_symptomatic(&self, agent: AgentId) -> bool {
        self.covid[agent.index()] == CovidState::I || self.flu[agent.index()] == FluState::I
    }

    /// Active COVID-I per home locality.
    pub fn infected_by_locality(&self, roster: &AgentRoster) -> Vec<u32> {
        let mut out = vec![0u32; roster.locality_count()];
        for a in roster.agents() {
            if self.covid[a.id.index()] == CovidState::I {
                out[a.home.index()] += 1;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CompartmentCounts {
    pub s: usize,
    pub e: usize,
    pub i: usize,
    pub r: usize,
}

impl CompartmentCounts {
    pub fn total(&self) -> usize {
        self.s + self.e + self.i + self.r
    }
}

/// Outcome of one simulated day.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DayDelta {
    pub new_infections: usize,
    pub totals: CompartmentCounts,
    /// Active COVID-I per locality after the update.
    pub infected_by_locality: Vec<u32>,
}

const AGENT_CHUNK: usize = 4096;

/// Random partner draws for `agent`, in both channels.
#[inline]
fn random_draws(
    roster: &AgentRoster,
    params: &SimParams,
    day: Day,
    rng: &RunRng,
    agent: AgentId,
    mut emit: impl FnMut(AgentId, Channel),
) {
    let me = roster.agent(agent);
    if params.k_nr > 0 {
        let hood = roster.neighborhood(me.home);
        if hood.len() > 1 {
            let pos = hood.position(agent).expect("agent in own neighborhood");
            let mut s = rng.stream(Purpose::RandomNeighborhood, day, agent.0 as u64);
            for _ in 0..params.k_nr {
                let mut k = s.below(hood.len() - 1);
                if k >= pos {
                    k += 1;
                }
                emit(hood.get(k), Channel::NeighborhoodRandom);
            }
        }
    }
    if let (Some(d), true) = (me.visit_place, params.k_wr > 0) {
        let peers = roster.visitors(d);
        if peers.len() > 1 {
            let pos = peers.binary_search(&agent).expect("agent listed at its visit place");
            let mut s = rng.stream(Purpose::RandomWorkplace, day, agent.0 as u64);
            for _ in 0..params.k_wr {
                let mut k = s.below(peers.len() - 1);
                if k >= pos {
                    k += 1;
                }
                emit(peers[k], Channel::WorkplaceRandom);
            }
        }
    }
}

/// Every event initiated by `agent` today, before deduplication: its random
/// neighborhood and workplace draws plus one meeting with each fixed contact.
pub fn agent_draws(
    roster: &AgentRoster,
    params: &SimParams,
    day: Day,
    rng: &RunRng,
    agent: AgentId,
) -> Vec<ContactEvent> {
    let mut out = Vec::new();
    random_draws(roster, params, day, rng, agent, |other, ch| out.push(ContactEvent::new(agent, other, ch, day)));
    for &c in roster.neighborhood_contacts(agent) {
        out.push(ContactEvent::new(agent, c, Channel::NeighborhoodFixed, day));
    }
    for &c in roster.workplace_contacts(agent) {
        out.push(ContactEvent::new(agent, c, Channel::WorkplaceFixed, day));
    }
    out
}

/// All meetings of `day` under `restrictions`, deduplicated per channel and sorted.
pub fn generate_contacts(
    roster: &AgentRoster,
    params: &SimParams,
    day: Day,
    restrictions: &RestrictionView<'_>,
    rng: &RunRng,
) -> Vec<ContactEvent> {
    if restrictions.global_lockdown_active {
        return Vec::new();
    }
    let chunks: Vec<Vec<ContactEvent>> = (0..roster.len())
        .into_par_iter()
        .step_by(AGENT_CHUNK)
        .map(|start| {
            let end = (start + AGENT_CHUNK).min(roster.len());
            let mut out = Vec::new();
            for i in start..end {
                let agent = AgentId::from_index(i);
                if restrictions.is_restricted(agent) {
                    continue;
                }
                out.extend(
                    agent_draws(roster, params, day, rng, agent)
                        .into_iter()
                        .filter(|e| !restrictions.is_restricted(e.a) && !restrictions.is_restricted(e.b)),
                );
            }
            out
        })
        .collect();
    let mut events: Vec<ContactEvent> = chunks.into_iter().flatten().collect();
    events.sort_unstable();
    events.dedup();
    events
}

#[inline]
fn infection_trial(rng: &RunRng, day: Day, e: &ContactEvent, p: f64) -> bool {
    p > 0.0 && rng.pair_uniform(Purpose::Transmission, day, e.a.0 as u64, e.b.0 as u64, e.channel as u64) < p
}

/// Agents newly exposed by `contacts`, sorted. Each event joining a COVID-I and
/// a COVID-S agent infects the S endpoint with probability `p`, independently
/// per event.
pub fn transmit(states: &AgentStates, contacts: &[ContactEvent], p: f64, rng: &RunRng) -> Vec<AgentId> {
    let mut exposed: Vec<AgentId> = contacts
        .iter()
        .filter_map(|e| {
            let (sa, sb) = (states.covid[e.a.index()], states.covid[e.b.index()]);
            let target = match (sa, sb) {
                (CovidState::I, CovidState::S) => e.b,
                (CovidState::S, CovidState::I) => e.a,
                _ => return None,
            };
            infection_trial(rng, e.day, e, p).then_some(target)
        })
        .collect();
    exposed.sort_unstable();
    exposed.dedup();
    exposed
}

/// Same result as `transmit(generate_contacts(..))`, but only materializes
/// events that join an infectious and a susceptible agent.
pub fn exposures(
    roster: &AgentRoster,
    states: &AgentStates,
    params: &SimParams,
    day: Day,
    restrictions: &RestrictionView<'_>,
    rng: &RunRng,
) -> Vec<AgentId> {
    if restrictions.global_lockdown_active || params.p <= 0.0 {
        return Vec::new();
    }
    let covid = &states.covid;
    let mixed = |x: AgentId, y: AgentId| {
        matches!((covid[x.index()], covid[y.index()]), (CovidState::I, CovidState::S) | (CovidState::S, CovidState::I))
    };
    let chunks: Vec<Vec<ContactEvent>> = (0..roster.len())
        .into_par_iter()
        .step_by(AGENT_CHUNK)
        .map(|start| {
            let end = (start + AGENT_CHUNK).min(roster.len());
            let mut out = Vec::new();
            for i in start..end {
                let agent = AgentId::from_index(i);
                let mine = covid[i];
                if !matches!(mine, CovidState::S | CovidState::I) || restrictions.is_restricted(agent) {
                    continue;
                }
                random_draws(roster, params, day, rng, agent, |other, ch| {
                    if mixed(agent, other) && !restrictions.is_restricted(other) {
                        out.push(ContactEvent::new(agent, other, ch, day));
                    }
                });
                if mine == CovidState::I {
                    for (list, ch) in [
                        (roster.neighborhood_contacts(agent), Channel::NeighborhoodFixed),
                        (roster.workplace_contacts(agent), Channel::WorkplaceFixed),
                    ] {
                        for &c in list {
                            if covid[c.index()] == CovidState::S && !restrictions.is_restricted(c) {
                                out.push(ContactEvent::new(agent, c, ch, day));
                            }
                        }
                    }
                }
            }
            out
        })
        .collect();
    let mut events: Vec<ContactEvent> = chunks.into_iter().flatten().collect();
    events.sort_unstable();
    events.dedup();
    transmit(states, &events, params.p, rng)
}

/// Advances every agent by one day: contacts and synchronous transmission,
/// then the local COVID and flu steps. Agents exposed today skip today's
/// local COVID step and enter E, or I directly when `t_ei == 1`.
pub fn advance_epidemic_day(
    roster: &AgentRoster,
    states: &mut AgentStates,
    params: &SimParams,
    day: Day,
    restrictions: &RestrictionView<'_>,
    rng: &RunRng,
) -> DayDelta {
    let exposed = exposures(roster, states, params, day, restrictions, rng);
    apply_day(roster, states, params, day, &exposed, rng)
}

/// Applies a precomputed exposure set and the local steps.
pub fn apply_day(
    roster: &AgentRoster,
    states: &mut AgentStates,
    params: &SimParams,
    day: Day,
    exposed: &[AgentId],
    rng: &RunRng,
) -> DayDelta {
    let entry = if params.t_ei <= 1.0 { CovidState::I } else { CovidState::E };

    states.covid.par_chunks_mut(AGENT_CHUNK).enumerate().for_each(|(c, chunk)| {
        let base = c * AGENT_CHUNK;
        for (k, s) in chunk.iter_mut().enumerate() {
            if matches!(*s, CovidState::E | CovidState::I) {
                let mut r = rng.stream(Purpose::CovidStep, day, (base + k) as u64);
                *s = covid_local_step(*s, params, &mut r);
            }
        }
    });
    for a in exposed {
        debug_assert_eq!(states.covid[a.index()], CovidState::S);
        states.covid[a.index()] = entry;
    }
    states.flu.par_chunks_mut(AGENT_CHUNK).enumerate().for_each(|(c, chunk)| {
        let base = c * AGENT_CHUNK;
        for (k, s) in chunk.iter_mut().enumerate() {
            let mut r = rng.stream(Purpose::FluStep, day, (base + k) as u64);
            *s = flu_step(*s, params, &mut r);
        }
    });

    DayDelta {
        new_infections: exposed.len(),
        totals: states.counts(),
        infected_by_locality: states.infected_by_locality(roster),
    }
}

/// Residents of `loc` currently in COVID-I.
pub fn infected_in(roster: &AgentRoster, states: &AgentStates, loc: LocalityId) -> usize {
    roster.residents(loc).filter(|a| states.covid[a.index()] == CovidState::I).count()
}
