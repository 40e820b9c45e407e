//! Budgeted test selection.
//!
//! A policy sees only observable information: who reported symptoms today,
//! where agents live and visit, their fixed contacts, and the testing
//! history. True COVID state enters only through [`test_individual`].

mod history;
mod lbt;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use history::{TestResult, TestingHistory};
pub use lbt::{get_score, select_lbt, update_scores, LbtParams, ScoreTables};

use crate::city::AgentRoster;
use crate::epidemic::{AgentStates, CovidState};
use crate::error::Result;
use crate::ids::{AgentId, Day};
use crate::rng::{Purpose, RunRng, StreamRng};
use crate::sampling::uniform_subset;

/// Days before `t` whose positives CT traces.
pub const CT_LOOKBACK_DAYS: Day = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    None,
    Rst,
    Ct,
    Lbt,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::None => "none",
            Policy::Rst => "rst",
            Policy::Ct => "ct",
            Policy::Lbt => "lbt",
        }
    }
}

/// Agents reporting symptoms on one day, in id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymptomaticPool {
    pub day: Day,
    pub members: Vec<AgentId>,
}

impl SymptomaticPool {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, agent: AgentId) -> bool {
        self.members.binary_search(&agent).is_ok()
    }
}

/// Noisy individual test: never positive unless COVID-I, then positive with
/// probability `1 − false_negative_rate`.
pub fn test_individual(state: CovidState, false_negative_rate: f64, rng: &mut StreamRng) -> TestResult {
    if state == CovidState::I && rng.chance(1.0 - false_negative_rate) {
        TestResult::Positive
    } else {
        TestResult::Negative
    }
}

/// Symptomatic agents (COVID-I or flu-I) who pass today's reporting draw
/// (probability `reporting[home]`) and have never tested positive.
pub fn build_pool(
    roster: &AgentRoster,
    states: &AgentStates,
    day: Day,
    reporting: &[f64],
    history: &TestingHistory,
    rng: &RunRng,
) -> SymptomaticPool {
    const CHUNK: usize = 8192;
    let n = roster.len();
    let members = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut out = Vec::new();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let a = AgentId::from_index(i);
                if !states.is_symptomatic(a) || history.has_positive(a) {
                    continue;
                }
                let rho = reporting[roster.agent(a).home.index()];
                if rho >= 1.0 || rng.stream(Purpose::Reporting, day, i as u64).chance(rho) {
                    out.push(a);
                }
            }
            out
        })
        .flatten()
        .collect();
    SymptomaticPool { day, members }
}

/// Uniform subset of `min(budget, |pool|)` agents.
pub fn select_rst(pool: &[AgentId], budget: usize, rng: &mut StreamRng) -> Vec<AgentId> {
    let mut picked: Vec<AgentId> = uniform_subset(rng, pool.len(), budget).into_iter().map(|k| pool[k]).collect();
    picked.sort_unstable();
    picked
}

/// Pool members who are fixed contacts of someone that tested positive on
/// `day − 1` or `day − 2`.
pub fn traced_contacts(
    pool: &SymptomaticPool,
    history: &TestingHistory,
    roster: &AgentRoster,
    day: Day,
) -> Vec<AgentId> {
    let mut traced = BTreeSet::new();
    for back in 1..=CT_LOOKBACK_DAYS {
        if back >= day {
            break;
        }
        for p in history.positives_on(day - back) {
            for &c in roster.neighborhood_contacts(p).iter().chain(roster.workplace_contacts(p)) {
                if pool.contains(c) {
                    traced.insert(c);
                }
            }
        }
    }
    traced.into_iter().collect()
}

/// Contact tracing: traced symptomatic contacts first, topped up uniformly
/// from the rest of the pool; if the traced set alone exceeds the budget,
/// `budget` of them are drawn uniformly.
pub fn select_ct(
    pool: &SymptomaticPool,
    history: &TestingHistory,
    roster: &AgentRoster,
    budget: usize,
    day: Day,
    rng: &mut StreamRng,
) -> Vec<AgentId> {
    let traced = traced_contacts(pool, history, roster, day);
    if traced.len() >= budget {
        return select_rst(&traced, budget, rng);
    }
    let rest: Vec<AgentId> = pool.members.iter().copied().filter(|a| traced.binary_search(a).is_err()).collect();
    let mut picked = traced;
    picked.extend(select_rst(&rest, budget - picked.len(), rng));
    picked.sort_unstable();
    picked
}

/// A policy together with the state it carries between days.
#[derive(Debug, Clone)]
pub struct TestingPolicy {
    policy: Policy,
    lbt: LbtParams,
    tables: ScoreTables,
}

impl TestingPolicy {
    pub fn new(policy: Policy, lbt: LbtParams, roster: &AgentRoster) -> Self {
        Self { policy, lbt, tables: ScoreTables::for_roster(roster) }
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn tables(&self) -> &ScoreTables {
        &self.tables
    }

    /// Agents to test on `day`. Sees only observable information.
    pub fn select(
        &mut self,
        pool: &SymptomaticPool,
        roster: &AgentRoster,
        history: &TestingHistory,
        day: Day,
        budget: usize,
        rng: &RunRng,
    ) -> Vec<AgentId> {
        let mut s = rng.stream(Purpose::Selection, day, 0);
        match self.policy {
            Policy::None => Vec::new(),
            Policy::Rst => select_rst(&pool.members, budget, &mut s),
            Policy::Ct => select_ct(pool, history, roster, budget, day, &mut s),
            Policy::Lbt => {
                update_scores(&mut self.tables, history, roster, day, &self.lbt);
                select_lbt(&pool.members, roster, &self.tables, budget, &self.lbt, &mut s)
            }
        }
    }
}

/// Selects, tests, and records one day's tests. Returns the outcomes in agent order.
#[allow(clippy::too_many_arguments)]
pub fn run_policy(
    policy: &mut TestingPolicy,
    pool: &SymptomaticPool,
    roster: &AgentRoster,
    states: &AgentStates,
    history: &mut TestingHistory,
    day: Day,
    budget: usize,
    false_negative_rate: f64,
    rng: &RunRng,
) -> Result<Vec<(AgentId, TestResult)>> {
    let selected = policy.select(pool, roster, history, day, budget, rng);
    debug_assert!(selected.len() <= budget);
    history.open_day(day);
    let mut out = Vec::with_capacity(selected.len());
    for a in selected {
        let mut s = rng.stream(Purpose::TestResult, day, a.0 as u64);
        let r = test_individual(states.covid[a.index()], false_negative_rate, &mut s);
        history.record(a, day, r)?;
        out.push((a, r));
    }
    Ok(out)
}
