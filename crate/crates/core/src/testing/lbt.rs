//! Location-based testing: risk scores from exponentially amplified counts of
//! past positives per home locality and per visit place.

use serde::{Deserialize, Serialize};

use super::history::TestingHistory;
use crate::city::{Agent, AgentRoster};
use crate::ids::{AgentId, Day};
use crate::rng::StreamRng;
use crate::sampling::weighted_successive;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LbtParams {
    /// Score added to a locality per resident positive.
    pub alpha_loc: f64,
    /// Score added to a visit place per visiting positive.
    pub alpha_vis: f64,
    /// Weight of the locality score relative to the visit-place score.
    pub beta: f64,
    /// Per-day amplification of older scores.
    pub epsilon: f64,
    /// Baseline sampling weight added to every score.
    pub floor: f64,
}

impl Default for LbtParams {
    fn default() -> Self {
        Self { alpha_loc: 1.0, alpha_vis: 1.0, beta: 1.0, epsilon: 0.1, floor: 1e-6 }
    }
}

impl LbtParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("alpha_loc", self.alpha_loc),
            ("alpha_vis", self.alpha_vis),
            ("beta", self.beta),
            ("epsilon", self.epsilon),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("lbt.{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(self.floor > 0.0 && self.floor.is_finite()) {
            return Err(format!("lbt.floor must be finite and > 0, got {}", self.floor));
        }
        Ok(())
    }
}

/// Running locality and visit-place scores.
///
/// After [`update_scores`] to day `t`, each entry equals
/// `Σ_{τ<t} α · count(τ) · (1+ε)^(t−1−τ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTables {
    pub locality: Vec<f64>,
    pub visit: Vec<f64>,
    day: Day,
}

impl ScoreTables {
    pub fn new(localities: usize, destinations: usize) -> Self {
        Self { locality: vec![0.0; localities], visit: vec![0.0; destinations], day: 1 }
    }

    pub fn for_roster(roster: &AgentRoster) -> Self {
        Self::new(roster.locality_count(), roster.destination_count())
    }

    /// Day the tables are valid for (they include positives of earlier days only).
    pub fn day(&self) -> Day {
        self.day
    }
}

/// Brings `tables` forward to `day` by folding in each missing day's positives:
/// scale by `1 + ε`, then add `α` per positive.
pub fn update_scores(
    tables: &mut ScoreTables,
    history: &TestingHistory,
    roster: &AgentRoster,
    day: Day,
    params: &LbtParams,
) {
    let growth = 1.0 + params.epsilon;
    while tables.day < day {
        let tau = tables.day;
        tables.locality.iter_mut().for_each(|s| *s *= growth);
        tables.visit.iter_mut().for_each(|s| *s *= growth);
        for a in history.positives_on(tau) {
            let agent = roster.agent(a);
            tables.locality[agent.home.index()] += params.alpha_loc;
            if let Some(v) = agent.visit_place {
                tables.visit[v.index()] += params.alpha_vis;
            }
        }
        tables.day += 1;
    }
}

/// Visit-place score plus `β` times the home-locality score.
pub fn get_score(agent: &Agent, tables: &ScoreTables, params: &LbtParams) -> f64 {
    let visit = agent.visit_place.map_or(0.0, |v| tables.visit[v.index()]);
    visit + params.beta * tables.locality[agent.home.index()]
}

/// Weighted sampling without replacement of `min(budget, |pool|)` agents,
/// weight = score + floor.
pub fn select_lbt(
    pool: &[AgentId],
    roster: &AgentRoster,
    tables: &ScoreTables,
    budget: usize,
    params: &LbtParams,
    rng: &mut StreamRng,
) -> Vec<AgentId> {
    if budget >= pool.len() {
        return pool.to_vec();
    }
    let weights: Vec<f64> = pool.iter().map(|&a| get_score(roster.agent(a), tables, params) + params.floor).collect();
    let mut picked: Vec<AgentId> = weighted_successive(rng, &weights, budget).into_iter().map(|k| pool[k]).collect();
    picked.sort_unstable();
    picked
}
