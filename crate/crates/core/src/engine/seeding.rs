use log::warn;
use rand_distr::{Binomial, Distribution};

use crate::city::AgentRoster;
use crate::epidemic::{AgentStates, CovidState};
use crate::ids::{AgentId, LocalityId};
use crate::rng::{Purpose, RunRng};
use crate::sampling::uniform_subset;

fn infect_residents(
    roster: &AgentRoster,
    states: &mut AgentStates,
    loc: LocalityId,
    count: usize,
    rng: &RunRng,
) -> usize {
    let residents: Vec<AgentId> = roster.residents(loc).collect();
    let mut s = rng.stream(Purpose::Seeding, 0, loc.0 as u64);
    let picked = uniform_subset(&mut s, residents.len(), count);
    for &k in &picked {
        states.covid[residents[k].index()] = CovidState::I;
    }
    picked.len()
}

/// Sets `count` distinct residents of `loc` to COVID-I (all of them if fewer live there).
/// Returns the number seeded.
pub fn seed_clustered(
    roster: &AgentRoster,
    states: &mut AgentStates,
    loc: LocalityId,
    count: usize,
    rng: &RunRng,
) -> usize {
    let available = roster.resident_count(loc);
    if available < count {
        warn!("locality {loc} has {available} residents, fewer than the {count} requested seeds; infecting all");
    }
    infect_residents(roster, states, loc, count, rng)
}

/// Gives every locality Binomial(`trials`, `prob`) COVID-I seeds, capped at its
/// resident count. Returns the total seeded.
pub fn seed_uniform(roster: &AgentRoster, states: &mut AgentStates, trials: u64, prob: f64, rng: &RunRng) -> usize {
    let binomial = Binomial::new(trials, prob).expect("seeding probability in [0, 1]");
    (0..roster.locality_count())
        .map(|l| {
            let loc = LocalityId::from_index(l);
            let mut s = rng.stream(Purpose::Seeding, 1, l as u64);
            let k = binomial.sample(&mut s) as usize;
            infect_residents(roster, states, loc, k, rng)
        })
        .sum()
}
