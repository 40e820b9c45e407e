//! Shared fixtures for the criterion benches.

use episim::{build_roster, generate_grid_city, AgentRoster, CityModel, GridSpec, SimParams};

/// The default 18 × 11 grid with `n` agents.
pub fn fixture(n: usize) -> (CityModel, AgentRoster) {
    let city = generate_grid_city(&GridSpec::new(18, 11).with_seed(2020));
    let roster = build_roster(&city, n, &SimParams::default(), 7).expect("roster");
    (city, roster)
}
