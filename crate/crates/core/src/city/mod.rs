//! Localities, mobility, and the synthetic population.

mod grid;
mod model;
mod roster;

pub use grid::{generate_grid_city, grid_city_file, GridSpec, WeightFn};
pub use model::{load_city, parse_city, CityFile, CityModel, LocalityRecord, OdMatrix, ROW_SUM_TOLERANCE};
pub use roster::{apportion, build_roster, neighborhood_residents, Agent, AgentRoster, ContactLists, Neighborhood};
