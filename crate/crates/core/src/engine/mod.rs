//! Full runs: configuration, seeding, the daily loop and batches.

mod config;
mod run;
mod seeding;

pub use config::{apply_override, CitySource, Intervention, Reporting, RunConfig, Seeding};
pub use run::{active_infected, run_batch, run_batch_on, run_simulation, run_simulation_with_seed, Simulation};
pub use seeding::{seed_clustered, seed_uniform};
