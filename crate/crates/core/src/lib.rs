//! Deterministic agent-based simulation of an epidemic over a city of
//! localities, with pluggable testing policies (random symptomatic testing,
//! contact tracing, location-based testing) and test-triggered interventions.
//!
//! All randomness is drawn from counter-based streams keyed by
//! `(seed, purpose, day, subject)`, so results do not depend on thread count.

pub mod city;
pub mod engine;
pub mod epidemic;
pub mod error;
pub mod ids;
pub mod intervention;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod testing;

pub use city::{build_roster, generate_grid_city, load_city, AgentRoster, CityModel, GridSpec};
pub use engine::{run_batch, run_simulation, RunConfig, Simulation};
pub use epidemic::{AgentStates, CovidState, FluState, SimParams};
pub use error::{Error, Result};
pub use ids::{AgentId, Day, DestinationId, LocalityId};
pub use intervention::{LockdownController, QuarantineTable, RestrictionView, TriggerParams};
pub use report::{BatchOutput, DayRecord, RunOutput};
pub use rng::RunRng;
pub use testing::{LbtParams, Policy, TestResult, TestingHistory};
