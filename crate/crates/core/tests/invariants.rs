//! Property tests over randomized small configurations.

mod common;

use proptest::prelude::*;

use common::{check_contacts, check_exposures, check_run, small_config, timeseries_bytes};
use episim::city::{build_roster, generate_grid_city, GridSpec};
use episim::engine::{Intervention, RunConfig, Seeding};
use episim::epidemic::SimParams;
use episim::testing::Policy;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn run_invariants(cfg in small_config()) {
        check_run(&cfg)?;
    }

    #[test]
    fn contacts_respect_restrictions(cfg in small_config(), frac in 0.0f64..0.5, day in 1u32..30) {
        check_contacts(&cfg, frac, day)?;
    }

    #[test]
    fn exposures_match_full_contact_list(cfg in small_config(), day in 1u32..30, infected in 0.0f64..0.6) {
        check_exposures(&cfg, day, infected)?;
    }

    #[test]
    fn thread_count_does_not_change_output(cfg in small_config()) {
        let city = cfg.city_model().unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| timeseries_bytes(&cfg, &city));
        let b = four.install(|| timeseries_bytes(&cfg, &city));
        prop_assert_eq!(a, b);
    }
}

#[test]
fn larger_population_runs_match_across_thread_counts() {
    let cfg = RunConfig {
        agents: 20_000,
        policy: Policy::Lbt,
        intervention: Intervention::Quarantine,
        seeding: Seeding::Uniform { trials: 5, prob: 0.1 },
        params: SimParams { days: 25, ..SimParams::default() },
        ..RunConfig::default()
    };
    let city = cfg.city_model().unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let eight = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
    assert_eq!(one.install(|| timeseries_bytes(&cfg, &city)), eight.install(|| timeseries_bytes(&cfg, &city)));
}

#[test]
fn roster_audit_on_default_city() {
    let city = generate_grid_city(&GridSpec::new(18, 11).with_seed(2020));
    let roster = build_roster(&city, 100_000, &SimParams::default(), 4).unwrap();
    roster.audit(&city).unwrap();
}
