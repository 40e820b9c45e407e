use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use episim::engine::{RunConfig, Seeding, Simulation};
use episim::epidemic::{advance_epidemic_day, generate_contacts, AgentStates};
use episim::ids::AgentId;
use episim::intervention::RestrictionView;
use episim::rng::{Purpose, RunRng};
use episim::testing::{select_lbt, LbtParams, ScoreTables};
use episim::SimParams;
use episim_bench::fixture;

fn contacts(c: &mut Criterion) {
    let (_, roster) = fixture(100_000);
    let params = SimParams::default();
    let rng = RunRng::new(3);
    c.bench_function("generate_contacts_100k", |b| {
        b.iter(|| generate_contacts(&roster, &params, 1, &RestrictionView::open(1), &rng).len())
    });
}

fn day_step(c: &mut Criterion) {
    let (_, roster) = fixture(100_000);
    let params = SimParams::default();
    let rng = RunRng::new(3);
    let mut states = AgentStates::initial(roster.len(), &params, &rng);
    for i in (0..roster.len()).step_by(50) {
        states.covid[i] = episim::CovidState::I;
    }
    c.bench_function("advance_day_100k", |b| {
        b.iter_batched(
            || states.clone(),
            |mut s| advance_epidemic_day(&roster, &mut s, &params, 1, &RestrictionView::open(1), &rng),
            BatchSize::LargeInput,
        )
    });
}

fn lbt_selection(c: &mut Criterion) {
    let (_, roster) = fixture(100_000);
    let tables = ScoreTables::for_roster(&roster);
    let pool: Vec<AgentId> = (0..roster.len()).step_by(20).map(AgentId::from_index).collect();
    let params = LbtParams::default();
    c.bench_function("select_lbt_5000_pool", |b| {
        b.iter(|| {
            let mut s = RunRng::new(5).stream(Purpose::Selection, 1, 0);
            select_lbt(&pool, &roster, &tables, 50, &params, &mut s)
        })
    });
}

fn full_run(c: &mut Criterion) {
    let config = RunConfig {
        agents: 20_000,
        seeding: Seeding::Uniform { trials: 5, prob: 0.1 },
        params: SimParams { days: 30, ..SimParams::default() },
        ..RunConfig::default()
    };
    let city = config.city_model().unwrap();
    let mut group = c.benchmark_group("run");
    group.sample_size(10);
    group.bench_function("rst_20k_30_days", |b| {
        b.iter(|| Simulation::new(&config, &city, 11).unwrap().finish().unwrap().days.len())
    });
    group.finish();
}

criterion_group!(benches, contacts, day_step, lbt_selection, full_run);
criterion_main!(benches);
