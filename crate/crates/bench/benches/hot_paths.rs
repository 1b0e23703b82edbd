use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::Rng as _;

use sgim_bench::filled_memory;
use sgim_core::environment::Environment;
use sgim_core::learners::{run, LearnerConfig, Strategy};
use sgim_core::policy_explorer::{local_data, PolicyExplorerConfig};
use sgim_core::{rng, Outcome};

fn environment(c: &mut Criterion) {
    let mut env = Environment::with_defaults(0);
    let p = Environment::random_policy(&mut rng::stream(1, 0));
    c.bench_function("env_execute", |b| b.iter(|| env.execute(black_box(&p))));
}

fn memory(c: &mut Criterion) {
    let mut env = Environment::with_defaults(0);
    let m = filled_memory(&mut env, 5000, 2);
    let mut r = rng::stream(3, 0);
    let goals: Vec<Outcome> = (0..256).map(|_| Outcome::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
    let mut i = 0;
    c.bench_function("memory_nearest_outcomes_5000", |b| {
        b.iter(|| {
            i = (i + 1) % goals.len();
            m.nearest_outcomes(black_box(&goals[i]), 12).unwrap().len()
        })
    });
    let center = m.episodes()[17].params;
    c.bench_function("memory_nearest_policies_5000", |b| b.iter(|| m.nearest_policies(black_box(&center), 0.3).len()));
    let cfg = PolicyExplorerConfig::default();
    c.bench_function("local_data_5000", |b| {
        b.iter(|| {
            i = (i + 1) % goals.len();
            local_data(black_box(&goals[i]), &m, &cfg).unwrap().score
        })
    });
}

fn learner(c: &mut Criterion) {
    let env = Environment::with_defaults(0);
    let cfg = LearnerConfig {
        strategy: Strategy::SaggRiac,
        total_episodes: 500,
        ..LearnerConfig::default()
    };
    let mut group = c.benchmark_group("learner");
    group.sample_size(10);
    group.bench_function("sagg_riac_500", |b| b.iter(|| run(&cfg, &env, None).unwrap().memory.len()));
    group.finish();
}

criterion_group!(benches, environment, memory, learner);
criterion_main!(benches);
