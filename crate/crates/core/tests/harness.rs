mod support;

use rand::Rng as _;
use sgim_core::environment::Environment;
use sgim_core::harness::benchmark::probe_reachable;
use sgim_core::harness::experiment::aggregate;
use sgim_core::harness::{
    compare, evaluate, generate_benchmark, run_experiment, BenchmarkSet, ExperimentConfig, ExperimentReport, RunSummary,
};
use sgim_core::learners::{Strategy, LARGE_TASK_HALF_WIDTH};
use sgim_core::memory::{Memory, StrategyTag};
use sgim_core::policy_explorer::PolicyExplorerConfig;
use sgim_core::{rng, Rect};

#[test]
fn benchmark_has_one_point_per_reachable_tile() {
    let env = Environment::with_defaults(0);
    let bench = generate_benchmark(&env, &Rect::square(1.0), 100_000, None, 1).unwrap();
    assert!((300..=400).contains(&bench.points.len()), "{} points", bench.points.len());
    let grid = bench.grid();
    let mut tiles: Vec<usize> = bench.points.iter().map(|p| grid.tile_of(p).unwrap()).collect();
    tiles.sort();
    tiles.dedup();
    assert_eq!(tiles.len(), bench.points.len());
    let mut occupied = vec![false; grid.len()];
    for p in probe_reachable(&env, 100_000, 1) {
        if let Some(t) = grid.tile_of(&p) {
            occupied[t] = true;
        }
    }
    assert!(tiles.iter().all(|&t| occupied[t]));
    assert_eq!(occupied.iter().filter(|o| **o).count(), tiles.len());
    let back = BenchmarkSet::from_json(&bench.to_json().unwrap()).unwrap();
    assert_eq!(back, bench);
}

#[test]
fn evaluation_of_exact_memory_is_exact() {
    // Well separated policies whose noise-free landings are the goals.
    let mut env = Environment::with_defaults(0);
    env.set_noise_enabled(false);
    let mut r = rng::stream(50, 0);
    let mut memory = Memory::new();
    let mut points = Vec::new();
    while points.len() < 100 {
        let p = support::random_params(&mut r);
        if memory.iter().any(|e| e.params.distance(&p) < 0.5) {
            continue;
        }
        let o = env.throw_policy(&p).landing;
        memory.push(p, o, StrategyTag::Autonomous);
        points.push(o);
    }
    let bench = BenchmarkSet {
        points,
        seed: 0,
        resolution: 1,
        reachable: Rect::square(1.0),
    };
    let ev = evaluate(&memory, &bench, &env, &PolicyExplorerConfig::default(), 3).unwrap();
    assert!(ev.mean_error < 1e-6, "{}", ev.mean_error);
    assert_eq!(ev.errors.len(), 100);
}

#[test]
fn evaluation_leaves_inputs_untouched() {
    let mut env = Environment::with_defaults(4);
    let memory = support::random_memory(500, 51);
    let bench = generate_benchmark(&env, &Rect::square(1.0), 20_000, Some(16), 2).unwrap();
    let before = memory.fingerprint();
    let mut twin = env.clone();
    let a = evaluate(&memory, &bench, &env, &PolicyExplorerConfig::default(), 9).unwrap();
    let b = evaluate(&memory, &bench, &env, &PolicyExplorerConfig::default(), 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(memory.fingerprint(), before);
    let p = support::random_params(&mut rng::stream(52, 0));
    assert_eq!(env.execute(&p), twin.execute(&p));
    assert!(evaluate(&Memory::new(), &bench, &env, &PolicyExplorerConfig::default(), 9).is_err());
}

fn small_config(seeds: std::ops::Range<u64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.learner.total_episodes = 500;
    cfg.learner.checkpoint_every = 100;
    cfg.harness.seeds = seeds.collect();
    cfg.harness.noise_policies = 5;
    cfg.harness.noise_repeats = 5;
    cfg
}

#[test]
fn experiment_curves_have_every_checkpoint() {
    let env = Environment::with_defaults(0);
    let bench = generate_benchmark(&env, &Rect::square(1.0), 20_000, Some(16), 1).unwrap();
    let teacher = support::small_teacher(&env);
    let cfg = small_config(0..2);
    let report = run_experiment("small", &cfg, &env, &bench, Some(&teacher)).unwrap();
    assert_eq!(report.runs.len(), 10);
    assert_eq!(report.failures().count(), 0);
    assert_eq!(report.demonstrator, Some(1));
    for c in &report.curves {
        assert_eq!(c.checkpoints, [100, 200, 300, 400, 500]);
        assert_eq!(c.runs, 2);
        // Independent mean and population variance per checkpoint.
        for i in 0..5 {
            let v: Vec<f64> = report.runs_of(c.strategy).map(|r| r.errors[i]).collect();
            let m = v.iter().sum::<f64>() / 2.0;
            assert!((c.mean[i] - m).abs() < 1e-12);
            assert!((c.variance[i] - v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 2.0).abs() < 1e-12);
        }
    }
    let mut csv = Vec::new();
    report.write_curves_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 5 * 5);
    let back: ExperimentReport = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);

    let one = run_experiment("one", &small_config(3..4), &env, &bench, Some(&teacher)).unwrap();
    assert!(one.curves.iter().all(|c| c.variance.iter().all(|v| *v == 0.0)));
}

fn summary(strategy: Strategy, seed: u64, error: f64, coverage: usize) -> RunSummary {
    RunSummary {
        strategy,
        seed,
        checkpoints: vec![5000],
        errors: vec![error],
        coverage,
        goal_reachable_fraction: matches!(strategy, Strategy::SaggRiac | Strategy::SgimD).then_some(0.5),
        failure: None,
    }
}

fn report(label: &str, demonstrator: u8, width: f64, runs: Vec<RunSummary>) -> ExperimentReport {
    ExperimentReport {
        label: label.into(),
        demonstrator: Some(demonstrator),
        task_half_width: width,
        noise_std: 0.03,
        benchmark_points: 350,
        coverage_resolution: 20,
        curves: aggregate(&runs),
        runs,
    }
}

/// Errors scattered by +-0.002 around each mean.
fn fixture(means: &[(Strategy, f64, usize)], seeds: u64) -> Vec<RunSummary> {
    let mut r = rng::stream(60, 0);
    means
        .iter()
        .flat_map(|&(s, m, cov)| (0..seeds).map(move |k| (s, k, m, cov)))
        .map(|(s, k, m, cov)| summary(s, k, m + r.random_range(-0.002..0.002), cov))
        .collect()
}

#[test]
fn compare_passes_a_clean_fixture() {
    use Strategy::*;
    let main = report(
        "main",
        2,
        1.0,
        fixture(&[(Observation, 0.2, 50), (Random, 0.1, 100), (SaggRiac, 0.07, 150), (Imitation, 0.07, 60), (SgimD, 0.05, 200)], 10),
    );
    let d1 = report("d1", 1, 1.0, fixture(&[(SgimD, 0.055, 200)], 5));
    let d3 = report("d3", 3, 1.0, fixture(&[(SgimD, 0.052, 200)], 5));
    let mut large_runs = fixture(&[(SaggRiac, 0.09, 100), (SgimD, 0.06, 100)], 5);
    for r in &mut large_runs {
        r.goal_reachable_fraction = Some(if r.strategy == SgimD { 0.02 } else { 0.005 });
    }
    let large = report("large", 2, LARGE_TASK_HALF_WIDTH, large_runs);
    let verdicts = compare(&[main, d1, d3, large]);
    let ids: Vec<&str> = verdicts.iter().map(|v| v.criterion.as_str()).collect();
    assert_eq!(ids, ["C1", "C2", "C3", "C4", "C5", "C6"]);
    for v in &verdicts {
        assert!(v.passed, "{}", v.line());
    }
}

#[test]
fn compare_flags_each_violation() {
    use Strategy::*;
    // Random beats SAGG-RIAC, SGIM-D is above the noise floor and too close
    // to Random, and coverage is inverted on seed 0.
    let mut runs = fixture(&[(Observation, 0.2, 50), (Random, 0.1, 100), (SaggRiac, 0.12, 150), (Imitation, 0.09, 60), (SgimD, 0.095, 200)], 10);
    runs.iter_mut().filter(|r| r.strategy == Random && r.seed == 0).for_each(|r| r.coverage = 500);
    let main = report("main", 2, 1.0, runs);
    let v = compare(&[main]);
    assert_eq!(v.len(), 4);
    assert!(v.iter().all(|v| !v.passed), "{:?}", v);

    // Too few seeds for the ranking, even with clean gaps.
    let few = report(
        "few",
        2,
        1.0,
        fixture(&[(Observation, 0.2, 50), (Random, 0.1, 100), (SaggRiac, 0.07, 150), (Imitation, 0.07, 60), (SgimD, 0.05, 200)], 4),
    );
    assert!(!compare(&[few])[0].passed);
}
