//! Strategies x seeds orchestration, learning curves and the report they
//! produce.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::geometry::{Outcome, Rect, TileGrid};
use crate::harness::benchmark::{evaluate, BenchmarkSet};
use crate::harness::config::ExperimentConfig;
use crate::learners::{run, RunRecord, Strategy};
use crate::rng::{self, streams};
use crate::teachers::DemonstrationSet;

/// One learner run reduced to what the comparison needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub strategy: Strategy,
    pub seed: u64,
    /// Executed-policy counts at which the memory was evaluated.
    pub checkpoints: Vec<usize>,
    pub errors: Vec<f64>,
    /// Occupied coverage tiles of the final memory.
    pub coverage: usize,
    /// Share of self-generated goals inside the reachable bounding box;
    /// `None` for strategies that set no goals.
    pub goal_reachable_fraction: Option<f64>,
    pub failure: Option<String>,
}

impl RunSummary {
    pub fn final_error(&self) -> Option<f64> {
        if self.failure.is_some() {
            return None;
        }
        self.errors.last().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub strategy: Strategy,
    pub checkpoints: Vec<usize>,
    pub mean: Vec<f64>,
    /// Population variance across seeds (zero for a single seed).
    pub variance: Vec<f64>,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub label: String,
    pub demonstrator: Option<u8>,
    pub task_half_width: f64,
    /// Calibrated mean per-axis noise standard deviation.
    pub noise_std: f64,
    pub benchmark_points: usize,
    pub coverage_resolution: usize,
    pub runs: Vec<RunSummary>,
    pub curves: Vec<Curve>,
}

impl ExperimentReport {
    pub fn strategies(&self) -> Vec<Strategy> {
        let mut s: Vec<Strategy> = self.runs.iter().map(|r| r.strategy).collect();
        s.sort();
        s.dedup();
        s
    }

    pub fn runs_of(&self, strategy: Strategy) -> impl Iterator<Item = &RunSummary> {
        self.runs.iter().filter(move |r| r.strategy == strategy)
    }

    /// Final errors of the successful runs of `strategy`, in seed order.
    pub fn final_errors(&self, strategy: Strategy) -> Vec<f64> {
        self.runs_of(strategy).filter_map(RunSummary::final_error).collect()
    }

    pub fn curve(&self, strategy: Strategy) -> Option<&Curve> {
        self.curves.iter().find(|c| c.strategy == strategy)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RunSummary> {
        self.runs.iter().filter(|r| r.failure.is_some())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `strategy,episodes,mean,variance,runs`, one row per checkpoint.
    pub fn write_curves_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::parse("curves.csv", e.to_string());
        w.write_record(["strategy", "episodes", "mean", "variance", "runs"]).map_err(err)?;
        for c in &self.curves {
            for i in 0..c.checkpoints.len() {
                w.write_record([
                    c.strategy.as_str().to_string(),
                    c.checkpoints[i].to_string(),
                    c.mean[i].to_string(),
                    c.variance[i].to_string(),
                    c.runs.to_string(),
                ])
                .map_err(err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean per-axis standard deviation of repeated noisy outcomes, averaged
/// over `n_policies` random policies executed `repeats` times each.
pub fn noise_std_calibration(env: &Environment, n_policies: usize, repeats: usize, seed: u64) -> Result<f64> {
    if n_policies == 0 || repeats < 2 {
        return Err(Error::Calibration("need at least one policy and two repeats".into()));
    }
    let mut rng = rng::stream(seed, streams::CALIBRATION);
    let mut env = env.reseeded(rng::derive(seed, streams::CALIBRATION));
    env.set_noise_enabled(true);
    let mut total = 0.0;
    for _ in 0..n_policies {
        let p = Environment::random_policy(&mut rng);
        let outs: Vec<Outcome> = (0..repeats).map(|_| env.execute(&p)).collect();
        let n = repeats as f64;
        let (mx, my) = (
            outs.iter().map(|o| o.x).sum::<f64>() / n,
            outs.iter().map(|o| o.y).sum::<f64>() / n,
        );
        let vx = outs.iter().map(|o| (o.x - mx).powi(2)).sum::<f64>() / (n - 1.0);
        let vy = outs.iter().map(|o| (o.y - my).powi(2)).sum::<f64>() / (n - 1.0);
        total += 0.5 * (vx.sqrt() + vy.sqrt());
    }
    Ok(total / n_policies as f64)
}

/// Occupied tiles of a `resolution`^2 grid over [-1, 1]^2.
pub fn coverage(outcomes: impl IntoIterator<Item = Outcome>, resolution: usize) -> usize {
    TileGrid::new(Rect::square(1.0), resolution).occupied(outcomes)
}

pub fn reachable_fraction(goals: &[Outcome], reachable: &Rect) -> Option<f64> {
    if goals.is_empty() {
        return None;
    }
    Some(goals.iter().filter(|g| reachable.contains(g)).count() as f64 / goals.len() as f64)
}

/// Evaluates a finished run at each of its checkpoints.
pub fn summarize(
    record: &RunRecord,
    bench: &BenchmarkSet,
    env: &Environment,
    eval_seed: u64,
    coverage_resolution: usize,
) -> Result<RunSummary> {
    let cfg = &record.config;
    let mut checkpoints = Vec::new();
    let mut errors = Vec::new();
    for c in &record.checkpoints {
        let memory = record.memory_at(c.executed);
        let ev = evaluate(&memory, bench, env, &cfg.policy, rng::derive(eval_seed, cfg.rng_seed))?;
        checkpoints.push(c.executed);
        errors.push(ev.mean_error);
    }
    let goal_reachable_fraction = if matches!(cfg.strategy, Strategy::SaggRiac | Strategy::SgimD) {
        reachable_fraction(&record.self_generated_goals(), &bench.reachable)
    } else {
        None
    };
    Ok(RunSummary {
        strategy: cfg.strategy,
        seed: cfg.rng_seed,
        checkpoints,
        errors,
        coverage: coverage(record.memory.iter().map(|e| e.outcome), coverage_resolution),
        goal_reachable_fraction,
        failure: None,
    })
}

fn one_run(
    cfg: &ExperimentConfig,
    env: &Environment,
    bench: &BenchmarkSet,
    teacher: Option<&DemonstrationSet>,
    strategy: Strategy,
    seed: u64,
) -> RunSummary {
    let outcome = run(&cfg.learner_for(strategy, seed), env, teacher)
        .and_then(|rec| summarize(&rec, bench, env, cfg.harness.eval_seed, cfg.harness.coverage_resolution));
    outcome.unwrap_or_else(|e| {
        log::warn!("{strategy} seed {seed} failed: {e}");
        RunSummary {
            strategy,
            seed,
            checkpoints: Vec::new(),
            errors: Vec::new(),
            coverage: 0,
            goal_reachable_fraction: None,
            failure: Some(e.to_string()),
        }
    })
}

/// Mean and population variance per checkpoint over the successful runs of
/// each strategy.
pub fn aggregate(runs: &[RunSummary]) -> Vec<Curve> {
    let mut strategies: Vec<Strategy> = runs.iter().map(|r| r.strategy).collect();
    strategies.sort();
    strategies.dedup();
    strategies
        .into_iter()
        .filter_map(|s| {
            let ok: Vec<&RunSummary> = runs
                .iter()
                .filter(|r| r.strategy == s && r.failure.is_none() && !r.errors.is_empty())
                .collect();
            let checkpoints = ok.first()?.checkpoints.clone();
            let ok: Vec<&RunSummary> = ok.into_iter().filter(|r| r.checkpoints == checkpoints).collect();
            let n = ok.len() as f64;
            let mean: Vec<f64> = (0..checkpoints.len())
                .map(|i| ok.iter().map(|r| r.errors[i]).sum::<f64>() / n)
                .collect();
            let variance = (0..checkpoints.len())
                .map(|i| ok.iter().map(|r| (r.errors[i] - mean[i]).powi(2)).sum::<f64>() / n)
                .collect();
            Some(Curve {
                strategy: s,
                checkpoints,
                mean,
                variance,
                runs: ok.len(),
            })
        })
        .collect()
}

/// Runs every configured strategy on every seed (in parallel) and reduces
/// the results. Failed runs stay in the report with their error message.
pub fn run_experiment(
    label: &str,
    cfg: &ExperimentConfig,
    env: &Environment,
    bench: &BenchmarkSet,
    teacher: Option<&DemonstrationSet>,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let h = &cfg.harness;
    let jobs: Vec<(Strategy, u64)> = h
        .strategies
        .iter()
        .flat_map(|&s| h.seeds.iter().map(move |&k| (s, k)))
        .collect();
    let work = || -> Vec<RunSummary> {
        jobs.par_iter()
            .map(|&(s, k)| one_run(cfg, env, bench, teacher, s, k))
            .collect()
    };
    let runs = match h.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work),
        None => work(),
    };
    let noise_std = noise_std_calibration(env, h.noise_policies, h.noise_repeats, h.bench_seed)?;
    let social = h.strategies.iter().any(Strategy::is_social);
    Ok(ExperimentReport {
        label: label.to_string(),
        demonstrator: if social { teacher.map(|t| t.provenance().demonstrator()) } else { None },
        task_half_width: cfg.learner.task_half_width,
        noise_std,
        benchmark_points: bench.points.len(),
        coverage_resolution: h.coverage_resolution,
        curves: aggregate(&runs),
        runs,
    })
}
