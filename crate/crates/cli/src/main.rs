use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Parser, Subcommand};
use log::info;

use sgim_core::environment::{calibrate_scale, landing_radius_p99, Environment};
use sgim_core::harness::{
    build_teacher, compare, evaluate, generate_benchmark, noise_std_calibration, run_experiment, BenchmarkSet,
    ExperimentConfig, ExperimentReport,
};
use sgim_core::learners::{run, Strategy};
use sgim_core::memory::Memory;
use sgim_core::teachers::DemonstrationSet;
use sgim_core::Rect;

#[derive(Parser)]
#[command(name = "sgim", version, about = "Goal babbling with demonstrations on a simulated fishing arm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure the outcome scale and noise level of the environment.
    Calibrate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the config back with the measured scale.
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Generate the benchmark goal set.
    BenchGen {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a demonstration set.
    TeachGen {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        demonstrator: u8,
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV file for demonstrators 1 and 2, directory for 3.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one learner and write its episode CSV, JSON sidecar and memory dump.
    Run {
        #[arg(long)]
        strategy: Strategy,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Saved demonstration set; built from the config otherwise.
        #[arg(long)]
        teacher: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Evaluate every strategy and seed of the config against the benchmark,
    /// or a single memory dump with --memory.
    Eval {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        bench: Option<PathBuf>,
        #[arg(long)]
        teacher: Option<PathBuf>,
        #[arg(long)]
        memory: Option<PathBuf>,
        #[arg(long, default_value = "experiment")]
        label: String,
        /// Defaults to the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print one verdict per criterion from one or more report files.
    Compare {
        #[arg(long, required = true)]
        report: Vec<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Exit with an error when any criterion fails.
        #[arg(long)]
        strict: bool,
    },
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_bench(cfg: &ExperimentConfig, env: &Environment, path: Option<&Path>) -> Result<BenchmarkSet> {
    if let Some(p) = path {
        return Ok(BenchmarkSet::from_json(&fs::read_to_string(p)?)?);
    }
    let h = &cfg.harness;
    // Benchmark goals cover the reachable set, whatever the task space width.
    Ok(generate_benchmark(env, &Rect::square(1.0), h.n_probe, h.bench_resolution, h.bench_seed)?)
}

fn teacher_for(cfg: &ExperimentConfig, env: &Environment, path: Option<&Path>) -> Result<DemonstrationSet> {
    if let Some(p) = path {
        return DemonstrationSet::load(p).with_context(|| format!("loading demonstrations {}", p.display()));
    }
    if cfg.teacher.path.is_none() {
        info!("building demonstrator {}", cfg.teacher.demonstrator);
    }
    Ok(build_teacher(&cfg.teacher, &cfg.learner, env)?)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Calibrate { config, samples, seed, write: out } => {
            let mut cfg = load_config(config.as_deref())?;
            let env = cfg.environment()?;
            let scale = calibrate_scale(&env, samples, seed)?;
            cfg.env.scale = scale;
            let env = cfg.environment()?;
            let h = &cfg.harness;
            let noise = noise_std_calibration(&env, h.noise_policies, h.noise_repeats, h.bench_seed)?;
            let summary = serde_json::json!({
                "scale": scale,
                "landing_radius_p99": landing_radius_p99(&env, samples, seed),
                "rest_outcome": env.rest_outcome(),
                "noise_std": noise,
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
            if let Some(p) = out {
                write(&p, cfg.to_toml()?)?;
            }
        }
        Command::BenchGen { config, out } => {
            let cfg = load_config(config.as_deref())?;
            let env = cfg.environment()?;
            let bench = load_bench(&cfg, &env, None)?;
            info!("{} benchmark points at resolution {}", bench.points.len(), bench.resolution);
            write(&out, bench.to_json()?)?;
        }
        Command::TeachGen { demonstrator, config, out } => {
            let mut cfg = load_config(config.as_deref())?;
            cfg.teacher.demonstrator = demonstrator;
            cfg.teacher.path = None;
            let env = cfg.environment()?;
            let set = build_teacher(&cfg.teacher, &cfg.learner, &env)?;
            info!("{} demonstrations", set.len());
            set.save(&out)?;
        }
        Command::Run { strategy, seed, config, teacher, out } => {
            let cfg = load_config(config.as_deref())?;
            let env = cfg.environment()?;
            let set = if strategy.is_social() { Some(teacher_for(&cfg, &env, teacher.as_deref())?) } else { None };
            let rec = run(&cfg.learner_for(strategy, seed), &env, set.as_ref())?;
            fs::create_dir_all(&out)?;
            let stem = format!("run_{strategy}_{seed}");
            let mut csv = Vec::new();
            rec.write_csv(&mut csv)?;
            write(&out.join(format!("{stem}.csv")), csv)?;
            write(&out.join(format!("{stem}.json")), rec.sidecar_json()?)?;
            let mut mem = Vec::new();
            rec.memory.write_csv(&mut mem)?;
            write(&out.join(format!("{stem}_memory.csv")), mem)?;
            info!("{} episodes, {} in memory", rec.counters.executed, rec.memory.len());
        }
        Command::Eval { config, bench, teacher, memory, label, out } => {
            let cfg = load_config(config.as_deref())?;
            let env = cfg.environment()?;
            let bench = load_bench(&cfg, &env, bench.as_deref())?;
            if let Some(p) = memory {
                let file = fs::File::open(&p).with_context(|| format!("opening {}", p.display()))?;
                let memory = Memory::read_csv(file)?;
                let ev = evaluate(&memory, &bench, &env, &cfg.learner.policy, cfg.harness.eval_seed)?;
                println!("{}", serde_json::json!({ "episodes": memory.len(), "mean_error": ev.mean_error }));
                return Ok(ExitCode::SUCCESS);
            }
            let set = if cfg.harness.strategies.iter().any(Strategy::is_social) {
                Some(teacher_for(&cfg, &env, teacher.as_deref())?)
            } else {
                None
            };
            let report = run_experiment(&label, &cfg, &env, &bench, set.as_ref())?;
            let dir = out.unwrap_or_else(|| cfg.harness.output_dir.clone());
            write(&dir.join(format!("{label}_report.json")), report.to_json()?)?;
            let mut curves = Vec::new();
            report.write_curves_csv(&mut curves)?;
            write(&dir.join(format!("{label}_curves.csv")), curves)?;
            for c in &report.curves {
                println!("{:12} {}", c.strategy.as_str(), c.mean.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join(" "));
            }
            let failed = report.failures().count();
            if failed > 0 {
                bail!("{failed} runs failed; see {}", dir.display());
            }
        }
        Command::Compare { report, json, strict } => {
            let reports = report
                .iter()
                .map(|p| {
                    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    serde_json::from_str::<ExperimentReport>(&text).with_context(|| format!("parsing {}", p.display()))
                })
                .collect::<Result<Vec<_>>>()?;
            let verdicts = compare(&reports);
            for v in &verdicts {
                println!("{}", v.line());
            }
            if let Some(p) = json {
                write(&p, serde_json::to_string_pretty(&verdicts)?)?;
            }
            if strict && verdicts.iter().any(|v| !v.passed) {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
