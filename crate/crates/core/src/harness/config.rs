//! Experiment configuration file (TOML, sections `env`, `learner`,
//! `teacher`, `harness`) and the construction of the objects it describes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::environment::{Context, EnvConfig, Environment};
use crate::error::{Error, Result};
use crate::geometry::{Rect, TileGrid};
use crate::learners::{run, LearnerConfig, Strategy};
use crate::rng::{self, streams};
use crate::teachers::{self, DemonstrationSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TeacherConfig {
    /// 1: random exemplars, 2: reliable exemplars, 3: human-like movements.
    pub demonstrator: u8,
    /// Seed of the SAGG-RIAC run whose memory feeds demonstrators 1 and 2,
    /// and of the search behind demonstrator 3.
    pub source_seed: u64,
    pub source_episodes: usize,
    /// Re-executions per candidate when measuring reliability.
    pub k_rep: usize,
    /// Candidates re-executed per tile.
    pub max_candidates: usize,
    /// Tiles per side of the grid over [-1, 1]^2 used by demonstrators 2 and 3.
    pub grid: usize,
    /// Random final-angle vectors tried by demonstrator 3.
    pub search_samples: usize,
    /// Load a saved set instead of building one.
    pub path: Option<PathBuf>,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        Self {
            demonstrator: 2,
            source_seed: 1000,
            source_episodes: 5000,
            k_rep: 5,
            max_candidates: 8,
            grid: teachers::TEACHING_TILES,
            search_samples: 20_000,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
    /// Random policies probed to find the reachable set.
    pub n_probe: usize,
    pub bench_seed: u64,
    /// Fixed tiling resolution; chosen automatically when absent.
    pub bench_resolution: Option<usize>,
    pub eval_seed: u64,
    /// Tiles per side for the coverage count over [-1, 1]^2.
    pub coverage_resolution: usize,
    pub noise_policies: usize,
    pub noise_repeats: usize,
    pub calibration_samples: usize,
    pub output_dir: PathBuf,
    /// Worker threads; rayon's default when absent.
    pub threads: Option<usize>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            strategies: Strategy::ALL.to_vec(),
            seeds: (0..10).collect(),
            n_probe: 100_000,
            bench_seed: 1,
            bench_resolution: None,
            eval_seed: 3,
            coverage_resolution: 20,
            noise_policies: 50,
            noise_repeats: 20,
            calibration_samples: 20_000,
            output_dir: PathBuf::from("out"),
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub learner: LearnerConfig,
    pub teacher: TeacherConfig,
    pub harness: HarnessConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.learner.validate()?;
        if !(1..=3).contains(&self.teacher.demonstrator) {
            return Err(Error::Config(format!("demonstrator must be 1, 2 or 3, got {}", self.teacher.demonstrator)));
        }
        if self.teacher.grid == 0 || self.harness.coverage_resolution == 0 {
            return Err(Error::Config("grid resolutions must be positive".into()));
        }
        if self.harness.noise_repeats < 2 {
            return Err(Error::Config("noise_repeats must be at least 2".into()));
        }
        Ok(())
    }

    pub fn environment(&self) -> Result<Environment> {
        Environment::new(self.env.clone(), Context::default())
    }

    /// Learner settings for one run of the experiment.
    pub fn learner_for(&self, strategy: Strategy, seed: u64) -> LearnerConfig {
        LearnerConfig {
            strategy,
            rng_seed: seed,
            ..self.learner.clone()
        }
    }
}

/// Loads or builds the demonstration set described by `cfg`.
pub fn build_teacher(cfg: &TeacherConfig, learner: &LearnerConfig, env: &Environment) -> Result<DemonstrationSet> {
    if let Some(path) = &cfg.path {
        return DemonstrationSet::load(path);
    }
    let mut rng = rng::stream(cfg.source_seed, streams::DEMO_BUILD);
    let grid = TileGrid::new(Rect::square(1.0), cfg.grid);
    if cfg.demonstrator == 3 {
        return teachers::build_demonstrator3(env, &grid, cfg.search_samples, &mut rng);
    }
    let source = LearnerConfig {
        strategy: Strategy::SaggRiac,
        total_episodes: cfg.source_episodes,
        task_half_width: 1.0,
        rng_seed: cfg.source_seed,
        ..learner.clone()
    };
    let record = run(&source, env, None)?;
    match cfg.demonstrator {
        1 => teachers::build_demonstrator1(&record.memory, &mut rng),
        2 => {
            let mut env = env.reseeded(rng::derive(cfg.source_seed, streams::DEMO_BUILD));
            Ok(teachers::build_demonstrator2(&record.memory, &mut env, &grid, cfg.k_rep, cfg.max_candidates, &mut rng)?.set)
        }
        d => Err(Error::Config(format!("unknown demonstrator {d}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_sections_fill_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "[learner]\nstrategy = \"sagg_riac\"\ntotal_episodes = 300\n[harness]\nseeds = [4]\n[teacher]\ndemonstrator = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.learner.total_episodes, 300);
        assert_eq!(cfg.learner.checkpoint_every, 1000);
        assert_eq!(cfg.harness.seeds, vec![4]);
        assert_eq!(cfg.teacher.demonstrator, 3);
        assert_eq!(cfg.env, EnvConfig::default());
    }

    #[test]
    fn rejects_bad_demonstrator() {
        assert!(ExperimentConfig::from_toml("[teacher]\ndemonstrator = 4\n").is_err());
        assert!(ExperimentConfig::from_toml("[learner]\nstrategy = \"nope\"\n").is_err());
    }
}
