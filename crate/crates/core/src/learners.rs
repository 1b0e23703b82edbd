//! The five learning strategies and the record each run leaves behind.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::geometry::{Goal, Outcome, Rect};
use crate::interest_map::{InterestConfig, RegionSnapshot, RegionTree};
use crate::memory::{Memory, StrategyTag};
use crate::policy_explorer::{normalized_gap, PolicyExplorer, PolicyExplorerConfig};
use crate::primitives::{fit_demonstration, PolicyParams, PARAM_DIM};
use crate::rng::{self, streams, Rng};
use crate::task_explorer::{decide_goal, emulate_goal, GoalChoice, GoalMode, TaskExplorerConfig};
use crate::teachers::{select_demonstration_index, teaching_grid, Demonstration, DemonstrationSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    SaggRiac,
    Imitation,
    Observation,
    SgimD,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Random,
        Strategy::SaggRiac,
        Strategy::Imitation,
        Strategy::Observation,
        Strategy::SgimD,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::SaggRiac => "sagg_riac",
            Strategy::Imitation => "imitation",
            Strategy::Observation => "observation",
            Strategy::SgimD => "sgim_d",
        }
    }

    pub fn is_social(&self) -> bool {
        matches!(self, Strategy::Imitation | Strategy::Observation | Strategy::SgimD)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s.replace('-', "_"))
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub strategy: Strategy,
    pub total_episodes: usize,
    /// Executed policies between demonstrations; `None` disables teaching.
    pub demo_period: Option<usize>,
    /// Half-width of the square task space.
    pub task_half_width: f64,
    pub checkpoint_every: usize,
    pub rng_seed: u64,
    pub interest: InterestConfig,
    pub goals: TaskExplorerConfig,
    pub policy: PolicyExplorerConfig,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::SgimD,
            total_episodes: 5000,
            demo_period: Some(30),
            task_half_width: 1.0,
            checkpoint_every: 1000,
            rng_seed: 0,
            interest: InterestConfig::default(),
            goals: TaskExplorerConfig::default(),
            policy: PolicyExplorerConfig::default(),
        }
    }
}

/// Half-width of the task space when its bounds are widened a hundredfold.
pub const LARGE_TASK_HALF_WIDTH: f64 = 100.0;

impl LearnerConfig {
    pub fn task_space(&self) -> Rect {
        Rect::square(self.task_half_width)
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_episodes == 0 {
            return Err(Error::Config("total_episodes must be positive".into()));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::Config("checkpoint_every must be positive".into()));
        }
        if !(self.task_half_width > 0.0 && self.task_half_width.is_finite()) {
            return Err(Error::Config("task_half_width must be positive".into()));
        }
        if self.demo_period == Some(0) {
            return Err(Error::Config("demo_period must be positive".into()));
        }
        if matches!(self.strategy, Strategy::Imitation | Strategy::Observation) && self.demo_period.is_none() {
            return Err(Error::Config(format!("{} needs a demo_period", self.strategy)));
        }
        self.interest.validate()?;
        self.goals.validate()?;
        self.policy.validate()
    }
}

/// What produced an episode row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowMode {
    Random,
    Goal(GoalMode),
    Imitation,
    Observation,
}

impl RowMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowMode::Random => "random",
            RowMode::Goal(m) => m.as_str(),
            RowMode::Imitation => "imitation",
            RowMode::Observation => "observation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub index: u64,
    pub tag: StrategyTag,
    pub mode: RowMode,
    pub goal: Option<Goal>,
    pub params: PolicyParams,
    pub outcome: Outcome,
    /// Similarity to `goal`, when there is one.
    pub similarity: Option<f64>,
}

/// Memory size once a given number of policies had been executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub executed: usize,
    pub memory_len: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCounters {
    pub executed: usize,
    pub autonomous_episodes: usize,
    pub imitation_episodes: usize,
    pub demonstrations: usize,
    pub failed_demonstrations: usize,
    pub goals: usize,
    pub splits: usize,
    pub leaves: usize,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: LearnerConfig,
    pub rows: Vec<EpisodeRow>,
    pub memory: Memory,
    pub checkpoints: Vec<Checkpoint>,
    pub counters: RunCounters,
    pub regions: Vec<RegionSnapshot>,
    pub goal_log: Vec<GoalChoice>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a LearnerConfig,
    counters: &'a RunCounters,
    checkpoints: &'a [Checkpoint],
    memory_fingerprint: String,
    regions: &'a [RegionSnapshot],
}

impl RunRecord {
    /// Goals the learner set itself, in pursuit order.
    pub fn self_generated_goals(&self) -> Vec<Goal> {
        self.goal_log.iter().map(|c| c.goal).collect()
    }

    /// Memory as it stood after `executed` policies (the last checkpoint at
    /// or before it).
    pub fn memory_at(&self, executed: usize) -> Memory {
        let len = self
            .checkpoints
            .iter()
            .filter(|c| c.executed <= executed)
            .map(|c| c.memory_len)
            .next_back()
            .unwrap_or(0);
        self.memory.prefix(len)
    }

    /// One row per episode: `episode,strategy,mode,goal_x,goal_y,theta1..theta25,tau_x,tau_y,J`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::parse("run.csv", e.to_string());
        let mut header: Vec<String> = ["episode", "strategy", "mode", "goal_x", "goal_y"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((1..=PARAM_DIM).map(|i| format!("theta{i}")));
        header.extend(["tau_x", "tau_y", "J"].iter().map(|s| s.to_string()));
        w.write_record(&header).map_err(err)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let mut row = vec![
                r.index.to_string(),
                r.tag.to_string(),
                r.mode.as_str().to_string(),
                opt(r.goal.map(|g| g.x)),
                opt(r.goal.map(|g| g.y)),
            ];
            row.extend(r.params.values().iter().map(|v| v.to_string()));
            row.extend([r.outcome.x.to_string(), r.outcome.y.to_string(), opt(r.similarity)]);
            w.write_record(&row).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn sidecar_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Sidecar {
            config: &self.config,
            counters: &self.counters,
            checkpoints: &self.checkpoints,
            memory_fingerprint: format!("{:016x}", self.memory.fingerprint()),
            regions: &self.regions,
        })?)
    }
}

/// Shared state of one run.
struct Run<'a> {
    cfg: &'a LearnerConfig,
    env: Environment,
    memory: Memory,
    rows: Vec<EpisodeRow>,
    checkpoints: Vec<Checkpoint>,
    counters: RunCounters,
    goal_log: Vec<GoalChoice>,
    origin: Outcome,
    teacher: Option<&'a DemonstrationSet>,
    teacher_rng: Rng,
    fitted: HashMap<usize, Option<PolicyParams>>,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a LearnerConfig, env: Environment, teacher: Option<&'a DemonstrationSet>) -> Self {
        let origin = env.rest_outcome();
        Self {
            cfg,
            env,
            memory: Memory::new(),
            rows: Vec::new(),
            checkpoints: Vec::new(),
            counters: RunCounters::default(),
            goal_log: Vec::new(),
            origin,
            teacher,
            teacher_rng: rng::stream(cfg.rng_seed, streams::TEACHER),
            fitted: HashMap::new(),
        }
    }

    fn remaining(&self) -> usize {
        self.cfg.total_episodes - self.counters.executed
    }

    /// Registers executions, taking a checkpoint whenever a multiple of
    /// `checkpoint_every` is crossed.
    fn advance(&mut self, executed: usize) {
        for _ in 0..executed {
            self.counters.executed += 1;
            if self.counters.executed.is_multiple_of(self.cfg.checkpoint_every) {
                self.checkpoints.push(Checkpoint {
                    executed: self.counters.executed,
                    memory_len: self.memory.len(),
                });
            }
        }
    }

    fn row(&mut self, index: u64, mode: RowMode, goal: Option<Goal>) {
        let e = self.memory.get(index).expect("episode was just recorded").clone();
        self.rows.push(EpisodeRow {
            index,
            tag: e.tag,
            mode,
            goal,
            params: e.params,
            outcome: e.outcome,
            similarity: goal.map(|g| -normalized_gap(&g, &e.outcome, &self.origin)),
        });
    }

    /// Next demonstration as `(theta_d, tau_d)`, fitting raw movements once.
    fn fetch_demonstration(&mut self) -> Option<(PolicyParams, Outcome)> {
        let teacher = self.teacher?;
        let idx = select_demonstration_index(
            teacher,
            self.memory.iter().map(|e| &e.outcome),
            &teaching_grid(),
            &mut self.teacher_rng,
        );
        let entry = &teacher.entries()[idx];
        let params = match entry {
            Demonstration::Pair { params, .. } => Some(*params),
            Demonstration::Raw(raw) => *self.fitted.entry(idx).or_insert_with(|| match fit_demonstration(raw) {
                Ok(c) => Some(c.params),
                Err(e) => {
                    warn!("demonstration {idx} could not be fitted: {e}");
                    None
                }
            }),
        };
        match params {
            Some(p) => {
                self.counters.demonstrations += 1;
                Some((p, entry.outcome()))
            }
            None => {
                self.counters.failed_demonstrations += 1;
                None
            }
        }
    }

    fn finish(mut self, tree: Option<RegionTree>) -> RunRecord {
        let executing = self.cfg.strategy != Strategy::Observation;
        if executing && self.checkpoints.last().is_none_or(|c| c.executed != self.counters.executed) {
            self.checkpoints.push(Checkpoint {
                executed: self.counters.executed,
                memory_len: self.memory.len(),
            });
        }
        if let Some(t) = &tree {
            self.counters.splits = t.split_log().len();
            self.counters.leaves = t.leaf_count();
        }
        RunRecord {
            config: self.cfg.clone(),
            rows: self.rows,
            memory: self.memory,
            checkpoints: self.checkpoints,
            counters: self.counters,
            regions: tree.map(|t| t.snapshot()).unwrap_or_default(),
            goal_log: self.goal_log,
        }
    }
}

/// Runs the strategy named in `cfg`. Social strategies need `teacher`.
pub fn run(cfg: &LearnerConfig, env: &Environment, teacher: Option<&DemonstrationSet>) -> Result<RunRecord> {
    cfg.validate()?;
    if cfg.strategy.is_social() && cfg.demo_period.is_some() && teacher.is_none() {
        return Err(Error::Demonstrations(format!("{} needs a demonstration set", cfg.strategy)));
    }
    let env = env.reseeded(rng::derive(cfg.rng_seed, streams::ENV));
    match cfg.strategy {
        Strategy::Random => run_random(cfg, env),
        Strategy::SaggRiac => run_goal_babbling(cfg, env, None),
        Strategy::SgimD => run_goal_babbling(cfg, env, teacher),
        Strategy::Imitation => run_imitation(cfg, env, teacher.expect("checked above")),
        Strategy::Observation => run_observation(cfg, env, teacher.expect("checked above")),
    }
}

fn run_random(cfg: &LearnerConfig, env: Environment) -> Result<RunRecord> {
    let mut run = Run::new(cfg, env, None);
    let mut policy_rng = rng::stream(cfg.rng_seed, streams::POLICY);
    while run.remaining() > 0 {
        let params = Environment::random_policy(&mut policy_rng);
        let outcome = run.env.execute(&params);
        let index = run.memory.push(params, outcome, StrategyTag::Autonomous).index;
        run.counters.autonomous_episodes += 1;
        run.row(index, RowMode::Random, None);
        run.advance(1);
    }
    Ok(run.finish(None))
}

/// Goal babbling over the interest map; with a teacher, every `demo_period`
/// executions an imitation phase is interleaved.
fn run_goal_babbling(cfg: &LearnerConfig, env: Environment, teacher: Option<&DemonstrationSet>) -> Result<RunRecord> {
    let mut run = Run::new(cfg, env, teacher);
    let mut tree = RegionTree::new(cfg.task_space(), cfg.interest)?;
    let mut explorer = PolicyExplorer::new(cfg.policy, cfg.rng_seed)?;
    let mut goal_rng = rng::stream(cfg.rng_seed, streams::GOALS);
    let period = teacher.and(cfg.demo_period);
    let mut next_demo = period.unwrap_or(usize::MAX);

    while run.remaining() > 0 {
        if run.counters.executed >= next_demo {
            next_demo = next_demo.saturating_add(period.expect("demo time implies a period"));
            if let Some((theta_d, tau_d)) = run.fetch_demonstration() {
                let n = cfg.policy.n_im.min(run.remaining());
                let choice = emulate_goal(&tau_d, &tree.bounds());
                let done = explorer.imitate_policy(&theta_d, &mut run.memory, &mut run.env, n, cfg.policy.eps_max);
                let mut best = f64::NEG_INFINITY;
                for (index, _, outcome) in &done {
                    best = best.max(-normalized_gap(&choice.goal, outcome, &run.origin));
                    run.row(*index, RowMode::Imitation, Some(choice.goal));
                }
                run.counters.imitation_episodes += done.len();
                run.advance(done.len());
                tree.update(&choice.goal, best)?;
                continue;
            }
        }
        let choice = decide_goal(&tree, &cfg.goals, &mut goal_rng);
        let budget = cfg.policy.goal_budget.min(run.remaining());
        let pursuit = explorer.goal_directed_optimization(&choice.goal, &mut run.memory, &mut run.env, budget)?;
        for step in &pursuit.steps {
            run.row(step.episode_index, RowMode::Goal(choice.mode), Some(choice.goal));
        }
        run.counters.goals += 1;
        run.goal_log.push(choice);
        run.counters.autonomous_episodes += pursuit.steps.len();
        run.advance(pursuit.steps.len());
        tree.update(&choice.goal, pursuit.competence)?;
    }
    Ok(run.finish(Some(tree)))
}

fn run_imitation(cfg: &LearnerConfig, env: Environment, teacher: &DemonstrationSet) -> Result<RunRecord> {
    let mut run = Run::new(cfg, env, Some(teacher));
    let period = cfg.demo_period.expect("validated");
    let mut explorer = PolicyExplorer::new(cfg.policy, cfg.rng_seed)?;
    let mut current: Option<PolicyParams> = None;
    while run.remaining() > 0 {
        if let Some((theta_d, _)) = run.fetch_demonstration() {
            current = Some(theta_d);
        }
        let n = period.min(run.remaining());
        let done = match current {
            Some(theta_d) => explorer.imitate_policy(&theta_d, &mut run.memory, &mut run.env, n, cfg.policy.eps_max),
            None => {
                // Nothing to imitate yet: act randomly until a demonstration arrives.
                let rng = explorer.policy_rng();
                let picks: Vec<PolicyParams> = (0..n).map(|_| Environment::random_policy(rng)).collect();
                picks
                    .into_iter()
                    .map(|p| {
                        let o = run.env.execute(&p);
                        (run.memory.push(p, o, StrategyTag::Imitation).index, p, o)
                    })
                    .collect()
            }
        };
        for (index, ..) in &done {
            run.row(*index, RowMode::Imitation, None);
        }
        run.counters.imitation_episodes += done.len();
        run.advance(done.len());
    }
    Ok(run.finish(None))
}

fn run_observation(cfg: &LearnerConfig, env: Environment, teacher: &DemonstrationSet) -> Result<RunRecord> {
    let mut run = Run::new(cfg, env, Some(teacher));
    let period = cfg.demo_period.expect("validated");
    // Nothing is executed; the clock advances by the demonstration period.
    let every = cfg.checkpoint_every;
    let mut clock = 0;
    while clock + period <= cfg.total_episodes {
        clock += period;
        while (run.checkpoints.len() + 1) * every < clock {
            let executed = (run.checkpoints.len() + 1) * every;
            let memory_len = run.memory.len();
            run.checkpoints.push(Checkpoint { executed, memory_len });
        }
        if let Some((theta_d, tau_d)) = run.fetch_demonstration() {
            let index = run.memory.push(theta_d, tau_d, StrategyTag::Demonstration).index;
            run.row(index, RowMode::Observation, None);
        }
    }
    let memory_len = run.memory.len();
    while (run.checkpoints.len() + 1) * every <= cfg.total_episodes {
        let executed = (run.checkpoints.len() + 1) * every;
        run.checkpoints.push(Checkpoint { executed, memory_len });
    }
    if run.checkpoints.last().is_none_or(|c| c.executed < cfg.total_episodes) {
        run.checkpoints.push(Checkpoint {
            executed: cfg.total_episodes,
            memory_len,
        });
    }
    Ok(run.finish(None))
}
