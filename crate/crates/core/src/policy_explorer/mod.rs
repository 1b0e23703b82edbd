//! The policy level: reaching one goal through global exploration or local
//! optimization around the most reliable memory region, and imitation of
//! demonstrated policies.

pub mod nelder_mead;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::geometry::{Goal, Outcome};
use crate::memory::{Episode, Memory, StrategyTag};
use crate::primitives::{clamp_params, PolicyParams, PARAM_DIM};
use crate::rng::{self, streams, Rng};
use nelder_mead::{NelderMeadOptions, Seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyExplorerConfig {
    /// Anchors considered around a goal.
    pub h_max: usize,
    /// Policy-space neighbours kept per anchor.
    pub k_max: usize,
    /// Outcome radius for anchors.
    pub dist_m: f64,
    /// Policy radius for anchor neighbourhoods.
    pub dist_n: f64,
    /// Weight of the neighbourhood variance in the reliability score.
    pub alpha: f64,
    /// Bandwidth of the interpolation weights.
    pub h_beta: f64,
    /// A pursuit stops once `|J|` drops below this.
    pub eps_goal: f64,
    /// Executions allowed per goal.
    pub goal_budget: usize,
    /// Simplex evaluations allowed per local attempt, on top of the
    /// interpolated policy.
    pub nm_evals: usize,
    pub nm_pad_step: f64,
    /// Imitation episodes per demonstration.
    pub n_im: usize,
    /// Radius of imitation perturbations.
    pub eps_max: f64,
}

impl Default for PolicyExplorerConfig {
    fn default() -> Self {
        Self {
            h_max: 12,
            k_max: 8,
            dist_m: 0.3,
            dist_n: 0.3,
            alpha: 0.5,
            h_beta: 0.05,
            eps_goal: 0.05,
            goal_budget: 12,
            nm_evals: 3,
            nm_pad_step: 0.3,
            n_im: 5,
            eps_max: 0.4,
        }
    }
}

impl PolicyExplorerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("policy explorer: {what}")));
        if self.h_max == 0 || self.k_max == 0 {
            return bad("h_max and k_max must be positive");
        }
        if !(self.dist_m >= 0.0 && self.dist_n >= 0.0 && self.alpha >= 0.0) {
            return bad("radii and alpha must be non-negative");
        }
        if !(self.h_beta > 0.0) {
            return bad("h_beta must be positive");
        }
        if !(self.eps_goal >= 0.0 && self.eps_max >= 0.0 && self.nm_pad_step > 0.0) {
            return bad("eps_goal, eps_max must be non-negative and nm_pad_step positive");
        }
        if self.goal_budget == 0 || self.n_im == 0 {
            return bad("goal_budget and n_im must be at least 1");
        }
        Ok(())
    }
}

/// `min(1, D(reached, goal) / D(goal, origin))`, i.e. `|J|`. A goal sitting
/// exactly on the origin counts as fully missed unless reached exactly.
pub fn normalized_gap(goal: &Goal, reached: &Outcome, origin: &Outcome) -> f64 {
    let d = reached.distance(goal);
    let norm = goal.distance(origin);
    if norm > 0.0 {
        (d / norm).min(1.0)
    } else if d > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Probability of the global regime given the closest reached outcome.
pub fn global_probability(goal: &Goal, closest: &Outcome, origin: &Outcome) -> f64 {
    normalized_gap(goal, closest, origin)
}

/// The best-scoring anchor of a goal and its policy-space neighbourhood.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalityScore {
    pub anchor: Episode,
    /// Episodes within `dist_n` of the anchor's policy (anchor included),
    /// nearest first.
    pub neighbor_set: Vec<Episode>,
    /// Distance from the mean outcome of the neighbourhood to the goal.
    pub mean_outcome_distance: f64,
    /// Mean squared deviation of the neighbourhood outcomes from their centroid.
    pub variance: f64,
    pub score: f64,
}

/// Population variance of a set of 2-D points (sum over both axes).
pub fn outcome_variance<'a>(points: impl IntoIterator<Item = &'a Outcome>) -> f64 {
    let pts: Vec<&Outcome> = points.into_iter().collect();
    if pts.is_empty() {
        return 0.0;
    }
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / n;
    pts.iter().map(|p| (p.x - cx).powi(2) + (p.y - cy).powi(2)).sum::<f64>() / n
}

/// Centroid of a non-empty set of outcomes.
pub fn outcome_mean<'a>(points: impl IntoIterator<Item = &'a Outcome>) -> Outcome {
    let (mut x, mut y, mut n) = (0.0, 0.0, 0.0);
    for p in points {
        x += p.x;
        y += p.y;
        n += 1.0;
    }
    Outcome::new(x / n, y / n)
}

/// Picks the anchor minimizing `dist(mean tau of K_h, goal) + alpha * var_h`.
///
/// Each outcome in memory is a single noisy observation, so the
/// neighbourhood mean stands in for the anchor's own outcome.
pub fn local_data(goal: &Goal, memory: &Memory, config: &PolicyExplorerConfig) -> Result<LocalityScore> {
    let nearest = memory.nearest_outcomes(goal, config.h_max)?;
    let within: Vec<_> = nearest.iter().filter(|h| h.distance <= config.dist_m).copied().collect();
    let anchors = if within.is_empty() { nearest } else { within };

    let mut best: Option<(f64, usize, Vec<Episode>, f64, f64)> = None;
    for (i, anchor) in anchors.iter().enumerate() {
        let mut hood = memory.nearest_policies(&anchor.episode.params, config.dist_n);
        if !hood.iter().any(|h| h.episode.index == anchor.episode.index) {
            hood.insert(0, crate::memory::Hit {
                episode: anchor.episode,
                distance: 0.0,
            });
        }
        hood.truncate(config.k_max);
        let variance = outcome_variance(hood.iter().map(|h| &h.episode.outcome));
        let distance = outcome_mean(hood.iter().map(|h| &h.episode.outcome)).distance(goal);
        let score = distance + config.alpha * variance;
        if best.as_ref().is_none_or(|(s, ..)| score < *s) {
            best = Some((score, i, hood.iter().map(|h| h.episode.clone()).collect(), variance, distance));
        }
    }
    let (score, i, neighbor_set, variance, distance) = best.expect("memory is non-empty");
    Ok(LocalityScore {
        anchor: anchors[i].episode.clone(),
        neighbor_set,
        mean_outcome_distance: distance,
        variance,
        score,
    })
}

/// Gaussian-weighted average of the neighbourhood policies around `goal`.
pub fn infer_policy(goal: &Goal, locality: &LocalityScore, h_beta: f64) -> PolicyParams {
    let set = &locality.neighbor_set;
    if set.is_empty() {
        return locality.anchor.params;
    }
    let d2: Vec<f64> = set.iter().map(|e| e.outcome.distance_sq(goal)).collect();
    let min = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = d2.iter().map(|d| (-(d - min) / (2.0 * h_beta * h_beta)).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut out = [0.0; PARAM_DIM];
    for (e, w) in set.iter().zip(&weights) {
        for (o, v) in out.iter_mut().zip(e.params.values()) {
            *o += w / total * v;
        }
    }
    clamp_params(&out)
}

/// Memory-based inverse model: the policy predicted to reach `goal`.
pub fn inverse_model(goal: &Goal, memory: &Memory, config: &PolicyExplorerConfig) -> Result<PolicyParams> {
    Ok(infer_policy(goal, &local_data(goal, memory, config)?, config.h_beta))
}

/// Uniform policy in the parameter box.
pub fn global_explore(rng: &mut Rng) -> PolicyParams {
    Environment::random_policy(rng)
}

/// A vector of norm strictly below `radius`, uniform direction and radius.
pub fn ball_perturbation(radius: f64, rng: &mut Rng) -> [f64; PARAM_DIM] {
    if radius <= 0.0 {
        return [0.0; PARAM_DIM];
    }
    let dir: [f64; PARAM_DIM] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let r = radius * rng.random::<f64>();
    if norm == 0.0 {
        return [0.0; PARAM_DIM];
    }
    dir.map(|v| v / norm * r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Global,
    Local,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Global => "global",
            Regime::Local => "local",
        }
    }
}

/// One execution made while pursuing a goal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PursuitStep {
    pub episode_index: u64,
    pub outcome: Outcome,
    pub regime: Regime,
    /// Index of the regime draw this execution belongs to.
    pub attempt: usize,
    pub p_glob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pursuit {
    pub goal: Goal,
    pub steps: Vec<PursuitStep>,
    /// Best `J` over the pursuit.
    pub competence: f64,
}

/// Owns the random streams of the policy level.
#[derive(Debug, Clone)]
pub struct PolicyExplorer {
    config: PolicyExplorerConfig,
    regime_rng: Rng,
    policy_rng: Rng,
}

impl PolicyExplorer {
    pub fn new(config: PolicyExplorerConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            regime_rng: rng::stream(seed, streams::REGIME),
            policy_rng: rng::stream(seed, streams::POLICY),
        })
    }

    pub fn config(&self) -> &PolicyExplorerConfig {
        &self.config
    }

    pub fn policy_rng(&mut self) -> &mut Rng {
        &mut self.policy_rng
    }

    /// Pursues `goal` for at most `budget` executions, recording every
    /// execution in `memory` as autonomous.
    pub fn goal_directed_optimization(
        &mut self,
        goal: &Goal,
        memory: &mut Memory,
        env: &mut Environment,
        budget: usize,
    ) -> Result<Pursuit> {
        if budget == 0 {
            return Err(Error::Config("goal budget must be at least 1".into()));
        }
        let origin = env.rest_outcome();
        let cfg = self.config;
        let mut steps: Vec<PursuitStep> = Vec::new();
        let mut best_gap = f64::INFINITY;
        let mut attempt = 0;
        while steps.len() < budget && !(best_gap < cfg.eps_goal) {
            let p_glob = match memory.closest_outcome(goal) {
                Ok(hit) => global_probability(goal, &hit.episode.outcome, &origin),
                Err(Error::EmptyMemory) => 1.0,
                Err(e) => return Err(e),
            };
            let u: f64 = self.regime_rng.random();
            let regime = if u < p_glob { Regime::Global } else { Regime::Local };
            let remaining = budget - steps.len();
            let mut record = |memory: &mut Memory, env: &mut Environment, params: PolicyParams| {
                let outcome = env.execute(&params);
                let index = memory.push(params, outcome, StrategyTag::Autonomous).index;
                let gap = normalized_gap(goal, &outcome, &origin);
                steps.push(PursuitStep {
                    episode_index: index,
                    outcome,
                    regime,
                    attempt,
                    p_glob,
                });
                (gap, outcome.distance(goal))
            };
            match regime {
                Regime::Global => {
                    let params = global_explore(&mut self.policy_rng);
                    best_gap = best_gap.min(record(memory, env, params).0);
                }
                Regime::Local => {
                    let locality = local_data(goal, memory, &cfg)?;
                    let theta_g = infer_policy(goal, &locality, cfg.h_beta);
                    let (gap, dist) = record(memory, env, theta_g);
                    best_gap = best_gap.min(gap);
                    let extra = cfg.nm_evals.min(remaining - 1);
                    if extra > 0 && !(best_gap < cfg.eps_goal) {
                        let norm = goal.distance(&origin);
                        let seeds: Vec<Seed> = locality
                            .neighbor_set
                            .iter()
                            .map(|e| Seed::known(e.params.values().to_vec(), e.outcome.distance(goal)))
                            .collect();
                        let mut axes: Vec<usize> = (0..PARAM_DIM).collect();
                        axes.shuffle(&mut self.policy_rng);
                        let opts = NelderMeadOptions {
                            max_evals: extra,
                            tol: cfg.eps_goal * norm,
                            pad_step: cfg.nm_pad_step,
                            pad_axes: Some(axes),
                            ..NelderMeadOptions::default()
                        };
                        let init = Seed::known(theta_g.values().to_vec(), dist);
                        let mut objective = |x: &[f64]| {
                            let params = PolicyParams::new(x).unwrap_or_else(|_| {
                                clamp_params(&std::array::from_fn(|i| x[i]))
                            });
                            let (g, d) = record(memory, env, params);
                            best_gap = best_gap.min(g);
                            d
                        };
                        nelder_mead::nelder_mead(&mut objective, init, &seeds, &opts)?;
                    }
                }
            }
            attempt += 1;
        }
        Ok(Pursuit {
            goal: *goal,
            steps,
            competence: -best_gap,
        })
    }

    /// Executes `n_im` perturbed copies of a demonstrated policy, tagged as
    /// imitation. Returns the indices and outcomes of the new episodes.
    pub fn imitate_policy(
        &mut self,
        theta_d: &PolicyParams,
        memory: &mut Memory,
        env: &mut Environment,
        n_im: usize,
        eps_max: f64,
    ) -> Vec<(u64, PolicyParams, Outcome)> {
        (0..n_im)
            .map(|_| {
                let delta = ball_perturbation(eps_max, &mut self.policy_rng);
                let raw: [f64; PARAM_DIM] = std::array::from_fn(|i| theta_d.values()[i] + delta[i]);
                let params = clamp_params(&raw);
                let outcome = env.execute(&params);
                let index = memory.push(params, outcome, StrategyTag::Imitation).index;
                (index, params, outcome)
            })
            .collect()
    }
}
