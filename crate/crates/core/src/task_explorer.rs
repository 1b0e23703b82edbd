//! Goal selection over the interest map, and emulation of demonstrated
//! outcomes as goals.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Goal, Outcome, Rect};
use crate::interest_map::{RegionId, RegionTree};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalMode {
    /// Uniform goal in a region drawn in proportion to its interest.
    M1Interest,
    /// Uniform goal in the whole task space.
    M2Uniform,
    /// Goal near the weakest goal of a region drawn by interest.
    M3Refine,
    /// Outcome of a demonstration, adopted as a goal.
    Emulated,
}

impl GoalMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            GoalMode::M1Interest => "m1_interest",
            GoalMode::M2Uniform => "m2_uniform",
            GoalMode::M3Refine => "m3_refine",
            GoalMode::Emulated => "emulated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalChoice {
    pub goal: Goal,
    pub mode: GoalMode,
    pub source_region: Option<RegionId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskExplorerConfig {
    /// Probabilities of modes 1, 2 and 3.
    pub mode_weights: [f64; 3],
    /// Refinement radius as a fraction of the task-space diagonal.
    pub refine_fraction: f64,
}

impl Default for TaskExplorerConfig {
    fn default() -> Self {
        Self {
            mode_weights: [0.7, 0.2, 0.1],
            refine_fraction: 0.05,
        }
    }
}

impl TaskExplorerConfig {
    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.mode_weights.iter().sum();
        if self.mode_weights.iter().any(|w| !(*w >= 0.0)) || !(total > 0.0) {
            return Err(Error::Config("goal mode weights must be non-negative with a positive sum".into()));
        }
        if !(self.refine_fraction >= 0.0) {
            return Err(Error::Config("refine fraction must be non-negative".into()));
        }
        Ok(())
    }
}

/// Selection probabilities of the leaves (in `RegionTree::leaves` order):
/// `(interest_n - min) / sum_i (interest_i - min)`, or uniform when every
/// interest is equal.
pub fn region_probabilities(interests: &[f64]) -> Vec<f64> {
    if interests.is_empty() {
        return Vec::new();
    }
    let min = interests.iter().copied().fold(f64::INFINITY, f64::min);
    let excess: Vec<f64> = interests.iter().map(|i| i - min).collect();
    let total: f64 = excess.iter().sum();
    if total > 0.0 {
        excess.into_iter().map(|e| e / total).collect()
    } else {
        vec![1.0 / interests.len() as f64; interests.len()]
    }
}

fn uniform_in(rect: &Rect, rng: &mut Rng) -> Outcome {
    Outcome::new(
        rect.min.x + rng.random::<f64>() * rect.width(0),
        rect.min.y + rng.random::<f64>() * rect.width(1),
    )
}

fn sample_index(probabilities: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in probabilities.iter().enumerate() {
        if *p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc && *p > 0.0 {
            return i;
        }
    }
    last_positive
}

fn pick_region(tree: &RegionTree, rng: &mut Rng) -> (RegionId, Rect, Option<Goal>) {
    let leaves: Vec<_> = tree.leaves().collect();
    let probs = region_probabilities(&leaves.iter().map(|r| r.interest).collect::<Vec<_>>());
    let r = leaves[sample_index(&probs, rng)];
    (r.id, r.bounds, r.weakest_goal())
}

/// Draws the next self-generated goal.
pub fn decide_goal(tree: &RegionTree, config: &TaskExplorerConfig, rng: &mut Rng) -> GoalChoice {
    let space = tree.bounds();
    let mode = match sample_index(&normalized(&config.mode_weights), rng) {
        0 => GoalMode::M1Interest,
        1 => GoalMode::M2Uniform,
        _ => GoalMode::M3Refine,
    };
    match mode {
        GoalMode::M2Uniform => GoalChoice {
            goal: uniform_in(&space, rng),
            mode,
            source_region: None,
        },
        GoalMode::M1Interest => {
            let (id, bounds, _) = pick_region(tree, rng);
            GoalChoice {
                goal: uniform_in(&bounds, rng),
                mode,
                source_region: Some(id),
            }
        }
        _ => {
            let (id, bounds, weakest) = pick_region(tree, rng);
            let goal = match weakest {
                Some(center) => {
                    let radius = config.refine_fraction * space.diameter();
                    let r = radius * rng.random::<f64>().sqrt();
                    let a = std::f64::consts::TAU * rng.random::<f64>();
                    space.clip(&Outcome::new(center.x + r * a.cos(), center.y + r * a.sin()))
                }
                None => uniform_in(&bounds, rng),
            };
            GoalChoice {
                goal,
                mode,
                source_region: Some(id),
            }
        }
    }
}

fn normalized(w: &[f64; 3]) -> [f64; 3] {
    let total: f64 = w.iter().sum();
    w.map(|x| x / total)
}

/// Adopts a demonstrated outcome as the current goal, clipped into the task space.
pub fn emulate_goal(demo_outcome: &Outcome, space: &Rect) -> GoalChoice {
    GoalChoice {
        goal: space.clip(demo_outcome),
        mode: GoalMode::Emulated,
        source_region: None,
    }
}
