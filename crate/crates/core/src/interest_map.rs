//! Competence, interest and the recursive partition of the task space.
//!
//! Each leaf region keeps the time-ordered competences of the goals pursued
//! inside it. Its interest is the absolute competence progress over the last
//! `window` entries. A leaf holding more than `g_max` goals is cut in two
//! along the axis-aligned cut that best separates the interest of the halves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Goal, Outcome, Rect};

/// Similarity of a reached outcome to a goal, normalized by the distance from
/// the rest outcome to the goal: `-min(1, D(reached, goal) / D(goal, origin))`.
pub fn similarity(goal: &Goal, reached: &Outcome, origin: &Outcome) -> Result<f64> {
    let norm = goal.distance(origin);
    if !(norm > 0.0) {
        return Err(Error::DegenerateGoal);
    }
    Ok(-(reached.distance(goal) / norm).min(1.0))
}

/// Best (closest to zero) similarity among the attempts at `goal`.
pub fn competence<'a>(
    goal: &Goal,
    attempts: impl IntoIterator<Item = &'a Outcome>,
    origin: &Outcome,
) -> Result<f64> {
    let mut best: Option<f64> = None;
    for reached in attempts {
        let j = similarity(goal, reached, origin)?;
        best = Some(best.map_or(j, |b| b.max(j)));
    }
    best.ok_or(Error::MissingAttempts)
}

/// Absolute competence progress of a window (oldest first).
///
/// Windows shorter than `zeta` are front-padded with their oldest value;
/// longer ones are cut to their newest `zeta` entries.
pub fn interest_of(history: &[f64], zeta: usize) -> Result<f64> {
    if zeta == 0 || !zeta.is_multiple_of(2) {
        return Err(Error::Config(format!("interest window must be positive and even, got {zeta}")));
    }
    if history.is_empty() {
        return Ok(0.0);
    }
    let recent = &history[history.len().saturating_sub(zeta)..];
    let pad = zeta - recent.len();
    let value = |k: usize| if k < pad { recent[0] } else { recent[k - pad] };
    let half = zeta / 2;
    let older: f64 = (0..half).map(value).sum();
    let newer: f64 = (half..zeta).map(value).sum();
    Ok((older - newer).abs() / zeta as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InterestConfig {
    /// Sliding window length (even).
    pub window: usize,
    /// A leaf splits once it holds more than this many goals.
    pub g_max: usize,
}

impl Default for InterestConfig {
    fn default() -> Self {
        Self { window: 10, g_max: 30 }
    }
}

impl InterestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || !self.window.is_multiple_of(2) {
            return Err(Error::Config(format!("window must be positive and even, got {}", self.window)));
        }
        if self.g_max < self.window {
            return Err(Error::Config("g_max must be at least the window length".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub goal: Goal,
    pub competence: f64,
}

pub type RegionId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: RegionId,
    pub bounds: Rect,
    /// Pursued goals in attempt order.
    pub history: Vec<Attempt>,
    pub interest: f64,
}

impl Region {
    fn competences(&self) -> Vec<f64> {
        self.history.iter().map(|a| a.competence).collect()
    }

    /// The stored goal with the lowest competence (earliest on ties).
    pub fn weakest_goal(&self) -> Option<Goal> {
        self.history
            .iter()
            .fold(None::<&Attempt>, |acc, a| match acc {
                Some(b) if b.competence <= a.competence => Some(b),
                _ => Some(a),
            })
            .map(|a| a.goal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum NodeKind {
    Leaf(Region),
    Inner { dim: usize, cut: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Node {
    bounds: Rect,
    kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub parent: RegionId,
    pub dim: usize,
    pub cut: f64,
    pub left: RegionId,
    pub right: RegionId,
}

/// Outcome of choosing a cut for an overfull region.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDecision {
    pub dim: usize,
    pub cut: f64,
    pub left: (Rect, Vec<Attempt>),
    pub right: (Rect, Vec<Attempt>),
    /// `|interest(left) - interest(right)|`; `None` for the midpoint fallback.
    pub score: Option<f64>,
}

/// Number of quantile cut positions tried per axis.
pub const CUT_QUANTILES: usize = 9;

/// Chooses the cut of `region` maximizing the interest difference of the
/// two sides, each side keeping at least `window / 2` goals. Ties go to the
/// more balanced cut, then to the lower axis. Without a feasible cut the
/// region is halved on axis 0.
pub fn split_region(region: &Region, config: &InterestConfig) -> Result<SplitDecision> {
    let zeta = config.window;
    let min_side = zeta / 2;
    let n = region.history.len();
    let partition = |dim: usize, cut: f64| -> (Vec<Attempt>, Vec<Attempt>) {
        region.history.iter().partition(|a| a.goal.coord(dim) < cut)
    };
    let mut best: Option<(f64, usize, usize, f64)> = None; // score, imbalance, dim, cut
    for dim in 0..2 {
        let mut coords: Vec<f64> = region.history.iter().map(|a| a.goal.coord(dim)).collect();
        coords.sort_by(f64::total_cmp);
        for k in 1..=CUT_QUANTILES {
            let i = (k * n / (CUT_QUANTILES + 1)).clamp(1, n.max(2) - 1);
            if i >= coords.len() {
                continue;
            }
            let cut = 0.5 * (coords[i - 1] + coords[i]);
            if !(cut > region.bounds.lo(dim) && cut < region.bounds.hi(dim)) {
                continue;
            }
            let (l, r) = partition(dim, cut);
            if l.len() < min_side || r.len() < min_side {
                continue;
            }
            let il = interest_of(&l.iter().map(|a| a.competence).collect::<Vec<_>>(), zeta)?;
            let ir = interest_of(&r.iter().map(|a| a.competence).collect::<Vec<_>>(), zeta)?;
            let score = (il - ir).abs();
            let imbalance = l.len().abs_diff(r.len());
            let better = match best {
                None => true,
                Some((bs, bi, _, _)) => score > bs || (score == bs && imbalance < bi),
            };
            if better {
                best = Some((score, imbalance, dim, cut));
            }
        }
    }
    let (dim, cut, score) = match best {
        Some((score, _, dim, cut)) => (dim, cut, Some(score)),
        None => (0, region.bounds.center().x, None),
    };
    let (l, r) = partition(dim, cut);
    let (lb, rb) = region.bounds.split(dim, cut);
    Ok(SplitDecision {
        dim,
        cut,
        left: (lb, l),
        right: (rb, r),
        score,
    })
}

/// Recursive partition of the task space into interest regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionTree {
    config: InterestConfig,
    nodes: Vec<Node>,
    splits: Vec<SplitRecord>,
}

/// Plot-ready summary of one leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSnapshot {
    pub bounds: Rect,
    pub interest: f64,
    pub n_goals: usize,
}

impl RegionTree {
    /// A single region covering `bounds`.
    pub fn new(bounds: Rect, config: InterestConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            nodes: vec![Node {
                bounds,
                kind: NodeKind::Leaf(Region {
                    id: 0,
                    bounds,
                    history: Vec::new(),
                    interest: 0.0,
                }),
            }],
            splits: Vec::new(),
        })
    }

    pub fn bounds(&self) -> Rect {
        self.nodes[0].bounds
    }

    pub fn config(&self) -> &InterestConfig {
        &self.config
    }

    pub fn split_log(&self) -> &[SplitRecord] {
        &self.splits
    }

    /// Current leaves in creation order.
    pub fn leaves(&self) -> impl Iterator<Item = &Region> {
        self.nodes.iter().filter_map(|n| match &n.kind {
            NodeKind::Leaf(r) => Some(r),
            NodeKind::Inner { .. } => None,
        })
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().count()
    }

    pub fn region(&self, id: RegionId) -> Option<&Region> {
        match &self.nodes.get(id)?.kind {
            NodeKind::Leaf(r) => Some(r),
            NodeKind::Inner { .. } => None,
        }
    }

    /// Leaf containing `p` (points on a cut belong to the upper side).
    pub fn locate(&self, p: &Outcome) -> Result<RegionId> {
        if !self.bounds().contains(p) {
            return Err(Error::OutOfBounds { x: p.x, y: p.y });
        }
        let mut id = 0;
        loop {
            match &self.nodes[id].kind {
                NodeKind::Leaf(_) => return Ok(id),
                NodeKind::Inner { dim, cut, left, right } => {
                    id = if p.coord(*dim) < *cut { *left } else { *right };
                }
            }
        }
    }

    /// Appends a competence to the leaf containing `goal`, refreshes its
    /// interest and splits it when it overflows.
    pub fn update(&mut self, goal: &Goal, competence: f64) -> Result<Option<SplitRecord>> {
        let id = self.locate(goal)?;
        let zeta = self.config.window;
        let region = match &mut self.nodes[id].kind {
            NodeKind::Leaf(r) => r,
            NodeKind::Inner { .. } => unreachable!("locate returns leaves"),
        };
        region.history.push(Attempt {
            goal: *goal,
            competence,
        });
        region.interest = interest_of(&region.competences(), zeta)?;
        if region.history.len() <= self.config.g_max {
            return Ok(None);
        }
        let decision = split_region(region, &self.config)?;
        let left = self.nodes.len();
        let right = left + 1;
        for (child, (bounds, history)) in [(left, decision.left), (right, decision.right)] {
            let competences: Vec<f64> = history.iter().map(|a| a.competence).collect();
            let interest = interest_of(&competences, zeta)?;
            self.nodes.push(Node {
                bounds,
                kind: NodeKind::Leaf(Region {
                    id: child,
                    bounds,
                    history,
                    interest,
                }),
            });
        }
        self.nodes[id].kind = NodeKind::Inner {
            dim: decision.dim,
            cut: decision.cut,
            left,
            right,
        };
        let record = SplitRecord {
            parent: id,
            dim: decision.dim,
            cut: decision.cut,
            left,
            right,
        };
        self.splits.push(record);
        Ok(Some(record))
    }

    pub fn snapshot(&self) -> Vec<RegionSnapshot> {
        self.leaves()
            .map(|r| RegionSnapshot {
                bounds: r.bounds,
                interest: r.interest,
                n_goals: r.history.len(),
            })
            .collect()
    }

    pub fn snapshot_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.snapshot())?)
    }

    pub fn total_goals(&self) -> usize {
        self.leaves().map(|r| r.history.len()).sum()
    }
}
