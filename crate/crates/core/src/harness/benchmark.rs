//! Benchmark goals spread evenly over the reachable part of the task space,
//! and the one-shot evaluation of a memory against them.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::geometry::{Goal, Outcome, Rect, TileGrid};
use crate::memory::Memory;
use crate::policy_explorer::{inverse_model, PolicyExplorerConfig};
use crate::rng::{self, streams};

/// Preferred number of benchmark points.
pub const TARGET_POINTS: usize = 358;
pub const POINT_RANGE: (usize, usize) = (300, 400);
pub const MIN_OCCUPIED: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSet {
    pub points: Vec<Goal>,
    pub seed: u64,
    /// Tiles per side of the grid laid over `reachable`.
    pub resolution: usize,
    /// Bounding box of the probed outcomes inside the task space.
    pub reachable: Rect,
}

impl BenchmarkSet {
    pub fn grid(&self) -> TileGrid {
        TileGrid::new(self.reachable, self.resolution)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Noise-free landings of `n_probe` uniformly random policies.
pub fn probe_reachable(env: &Environment, n_probe: usize, seed: u64) -> Vec<Outcome> {
    let mut rng = rng::stream(seed, streams::BENCH);
    (0..n_probe)
        .map(|_| env.throw_policy(&Environment::random_policy(&mut rng)).landing)
        .collect()
}

pub fn bounding_box(points: &[Outcome]) -> Option<Rect> {
    let first = points.first()?;
    let mut r = Rect::new(first.x, first.y, first.x, first.y);
    for p in points {
        r.min.x = r.min.x.min(p.x);
        r.min.y = r.min.y.min(p.y);
        r.max.x = r.max.x.max(p.x);
        r.max.y = r.max.y.max(p.y);
    }
    Some(r)
}

fn occupied_tiles(grid: &TileGrid, points: &[Outcome]) -> Vec<usize> {
    let mut seen = vec![false; grid.len()];
    for p in points {
        if let Some(t) = grid.tile_of(p) {
            seen[t] = true;
        }
    }
    (0..grid.len()).filter(|&t| seen[t]).collect()
}

/// Probes the reachable set, tiles its bounding box (within `space`) and
/// draws one uniform point per occupied tile. Without an explicit `resolution`, the one whose
/// occupied-tile count is closest to [`TARGET_POINTS`] is used.
pub fn generate_benchmark(
    env: &Environment,
    space: &Rect,
    n_probe: usize,
    resolution: Option<usize>,
    seed: u64,
) -> Result<BenchmarkSet> {
    let probes: Vec<Outcome> = probe_reachable(env, n_probe, seed)
        .into_iter()
        .filter(|p| space.contains(p))
        .collect();
    let reachable = bounding_box(&probes).ok_or_else(|| Error::Resolution("no probes".into()))?;
    if !(reachable.area() > 0.0) {
        return Err(Error::Resolution("reachable set is degenerate".into()));
    }
    let resolution = match resolution {
        Some(n) if n > 0 => n,
        Some(_) => return Err(Error::Resolution("resolution must be positive".into())),
        None => (4..=200)
            .map(|n| (n, occupied_tiles(&TileGrid::new(reachable, n), &probes).len()))
            .min_by_key(|&(n, c)| (c.abs_diff(TARGET_POINTS), n))
            .map(|(n, _)| n)
            .expect("non-empty range"),
    };
    let grid = TileGrid::new(reachable, resolution);
    let tiles = occupied_tiles(&grid, &probes);
    if tiles.len() < MIN_OCCUPIED {
        return Err(Error::Resolution(format!(
            "only {} occupied tiles at resolution {resolution}",
            tiles.len()
        )));
    }
    let mut rng = rng::stream(seed, streams::BENCH ^ 0x100);
    let points = tiles
        .into_iter()
        .map(|t| {
            let r = grid.tile_rect(t);
            Outcome::new(
                r.min.x + rng.random::<f64>() * r.width(0),
                r.min.y + rng.random::<f64>() * r.width(1),
            )
        })
        .collect();
    Ok(BenchmarkSet {
        points,
        seed,
        resolution,
        reachable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub mean_error: f64,
    pub errors: Vec<f64>,
}

/// Asks the memory-based inverse model for every benchmark goal and
/// executes the answer once on a private copy of `env`. The memory is only
/// read.
pub fn evaluate(
    memory: &Memory,
    bench: &BenchmarkSet,
    env: &Environment,
    policy: &PolicyExplorerConfig,
    seed: u64,
) -> Result<Evaluation> {
    if memory.is_empty() {
        return Err(Error::EmptyMemory);
    }
    let mut env = env.reseeded(rng::derive(seed, streams::EVAL));
    let errors = bench
        .points
        .iter()
        .map(|g| {
            let params = inverse_model(g, memory, policy)?;
            Ok(env.execute(&params).distance(g))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean_error = errors.iter().sum::<f64>() / errors.len().max(1) as f64;
    Ok(Evaluation { mean_error, errors })
}
