//! Scripted demonstrators and the choice of which demonstration to show.
//!
//! Demonstrators 1 and 2 hand out `(theta, tau)` exemplars from the memory of
//! an autonomous learner, picked at random or for their reproducibility.
//! Demonstrator 3 produces raw joint trajectories that all follow one smooth
//! monotone profile, the way a person moving the arm by hand tends to, so
//! the learner has to solve the correspondence problem before imitating.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::warn;
use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::geometry::{Outcome, Rect, TileGrid};
use crate::memory::Memory;
use crate::policy_explorer::outcome_variance;
use crate::primitives::{
    sample_times, JointTrajectory, PolicyParams, RawDemonstration, DELTA_MAX, DELTA_MIN, N_JOINTS, PARAM_DIM,
};
use crate::rng::Rng;

/// Resolution of the teaching tiles.
pub const TEACHING_TILES: usize = 8;
/// Size of demonstrator 1's set.
pub const RANDOM_SET_SIZE: usize = 127;
/// Samples per joint in synthesized raw demonstrations.
pub const RAW_SAMPLES: usize = 100;
/// Farthest a synthesized demonstration may land from its target.
pub const TARGET_TOLERANCE: f64 = 0.3;

/// Teaching tiles over `[-1, 1]^2`.
pub fn teaching_grid() -> TileGrid {
    TileGrid::new(Rect::square(1.0), TEACHING_TILES)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    RandomExemplars,
    ReliableExemplars,
    HumanLike,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::RandomExemplars => "random_exemplars",
            Provenance::ReliableExemplars => "reliable_exemplars",
            Provenance::HumanLike => "human_like",
        }
    }

    pub fn demonstrator(&self) -> u8 {
        match self {
            Provenance::RandomExemplars => 1,
            Provenance::ReliableExemplars => 2,
            Provenance::HumanLike => 3,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Self::RandomExemplars, Self::ReliableExemplars, Self::HumanLike]
            .into_iter()
            .find(|p| p.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Demonstration {
    Pair { params: PolicyParams, outcome: Outcome },
    Raw(RawDemonstration),
}

impl Demonstration {
    pub fn outcome(&self) -> Outcome {
        match self {
            Demonstration::Pair { outcome, .. } => *outcome,
            Demonstration::Raw(raw) => raw.outcome,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemonstrationSet {
    entries: Vec<Demonstration>,
    provenance: Provenance,
}

impl DemonstrationSet {
    pub fn new(entries: Vec<Demonstration>, provenance: Provenance) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Demonstrations("a demonstration set cannot be empty".into()));
        }
        if entries.iter().any(|e| !e.outcome().is_finite()) {
            return Err(Error::Demonstrations("demonstrated outcomes must be finite".into()));
        }
        Ok(Self { entries, provenance })
    }

    pub fn entries(&self) -> &[Demonstration] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Pair sets are written as CSV (`source,theta1..theta25,tau_x,tau_y`),
    /// raw sets as a directory of `demo_NNN.txt` files plus `source.txt`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let raw: Vec<&RawDemonstration> = self
            .entries
            .iter()
            .filter_map(|e| match e {
                Demonstration::Raw(r) => Some(r),
                _ => None,
            })
            .collect();
        if !raw.is_empty() {
            if raw.len() != self.entries.len() {
                return Err(Error::Demonstrations("cannot save a mixed demonstration set".into()));
            }
            fs::create_dir_all(path)?;
            fs::write(path.join("source.txt"), format!("{}\n", self.provenance.as_str()))?;
            for (i, r) in raw.iter().enumerate() {
                r.save(&path.join(format!("demo_{i:03}.txt")))?;
            }
            return Ok(());
        }
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e.to_string()))?;
        let mut header = vec!["source".to_string()];
        header.extend((1..=PARAM_DIM).map(|i| format!("theta{i}")));
        header.extend(["tau_x".to_string(), "tau_y".to_string()]);
        w.write_record(&header).map_err(|e| Error::parse(path, e.to_string()))?;
        for e in &self.entries {
            if let Demonstration::Pair { params, outcome } = e {
                let mut row = vec![self.provenance.as_str().to_string()];
                row.extend(params.values().iter().map(|v| v.to_string()));
                row.extend([outcome.x.to_string(), outcome.y.to_string()]);
                w.write_record(&row).map_err(|e| Error::parse(path, e.to_string()))?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if path.is_dir() {
            let source = fs::read_to_string(path.join("source.txt")).unwrap_or_default();
            let provenance = Provenance::parse(source.trim()).unwrap_or(Provenance::HumanLike);
            let mut files: Vec<_> = fs::read_dir(path)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("demo_") && n.ends_with(".txt"))
                })
                .collect();
            files.sort();
            let entries = files
                .iter()
                .map(|f| RawDemonstration::load(f).map(Demonstration::Raw))
                .collect::<Result<Vec<_>>>()?;
            return Self::new(entries, provenance);
        }
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e.to_string()))?;
        let mut provenance = None;
        let mut entries = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::parse(path, e.to_string()))?;
            if rec.len() != PARAM_DIM + 3 {
                return Err(Error::parse(path, format!("row {}: expected {} fields", line + 1, PARAM_DIM + 3)));
            }
            let p = Provenance::parse(&rec[0])
                .ok_or_else(|| Error::parse(path, format!("row {}: unknown source {:?}", line + 1, &rec[0])))?;
            provenance.get_or_insert(p);
            let nums = rec
                .iter()
                .skip(1)
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(path, format!("row {}: {e}", line + 1)))?;
            entries.push(Demonstration::Pair {
                params: PolicyParams::new(&nums[..PARAM_DIM])?,
                outcome: Outcome::new(nums[PARAM_DIM], nums[PARAM_DIM + 1]),
            });
        }
        Self::new(entries, provenance.unwrap_or(Provenance::RandomExemplars))
    }
}

/// 127 exemplars drawn uniformly without replacement from a memory.
pub fn build_demonstrator1(memory: &Memory, rng: &mut Rng) -> Result<DemonstrationSet> {
    if memory.len() < RANDOM_SET_SIZE {
        return Err(Error::Demonstrations(format!(
            "need at least {RANDOM_SET_SIZE} exemplars, memory holds {}",
            memory.len()
        )));
    }
    let mut picks = index::sample(rng, memory.len(), RANDOM_SET_SIZE).into_vec();
    picks.sort_unstable();
    let entries = picks
        .into_iter()
        .map(|i| {
            let e = &memory.episodes()[i];
            Demonstration::Pair {
                params: e.params,
                outcome: e.outcome,
            }
        })
        .collect();
    DemonstrationSet::new(entries, Provenance::RandomExemplars)
}

/// Re-execution statistics of one tile's candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct TileSelection {
    pub tile: usize,
    /// Memory indices of the candidates with their measured outcome variance.
    pub candidates: Vec<(u64, f64)>,
    pub kept: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliableSet {
    pub set: DemonstrationSet,
    pub selections: Vec<TileSelection>,
}

/// Per tile of `grid`, re-executes up to `max_candidates` exemplars
/// `k_rep` times each and keeps the one with the least outcome variance.
pub fn build_demonstrator2(
    memory: &Memory,
    env: &mut Environment,
    grid: &TileGrid,
    k_rep: usize,
    max_candidates: usize,
    rng: &mut Rng,
) -> Result<ReliableSet> {
    if k_rep < 5 {
        return Err(Error::Config(format!("k_rep must be at least 5, got {k_rep}")));
    }
    if max_candidates == 0 {
        return Err(Error::Config("need at least one candidate per tile".into()));
    }
    if memory.is_empty() {
        return Err(Error::EmptyMemory);
    }
    let mut by_tile: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (pos, e) in memory.episodes().iter().enumerate() {
        if let Some(t) = grid.tile_of(&e.outcome) {
            by_tile.entry(t).or_default().push(pos);
        }
    }
    let mut entries = Vec::new();
    let mut selections = Vec::new();
    for (tile, members) in by_tile {
        let chosen: Vec<usize> = if members.len() <= max_candidates {
            members
        } else {
            let mut picks = index::sample(rng, members.len(), max_candidates).into_vec();
            picks.sort_unstable();
            picks.into_iter().map(|i| members[i]).collect()
        };
        let mut candidates = Vec::with_capacity(chosen.len());
        let mut best: Option<(f64, usize)> = None;
        for pos in chosen {
            let e = &memory.episodes()[pos];
            let runs: Vec<Outcome> = (0..k_rep).map(|_| env.execute(&e.params)).collect();
            let var = outcome_variance(&runs);
            candidates.push((e.index, var));
            if best.is_none_or(|(v, _)| var < v) {
                best = Some((var, pos));
            }
        }
        let (_, pos) = best.expect("tile has members");
        let e = &memory.episodes()[pos];
        entries.push(Demonstration::Pair {
            params: e.params,
            outcome: e.outcome,
        });
        selections.push(TileSelection {
            tile,
            candidates,
            kept: e.index,
        });
    }
    Ok(ReliableSet {
        set: DemonstrationSet::new(entries, Provenance::ReliableExemplars)?,
        selections,
    })
}

/// Fraction of a demonstration's duration, centred, over which the shared
/// profile moves; the joints hold still before and after, like a cast.
pub const CAST_WINDOW: f64 = 0.25;

/// Minimum-jerk position profile on `[0, 1]`.
pub fn min_jerk(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

/// Shared time profile of the human-like movements: a minimum-jerk rise
/// squeezed into the central [`CAST_WINDOW`] of the normalized time.
pub fn cast_profile(s: f64) -> f64 {
    min_jerk((s - 0.5 * (1.0 - CAST_WINDOW)) / CAST_WINDOW)
}

/// Every joint moves from the rest value 0.5 to its final value along the
/// shared profile.
pub fn human_like_movement(finals: &[f64; N_JOINTS], delta: f64, n: usize) -> Result<Vec<JointTrajectory>> {
    let times = sample_times(delta, n);
    (0..N_JOINTS)
        .map(|j| {
            let values = times.iter().map(|&t| 0.5 + (finals[j] - 0.5) * cast_profile(t / delta)).collect();
            JointTrajectory::new(j, times.clone(), values)
        })
        .collect()
}

/// Random search over final joint values and durations; for
/// every tile of `targets`, keeps the candidate landing nearest the tile
/// centre (preferring ones that land inside the tile). Tiles with nothing
/// within [`TARGET_TOLERANCE`] are skipped; a candidate serves one tile at
/// most.
pub fn build_demonstrator3(
    env: &Environment,
    targets: &TileGrid,
    n_search: usize,
    rng: &mut Rng,
) -> Result<DemonstrationSet> {
    type Candidate = ([f64; N_JOINTS], f64, Outcome);
    let mut pool: Vec<Candidate> = Vec::with_capacity(n_search);
    for _ in 0..n_search {
        let finals: [f64; N_JOINTS] = std::array::from_fn(|_| rng.random::<f64>());
        let delta = DELTA_MIN + (DELTA_MAX - DELTA_MIN) * rng.random::<f64>();
        let tr = human_like_movement(&finals, delta, RAW_SAMPLES)?;
        let landing = env.throw_trajectories(&tr, delta).landing;
        pool.push((finals, delta, landing));
    }
    let mut entries = Vec::new();
    let mut used = vec![false; pool.len()];
    let mut skipped = 0;
    for tile in 0..targets.len() {
        let rect = targets.tile_rect(tile);
        let center = rect.center();
        let key = |o: &Outcome| (!rect.contains(o), o.distance(&center));
        let Some((i, (finals, delta, landing))) = pool
            .iter()
            .enumerate()
            .filter(|(i, c)| !used[*i] && c.2.distance(&center) <= TARGET_TOLERANCE)
            .min_by(|a, b| key(&a.1 .2).partial_cmp(&key(&b.1 .2)).expect("finite distances"))
        else {
            skipped += 1;
            continue;
        };
        used[i] = true;
        let tr = human_like_movement(finals, *delta, RAW_SAMPLES)?;
        entries.push(Demonstration::Raw(RawDemonstration::new(*delta, tr, *landing)?));
    }
    if skipped > 0 {
        warn!("{skipped} of {} target tiles had no demonstration within {TARGET_TOLERANCE}", targets.len());
    }
    DemonstrationSet::new(entries, Provenance::HumanLike)
}

/// Within-time-bin variance of min-max normalized joint trajectories,
/// relative to their overall variance. Sets sharing one profile score near
/// zero; unstructured movements score much higher.
pub fn profile_dispersion_ratio(demos: &[RawDemonstration], bins: usize) -> f64 {
    let n_bins = bins.max(1);
    let mut per_bin: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
    for d in demos {
        for tr in &d.trajectories {
            let lo = tr.values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = tr.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(hi - lo > 1e-9) {
                continue;
            }
            // Orient every trajectory upwards so shape, not direction, is compared.
            let rising = tr.values.last() >= tr.values.first();
            for (t, v) in tr.times.iter().zip(&tr.values) {
                let mut x = (v - lo) / (hi - lo);
                if !rising {
                    x = 1.0 - x;
                }
                let b = ((t / d.delta) * n_bins as f64) as usize;
                per_bin[b.min(n_bins - 1)].push(x);
            }
        }
    }
    let all: Vec<f64> = per_bin.iter().flatten().copied().collect();
    let variance = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
    };
    if all.len() < 2 {
        return 0.0;
    }
    let total = variance(&all);
    let within: f64 = per_bin
        .iter()
        .filter(|b| !b.is_empty())
        .map(|b| variance(b) * b.len() as f64)
        .sum::<f64>()
        / all.len() as f64;
    if total > 0.0 {
        within / total
    } else {
        0.0
    }
}

/// Picks a demonstration lying in one of the least-visited demo-bearing
/// teaching tiles, uniformly at random.
pub fn select_demonstration<'a, 'o>(
    set: &'a DemonstrationSet,
    learner_outcomes: impl IntoIterator<Item = &'o Outcome>,
    grid: &TileGrid,
    rng: &mut Rng,
) -> &'a Demonstration {
    &set.entries[select_demonstration_index(set, learner_outcomes, grid, rng)]
}

/// As [`select_demonstration`], returning the entry's position in the set.
pub fn select_demonstration_index<'o>(
    set: &DemonstrationSet,
    learner_outcomes: impl IntoIterator<Item = &'o Outcome>,
    grid: &TileGrid,
    rng: &mut Rng,
) -> usize {
    let mut visits = vec![0usize; grid.len()];
    for o in learner_outcomes {
        if let Some(t) = grid.tile_of(o) {
            visits[t] += 1;
        }
    }
    let mut by_tile: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, e) in set.entries.iter().enumerate() {
        if let Some(t) = grid.tile_of(&e.outcome()) {
            by_tile.entry(t).or_default().push(i);
        }
    }
    let Some(fewest) = by_tile.keys().map(|&t| visits[t]).min() else {
        return rng.random_range(0..set.entries.len());
    };
    let tiles: Vec<usize> = by_tile.keys().copied().filter(|&t| visits[t] == fewest).collect();
    let members = &by_tile[&tiles[rng.random_range(0..tiles.len())]];
    members[rng.random_range(0..members.len())]
}
