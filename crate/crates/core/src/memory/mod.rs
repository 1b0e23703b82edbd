//! Episodic memory of every `(theta, tau)` pair the learner has produced or
//! observed, with nearest-neighbour retrieval in outcome space and in policy
//! space.
//!
//! The context is fixed for a whole experiment, so episodes are indexed
//! context-free. Both spatial indexes are rebuilt every
//! [`REBUILD_EVERY`] insertions; newer episodes wait in a side buffer that
//! queries scan linearly.

pub mod kdtree;

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Goal, Outcome};
use crate::primitives::{PolicyParams, PARAM_DIM};
use kdtree::{dist_sq, KdTree};

pub const REBUILD_EVERY: usize = 64;

/// How an episode entered memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyTag {
    Autonomous,
    Imitation,
    Demonstration,
}

impl StrategyTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyTag::Autonomous => "autonomous",
            StrategyTag::Imitation => "imitation",
            StrategyTag::Demonstration => "demonstration",
        }
    }
}

impl fmt::Display for StrategyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "autonomous" => Ok(StrategyTag::Autonomous),
            "imitation" => Ok(StrategyTag::Imitation),
            "demonstration" => Ok(StrategyTag::Demonstration),
            other => Err(Error::Config(format!("unknown strategy tag {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub index: u64,
    pub params: PolicyParams,
    pub outcome: Outcome,
    pub tag: StrategyTag,
}

/// A retrieved episode and its distance to the query.
#[derive(Debug, Clone, Copy)]
pub struct Hit<'a> {
    pub episode: &'a Episode,
    pub distance: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Memory {
    episodes: Vec<Episode>,
    outcome_index: KdTree<2>,
    policy_index: KdTree<PARAM_DIM>,
    /// `episodes[..indexed]` are covered by the trees.
    indexed: usize,
}

fn outcome_key(o: &Outcome) -> [f64; 2] {
    [o.x, o.y]
}

impl Memory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn episodes(&self) -> &[Episode] {
        &self.episodes
    }

    pub fn iter(&self) -> impl Iterator<Item = &Episode> {
        self.episodes.iter()
    }

    /// Index the next recorded episode should carry.
    pub fn next_index(&self) -> u64 {
        self.episodes.last().map_or(0, |e| e.index + 1)
    }

    /// Appends an episode. Indices must strictly increase.
    pub fn record(&mut self, episode: Episode) -> Result<()> {
        if let Some(last) = self.episodes.last() {
            if episode.index <= last.index {
                return Err(Error::DuplicateIndex {
                    got: episode.index,
                    last: last.index,
                });
            }
        }
        self.episodes.push(episode);
        if self.episodes.len() - self.indexed >= REBUILD_EVERY {
            self.rebuild();
        }
        Ok(())
    }

    /// Records `(params, outcome)` under the next free index.
    pub fn push(&mut self, params: PolicyParams, outcome: Outcome, tag: StrategyTag) -> &Episode {
        let index = self.next_index();
        self.record(Episode {
            index,
            params,
            outcome,
            tag,
        })
        .expect("next_index is always fresh");
        self.episodes.last().unwrap()
    }

    /// A fresh memory holding the first `len` episodes.
    pub fn prefix(&self, len: usize) -> Memory {
        let mut m = Memory {
            episodes: self.episodes[..len.min(self.episodes.len())].to_vec(),
            ..Memory::default()
        };
        m.rebuild();
        m
    }

    fn rebuild(&mut self) {
        self.outcome_index = KdTree::build(self.episodes.iter().map(|e| outcome_key(&e.outcome)).collect());
        self.policy_index = KdTree::build(self.episodes.iter().map(|e| *e.params.values()).collect());
        self.indexed = self.episodes.len();
    }

    pub fn get(&self, index: u64) -> Option<&Episode> {
        self.episodes
            .binary_search_by_key(&index, |e| e.index)
            .ok()
            .map(|pos| &self.episodes[pos])
    }

    fn merge_hits(&self, mut tree_hits: Vec<(f64, u32)>, buffer_hits: Vec<(f64, u32)>, limit: usize) -> Vec<Hit<'_>> {
        tree_hits.extend(buffer_hits);
        tree_hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        tree_hits.truncate(limit);
        tree_hits
            .into_iter()
            .map(|(d2, pos)| Hit {
                episode: &self.episodes[pos as usize],
                distance: d2.sqrt(),
            })
            .collect()
    }

    /// Up to `h_max` episodes ordered by outcome distance to `target`
    /// (ties by insertion order).
    pub fn nearest_outcomes(&self, target: &Goal, h_max: usize) -> Result<Vec<Hit<'_>>> {
        if self.is_empty() {
            return Err(Error::EmptyMemory);
        }
        let key = outcome_key(target);
        let tree = self.outcome_index.nearest(&key, h_max);
        let buffer = self.episodes[self.indexed..]
            .iter()
            .enumerate()
            .map(|(i, e)| (dist_sq(&outcome_key(&e.outcome), &key), (self.indexed + i) as u32))
            .collect();
        Ok(self.merge_hits(tree, buffer, h_max))
    }

    /// The single closest outcome to `target`.
    pub fn closest_outcome(&self, target: &Goal) -> Result<Hit<'_>> {
        Ok(self.nearest_outcomes(target, 1)?[0])
    }

    /// Every episode whose parameters lie strictly within `radius` of
    /// `center`, ordered by distance.
    pub fn nearest_policies(&self, center: &PolicyParams, radius: f64) -> Vec<Hit<'_>> {
        if !(radius > 0.0) {
            return Vec::new();
        }
        let key = center.values();
        let tree = self.policy_index.within(key, radius);
        let r2 = radius * radius;
        let buffer = self.episodes[self.indexed..]
            .iter()
            .enumerate()
            .map(|(i, e)| (dist_sq(e.params.values(), key), (self.indexed + i) as u32))
            .filter(|(d2, _)| *d2 < r2)
            .collect();
        self.merge_hits(tree, buffer, usize::MAX)
    }

    /// Order-sensitive digest of the stored episodes.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for e in &self.episodes {
            e.index.hash(&mut h);
            e.tag.hash(&mut h);
            for v in e.params.values() {
                v.to_bits().hash(&mut h);
            }
            e.outcome.x.to_bits().hash(&mut h);
            e.outcome.y.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// CSV dump: `index,strategy_tag,theta1..theta25,tau_x,tau_y`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["index".to_string(), "strategy_tag".to_string()];
        header.extend((1..=PARAM_DIM).map(|i| format!("theta{i}")));
        header.extend(["tau_x".to_string(), "tau_y".to_string()]);
        w.write_record(&header).map_err(csv_err)?;
        for e in &self.episodes {
            let mut row = vec![e.index.to_string(), e.tag.to_string()];
            row.extend(e.params.values().iter().map(|v| v.to_string()));
            row.extend([e.outcome.x.to_string(), e.outcome.y.to_string()]);
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut memory = Memory::new();
        for (line, record) in r.records().enumerate() {
            let record = record.map_err(csv_err)?;
            let bad = |m: String| Error::parse("memory.csv", format!("row {}: {m}", line + 1));
            if record.len() != PARAM_DIM + 4 {
                return Err(bad(format!("expected {} columns, got {}", PARAM_DIM + 4, record.len())));
            }
            let num = |i: usize| -> Result<f64> {
                record[i].parse::<f64>().map_err(|e| bad(format!("column {i}: {e}")))
            };
            let index = record[0].parse::<u64>().map_err(|e| bad(e.to_string()))?;
            let tag = record[1].parse::<StrategyTag>()?;
            let theta = (0..PARAM_DIM).map(|i| num(2 + i)).collect::<Result<Vec<_>>>()?;
            let outcome = Outcome::new(num(PARAM_DIM + 2)?, num(PARAM_DIM + 3)?);
            memory.record(Episode {
                index,
                params: PolicyParams::new(&theta)?,
                outcome,
                tag,
            })?;
        }
        Ok(memory)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::parse("csv", e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ep(index: u64, x: f64, y: f64) -> Episode {
        Episode {
            index,
            params: PolicyParams::uniform(x.clamp(0.0, 1.0)),
            outcome: Outcome::new(x, y),
            tag: StrategyTag::Autonomous,
        }
    }

    #[test]
    fn record_and_retrieve() {
        let mut m = Memory::new();
        m.record(ep(0, 0.1, 0.0)).unwrap();
        assert_eq!(m.len(), 1);
        for i in 1..5000 {
            m.record(ep(i, (i as f64 * 0.001) % 1.0, 0.0)).unwrap();
        }
        assert_eq!(m.len(), 5000);
        assert_eq!(m.get(1234).unwrap(), &ep(1234, (1234.0 * 0.001) % 1.0, 0.0));
        assert!(m.get(9999).is_none());
    }

    #[test]
    fn out_of_order_index_rejected() {
        let mut m = Memory::new();
        m.record(ep(5, 0.0, 0.0)).unwrap();
        assert!(matches!(m.record(ep(5, 0.0, 0.0)), Err(Error::DuplicateIndex { .. })));
        assert!(m.record(ep(3, 0.0, 0.0)).is_err());
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn nearest_outcomes_in_order() {
        let mut m = Memory::new();
        m.record(ep(0, 0.3, 0.0)).unwrap();
        m.record(ep(1, 0.1, 0.0)).unwrap();
        m.record(ep(2, 0.2, 0.0)).unwrap();
        let hits = m.nearest_outcomes(&Outcome::new(0.0, 0.0), 2).unwrap();
        let idx: Vec<u64> = hits.iter().map(|h| h.episode.index).collect();
        assert_eq!(idx, vec![1, 2]);
        let all = m.nearest_outcomes(&Outcome::new(0.0, 0.0), 10).unwrap();
        assert_eq!(all.len(), 3);
        assert!((all[2].distance - 0.3).abs() < 1e-12);
        assert!(matches!(
            Memory::new().nearest_outcomes(&Outcome::default(), 1),
            Err(Error::EmptyMemory)
        ));
    }

    #[test]
    fn policy_radius_includes_self_only_when_positive() {
        let mut m = Memory::new();
        m.record(ep(0, 0.4, 0.0)).unwrap();
        m.record(ep(1, 0.6, 0.0)).unwrap();
        let hits = m.nearest_policies(&PolicyParams::uniform(0.4), 1e-9);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].episode.index, 0);
        assert!(m.nearest_policies(&PolicyParams::uniform(0.5), 1e-9).is_empty());
        assert!(m.nearest_policies(&PolicyParams::uniform(0.4), 0.0).is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let mut m = Memory::new();
        for i in 0..70 {
            m.record(ep(i * 2, i as f64 / 70.0, -0.5)).unwrap();
        }
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = Memory::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.episodes(), m.episodes());
        assert_eq!(back.fingerprint(), m.fingerprint());
    }
}
