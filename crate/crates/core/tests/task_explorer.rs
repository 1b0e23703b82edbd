mod support;

use rand::Rng as _;
use sgim_core::interest_map::{InterestConfig, RegionTree};
use sgim_core::task_explorer::{decide_goal, emulate_goal, region_probabilities, GoalMode, TaskExplorerConfig};
use sgim_core::{rng, Outcome, Rect};

/// Upper chi-square quantile at p = 1e-4 (Wilson-Hilferty).
fn chi2_critical(df: usize) -> f64 {
    let k = df as f64;
    let z = 3.719;
    k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
}

fn chi2(counts: &[usize], probs: &[f64]) -> f64 {
    let n: usize = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .filter(|(_, p)| **p > 0.0)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

fn trained_tree() -> RegionTree {
    let mut tree = RegionTree::new(Rect::square(1.0), InterestConfig::default()).unwrap();
    let mut r = rng::stream(10, 0);
    for k in 0..400 {
        let g = Outcome::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let c = if g.x < 0.0 { -1.0 + (k as f64 / 400.0) } else { -0.5 + 0.2 * r.random::<f64>() };
        tree.update(&g, c.min(0.0)).unwrap();
    }
    tree
}

#[test]
fn probabilities_normalize() {
    support::probability_cases().unwrap();
}

#[test]
fn uniform_mode_fills_quadrants_evenly() {
    let tree = trained_tree();
    let cfg = TaskExplorerConfig {
        mode_weights: [0.0, 1.0, 0.0],
        ..TaskExplorerConfig::default()
    };
    let mut r = rng::stream(11, 0);
    let mut counts = [0usize; 4];
    for _ in 0..20_000 {
        let c = decide_goal(&tree, &cfg, &mut r);
        assert_eq!(c.mode, GoalMode::M2Uniform);
        assert!(tree.bounds().contains(&c.goal));
        counts[(c.goal.x >= 0.0) as usize + 2 * (c.goal.y >= 0.0) as usize] += 1;
    }
    assert!(chi2(&counts, &[0.25; 4]) < chi2_critical(3), "{counts:?}");
}

#[test]
fn interest_mode_follows_region_probabilities() {
    let tree = trained_tree();
    let leaves: Vec<_> = tree.leaves().collect();
    assert!(leaves.len() > 4);
    let probs = region_probabilities(&leaves.iter().map(|l| l.interest).collect::<Vec<_>>());
    let cfg = TaskExplorerConfig {
        mode_weights: [1.0, 0.0, 0.0],
        ..TaskExplorerConfig::default()
    };
    let mut r = rng::stream(12, 0);
    let mut counts = vec![0usize; leaves.len()];
    for _ in 0..20_000 {
        let c = decide_goal(&tree, &cfg, &mut r);
        let pos = leaves.iter().position(|l| Some(l.id) == c.source_region).unwrap();
        assert!(leaves[pos].bounds.contains(&c.goal));
        counts[pos] += 1;
    }
    for (c, p) in counts.iter().zip(&probs) {
        if *p == 0.0 {
            assert_eq!(*c, 0, "least interesting region was drawn");
        }
    }
    let df = probs.iter().filter(|p| **p > 0.0).count() - 1;
    assert!(chi2(&counts, &probs) < chi2_critical(df.max(1)));
}

#[test]
fn mode_frequencies_follow_weights() {
    let tree = trained_tree();
    let cfg = TaskExplorerConfig::default();
    let mut r = rng::stream(13, 0);
    let mut counts = [0usize; 3];
    for _ in 0..20_000 {
        let c = decide_goal(&tree, &cfg, &mut r);
        counts[match c.mode {
            GoalMode::M1Interest => 0,
            GoalMode::M2Uniform => 1,
            _ => 2,
        }] += 1;
        assert!(tree.bounds().contains(&c.goal));
    }
    assert!(chi2(&counts, &cfg.mode_weights) < chi2_critical(2), "{counts:?}");
}

#[test]
fn emulated_goal_is_clipped() {
    let c = emulate_goal(&Outcome::new(1.4, -0.2), &Rect::square(1.0));
    assert_eq!(c.goal, Outcome::new(1.0, -0.2));
    assert_eq!(c.mode, GoalMode::Emulated);
}
