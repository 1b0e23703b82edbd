//! Exact property checks shared by the module test files and the
//! acceptance summary. Each returns `Err` with a short reason on failure.
#![allow(dead_code)]

use rand::Rng as _;

use sgim_core::environment::Environment;
use sgim_core::harness::Verdict;
use sgim_core::interest_map::{interest_of, similarity, InterestConfig, RegionTree};
use sgim_core::learners::{run, LearnerConfig, Strategy};
use sgim_core::memory::{Memory, StrategyTag};
use sgim_core::policy_explorer::nelder_mead::{nelder_mead, NelderMeadOptions, Seed};
use sgim_core::policy_explorer::{local_data, PolicyExplorerConfig};
use sgim_core::primitives::{
    blend, fit_demonstration, generate_trajectory, sample_policy, sample_times, PolicyParams, N_JOINTS, PARAM_DIM,
};
use sgim_core::task_explorer::region_probabilities;
use sgim_core::teachers::{build_demonstrator1, DemonstrationSet};
use sgim_core::{rng, Outcome, Rect};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)*));
        }
    };
}

pub fn random_params(r: &mut rng::Rng) -> PolicyParams {
    Environment::random_policy(r)
}

/// Independent evaluation of the Gaussian-weighted knot blend.
pub fn blend_oracle(knots: [f64; 4], delta: f64, sigma: f64, t: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, u) in knots.iter().enumerate() {
        let ti = i as f64 * delta / 3.0;
        let w = (-sigma * (t - ti).powi(2)).exp();
        num += w * u;
        den += w;
    }
    num / den
}

pub fn blend_cases() -> Check {
    for k in 0..=20 {
        let t = k as f64 / 20.0 * 1.3;
        let v = blend(&[0.5; 4], 1.3, 40.0 / 1.69, t);
        ensure!((v - 0.5).abs() < 1e-12, "constant knots gave {v} at t={t}");
    }
    let knots = [0.1, 0.4, 0.4, 0.1];
    for k in 0..=10 {
        let t = k as f64 / 10.0;
        let (a, b) = (blend(&knots, 1.0, 40.0, t), blend(&knots, 1.0, 40.0, 1.0 - t));
        ensure!((a - b).abs() < 1e-12, "asymmetric at t={t}: {a} vs {b}");
    }
    let v = blend(&[0.0, 1.0, 0.0, 0.0], 1.0, 50.0, 1.0 / 3.0);
    let oracle = blend_oracle([0.0, 1.0, 0.0, 0.0], 1.0, 50.0, 1.0 / 3.0);
    ensure!((v - oracle).abs() < 1e-12, "knot blend {v} differs from oracle {oracle}");
    ensure!(v > 0.99, "nearest knot does not dominate: {v}");
    for i in 0..4 {
        let mut knots = [0.2; 4];
        knots[i] = 0.9;
        let v = blend(&knots, 1.0, 5000.0, i as f64 / 3.0);
        ensure!((v - 0.9).abs() < 1e-3, "sharp blend misses knot {i}: {v}");
    }
    Ok(())
}

pub fn fit_round_trip() -> Check {
    let mut r = rng::stream(61, 0);
    for _ in 0..3 {
        let theta = random_params(&mut r);
        let demo = sample_policy(&theta, 100, Outcome::new(0.0, 0.0)).map_err(|e| e.to_string())?;
        let fit = fit_demonstration(&demo).map_err(|e| e.to_string())?;
        ensure!(fit.max_residual() < 1e-6, "residual {}", fit.max_residual());
        for tr in &demo.trajectories {
            let again = generate_trajectory(&fit.params, tr.joint, &tr.times).map_err(|e| e.to_string())?;
            let worst = again.values.iter().zip(&tr.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            ensure!(worst < 1e-6, "joint {} reproduced within {worst}", tr.joint);
        }
    }
    Ok(())
}

pub fn similarity_bounds() -> Check {
    let origin = Outcome::new(0.0, 0.5);
    let goal = Outcome::new(0.0, -0.5);
    let j = similarity(&goal, &Outcome::new(0.0, 0.0), &origin).map_err(|e| e.to_string())?;
    ensure!((j + 0.5).abs() < 1e-15, "hand case gave {j}");
    let zero = similarity(&goal, &goal, &origin).map_err(|e| e.to_string())?;
    ensure!(zero == 0.0, "reached goal gave {zero}");
    let far = similarity(&goal, &Outcome::new(0.0, -2.0), &origin).map_err(|e| e.to_string())?;
    ensure!(far == -1.0, "ratio 1.5 not clamped: {far}");
    ensure!(similarity(&origin, &goal, &origin).is_err(), "degenerate goal accepted");
    let mut r = rng::stream(62, 0);
    for _ in 0..1000 {
        let g = Outcome::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let a = Outcome::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let Ok(j) = similarity(&g, &a, &origin) else { continue };
        ensure!((-1.0..=0.0).contains(&j), "J out of range: {j}");
    }
    Ok(())
}

pub fn interest_window_cases() -> Check {
    let cases: [(&[f64], f64); 3] = [
        (&[-0.9, -0.8, -0.3, -0.2], 0.3),
        (&[-0.2, -0.2, -0.8, -0.8], 0.3),
        (&[-0.4; 4], 0.0),
    ];
    for (window, expected) in cases {
        let v = interest_of(window, 4).map_err(|e| e.to_string())?;
        ensure!((v - expected).abs() < 1e-12, "window {window:?}: {v} != {expected}");
    }
    ensure!(interest_of(&[-0.1], 0).is_err(), "zero window accepted");
    Ok(())
}

pub fn probability_cases() -> Check {
    let p = region_probabilities(&[0.2, 0.6, 0.2]);
    ensure!(p == vec![0.0, 1.0, 0.0], "hand case gave {p:?}");
    let p = region_probabilities(&[0.05; 5]);
    ensure!(p.iter().all(|&x| x == 0.2), "equal interests gave {p:?}");
    let mut r = rng::stream(63, 0);
    for _ in 0..200 {
        let n = r.random_range(2..12);
        let interests: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let p = region_probabilities(&interests);
        let sum: f64 = p.iter().sum();
        ensure!((sum - 1.0).abs() < 1e-12, "probabilities sum to {sum}");
        let min = interests.iter().copied().fold(f64::INFINITY, f64::min);
        for (i, q) in interests.iter().zip(&p) {
            if *i == min {
                ensure!(*q == 0.0, "minimal region has probability {q}");
            }
        }
    }
    Ok(())
}

pub fn split_and_partition() -> Check {
    let cfg = InterestConfig::default();
    let space = Rect::square(1.0);
    let mut tree = RegionTree::new(space, cfg).map_err(|e| e.to_string())?;
    let mut r = rng::stream(64, 0);
    for k in 0..cfg.g_max {
        tree.update(&Outcome::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)), -(k as f64 % 3.0) / 3.0)
            .map_err(|e| e.to_string())?;
    }
    ensure!(tree.leaf_count() == 1, "split before exceeding g_max");
    tree.update(&Outcome::new(0.1, 0.1), -0.5).map_err(|e| e.to_string())?;
    ensure!(tree.leaf_count() == 2, "no split after g_max + 1 goals");

    let mut tree = RegionTree::new(space, cfg).map_err(|e| e.to_string())?;
    let n = 10_000;
    for _ in 0..n {
        let g = Outcome::new(r.random_range(-1.0..=1.0), r.random_range(-1.0..=1.0));
        tree.update(&g, -r.random::<f64>()).map_err(|e| e.to_string())?;
    }
    let leaves: Vec<_> = tree.leaves().collect();
    let area: f64 = leaves.iter().map(|l| l.bounds.area()).sum();
    ensure!((area - space.area()).abs() < 1e-9, "leaf areas sum to {area}");
    let stored: usize = leaves.iter().map(|l| l.history.len()).sum();
    ensure!(stored == n, "{stored} goals stored, {n} inserted");
    for l in &leaves {
        ensure!(l.history.len() <= cfg.g_max, "leaf holds {} goals", l.history.len());
        for a in &l.history {
            ensure!(l.bounds.contains(&a.goal), "goal outside its leaf");
            let id = tree.locate(&a.goal).map_err(|e| e.to_string())?;
            ensure!(id == l.id, "goal located in another leaf");
        }
    }
    for _ in 0..2000 {
        let p = Outcome::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let hits = leaves.iter().filter(|l| l.bounds.contains(&p)).count();
        ensure!(hits == 1, "point {p:?} lies in {hits} leaves");
    }
    Ok(())
}

pub fn random_memory(n: usize, seed: u64) -> Memory {
    let mut r = rng::stream(seed, 0);
    let mut m = Memory::new();
    for _ in 0..n {
        let p = random_params(&mut r);
        let o = Outcome::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        m.push(p, o, StrategyTag::Autonomous);
    }
    m
}

/// Exhaustive reliability scoring: returns (anchor index, score).
pub fn locality_oracle(goal: &Outcome, memory: &Memory, cfg: &PolicyExplorerConfig) -> (u64, f64) {
    let eps = memory.episodes();
    let mut by_outcome: Vec<(f64, usize)> = eps.iter().enumerate().map(|(i, e)| (e.outcome.distance(goal), i)).collect();
    by_outcome.sort_by(|a, b| a.0.total_cmp(&b.0));
    by_outcome.truncate(cfg.h_max);
    let within: Vec<(f64, usize)> = by_outcome.iter().copied().filter(|h| h.0 <= cfg.dist_m).collect();
    let anchors = if within.is_empty() { by_outcome } else { within };
    let mut best: Option<(f64, u64)> = None;
    for (_, a) in anchors {
        let mut hood: Vec<(f64, usize)> = eps
            .iter()
            .enumerate()
            .map(|(i, e)| (e.params.distance(&eps[a].params), i))
            .filter(|h| h.0 < cfg.dist_n)
            .collect();
        hood.sort_by(|x, y| x.0.total_cmp(&y.0));
        hood.truncate(cfg.k_max);
        let n = hood.len() as f64;
        let cx = hood.iter().map(|h| eps[h.1].outcome.x).sum::<f64>() / n;
        let cy = hood.iter().map(|h| eps[h.1].outcome.y).sum::<f64>() / n;
        let var = hood
            .iter()
            .map(|h| (eps[h.1].outcome.x - cx).powi(2) + (eps[h.1].outcome.y - cy).powi(2))
            .sum::<f64>()
            / n;
        let score = Outcome::new(cx, cy).distance(goal) + cfg.alpha * var;
        if best.is_none_or(|b| score < b.0) {
            best = Some((score, eps[a].index));
        }
    }
    let (score, index) = best.expect("non-empty memory");
    (index, score)
}

pub fn locality_brute_force() -> Check {
    // Clustered policies so that neighbourhoods hold several episodes.
    let mut r = rng::stream(66, 0);
    let centers: Vec<PolicyParams> = (0..40).map(|_| random_params(&mut r)).collect();
    let mut memory = Memory::new();
    for k in 0..500 {
        let c = centers[k % centers.len()].values();
        let raw: [f64; PARAM_DIM] = std::array::from_fn(|i| c[i] + r.random_range(-0.05..0.05));
        let o = Outcome::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        memory.push(sgim_core::primitives::clamp_params(&raw), o, StrategyTag::Autonomous);
    }
    let cfg = PolicyExplorerConfig::default();
    for _ in 0..200 {
        let goal = Outcome::new(r.random_range(-1.2..1.2), r.random_range(-1.2..1.2));
        let got = local_data(&goal, &memory, &cfg).map_err(|e| e.to_string())?;
        let (index, score) = locality_oracle(&goal, &memory, &cfg);
        ensure!(got.anchor.index == index, "anchor {} vs oracle {index}", got.anchor.index);
        ensure!((got.score - score).abs() < 1e-12, "score {} vs oracle {score}", got.score);
    }
    Ok(())
}

pub fn nelder_mead_quadratic() -> Check {
    let mut r = rng::stream(67, 0);
    let target: Vec<f64> = (0..PARAM_DIM).map(|_| r.random_range(0.2..0.8)).collect();
    let init: Vec<f64> = target.iter().map(|t| t + r.random_range(-0.05..0.05)).collect();
    let f = |x: &[f64]| x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let opts = NelderMeadOptions {
        max_evals: 500,
        tol: 1e-4,
        ..NelderMeadOptions::default()
    };
    let res = nelder_mead(f, Seed::unknown(init), &[], &opts).map_err(|e| e.to_string())?;
    ensure!(res.best.value < 1e-4, "best value {} after {} evals", res.best.value, res.evals);
    ensure!(res.evals <= 500, "{} evaluations", res.evals);
    ensure!(res.best_history.windows(2).all(|w| w[1] <= w[0]), "best value increased");
    ensure!(
        res.evaluated.iter().all(|v| v.point.iter().all(|x| (0.0..=1.0).contains(x))),
        "iterate left the box"
    );
    Ok(())
}

pub fn memory_nn_equivalence() -> Check {
    let memory = random_memory(1000, 68);
    let eps = memory.episodes();
    let mut r = rng::stream(69, 0);
    for _ in 0..100 {
        let target = Outcome::new(r.random_range(-1.5..1.5), r.random_range(-1.5..1.5));
        let got: Vec<u64> = memory.nearest_outcomes(&target, 12).map_err(|e| e.to_string())?.iter().map(|h| h.episode.index).collect();
        let mut all: Vec<(f64, u64)> = eps.iter().map(|e| (e.outcome.distance(&target), e.index)).collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        let want: Vec<u64> = all.iter().take(12).map(|x| x.1).collect();
        ensure!(got == want, "outcome neighbours differ");

        let center = random_params(&mut r);
        let radius = r.random_range(0.5..1.2);
        let mut got: Vec<u64> = memory.nearest_policies(&center, radius).iter().map(|h| h.episode.index).collect();
        got.sort();
        let want: Vec<u64> = eps.iter().filter(|e| e.params.distance(&center) < radius).map(|e| e.index).collect();
        ensure!(got == want, "policy neighbours differ ({} vs {})", got.len(), want.len());
    }
    Ok(())
}

/// A small teacher built from a short SAGG-RIAC run.
pub fn small_teacher(env: &Environment) -> DemonstrationSet {
    let src = run(
        &LearnerConfig {
            strategy: Strategy::SaggRiac,
            total_episodes: 300,
            rng_seed: 900,
            ..LearnerConfig::default()
        },
        env,
        None,
    )
    .unwrap();
    build_demonstrator1(&src.memory, &mut rng::stream(900, 9)).unwrap()
}

pub fn run_csv(cfg: &LearnerConfig, env: &Environment, teacher: Option<&DemonstrationSet>) -> Vec<u8> {
    let rec = run(cfg, env, teacher).unwrap();
    let mut out = Vec::new();
    rec.write_csv(&mut out).unwrap();
    out
}

pub fn byte_determinism() -> Check {
    let env = Environment::with_defaults(0);
    let teacher = small_teacher(&env);
    for strategy in Strategy::ALL {
        let cfg = LearnerConfig {
            strategy,
            total_episodes: 400,
            rng_seed: 21,
            ..LearnerConfig::default()
        };
        let a = run_csv(&cfg, &env, Some(&teacher));
        let b = run_csv(&cfg, &env, Some(&teacher));
        ensure!(a == b, "{strategy} run CSVs differ");
    }
    Ok(())
}

type Suite = (&'static str, fn() -> Check);

pub fn property_suites() -> Verdict {
    let checks: [Suite; 10] = [
        ("blend", blend_cases),
        ("fit", fit_round_trip),
        ("similarity", similarity_bounds),
        ("interest", interest_window_cases),
        ("region-probabilities", probability_cases),
        ("region-tree", split_and_partition),
        ("locality", locality_brute_force),
        ("nelder-mead", nelder_mead_quadratic),
        ("memory-nn", memory_nn_equivalence),
        ("determinism", byte_determinism),
    ];
    let failed: Vec<String> = checks
        .iter()
        .filter_map(|(name, check)| check().err().map(|e| format!("{name}: {e}")))
        .collect();
    Verdict {
        criterion: "C7".into(),
        name: "property-suites".into(),
        passed: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} suites exact", checks.len())
        } else {
            failed.join("; ")
        },
    }
}

pub fn joints() -> std::ops::Range<usize> {
    0..N_JOINTS
}

pub fn times(delta: f64) -> Vec<f64> {
    sample_times(delta, 100)
}
