//! Pass/fail verdicts over one or more experiment reports.

use serde::{Deserialize, Serialize};

use crate::harness::experiment::ExperimentReport;
use crate::learners::Strategy;

pub const RANKING_MIN_SEEDS: usize = 10;
pub const VARIANT_MIN_SEEDS: usize = 5;
/// SGIM-D's final error must be at most this fraction of Random's.
pub const HALVING_FACTOR: f64 = 0.6;
/// SGIM-D's final error must be at most this multiple of the noise std.
pub const NOISE_FLOOR_FACTOR: f64 = 3.0;
/// Required ratio of reachable-goal fractions, SGIM-D over SAGG-RIAC, in
/// the large task space.
pub const GOAL_FRACTION_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// `C1` .. `C6`.
    pub criterion: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(criterion: &str, name: &str, passed: bool, detail: String) -> Self {
        Self {
            criterion: criterion.to_string(),
            name: name.to_string(),
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<24} {}  {}",
            self.criterion,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    /// Sample variance (zero for fewer than two values).
    pub variance: f64,
    pub n: usize,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Some(Stats { mean, variance, n })
    }

    /// Standard error of the difference of two means.
    pub fn pooled_se(&self, other: &Stats) -> f64 {
        (self.variance / self.n as f64 + other.variance / other.n as f64).sqrt()
    }
}

/// True when `hi`'s mean exceeds `lo`'s by more than one pooled standard error.
pub fn significantly_greater(hi: &Stats, lo: &Stats) -> bool {
    hi.mean - lo.mean > hi.pooled_se(lo)
}

fn stats(report: &ExperimentReport, s: Strategy) -> Option<Stats> {
    Stats::of(&report.final_errors(s))
}

fn is_large(r: &ExperimentReport) -> bool {
    r.task_half_width > 1.0
}

/// The report the ranking criteria read: demonstrator 2 in the standard
/// task space, else the first standard-space report.
fn main_report(reports: &[ExperimentReport]) -> Option<&ExperimentReport> {
    reports
        .iter()
        .find(|r| !is_large(r) && r.demonstrator == Some(2))
        .or_else(|| reports.iter().find(|r| !is_large(r)))
}

fn ranking(r: &ExperimentReport) -> Option<Verdict> {
    use Strategy::*;
    let [obs, rnd, sagg, imi, sgim] = [Observation, Random, SaggRiac, Imitation, SgimD].map(|s| stats(r, s));
    let (obs, rnd, sagg, imi, sgim) = (obs?, rnd?, sagg?, imi?, sgim?);
    let gaps = [
        ("observation>random", significantly_greater(&obs, &rnd)),
        ("random>sagg_riac", significantly_greater(&rnd, &sagg)),
        ("random>imitation", significantly_greater(&rnd, &imi)),
        ("sagg_riac>sgim_d", significantly_greater(&sagg, &sgim)),
        ("imitation>sgim_d", significantly_greater(&imi, &sgim)),
    ];
    let seeds = [obs.n, rnd.n, sagg.n, imi.n, sgim.n].into_iter().min().unwrap_or(0);
    let failed: Vec<&str> = gaps.iter().filter(|g| !g.1).map(|g| g.0).collect();
    let passed = failed.is_empty() && seeds >= RANKING_MIN_SEEDS;
    Some(Verdict::new(
        "C1",
        "strategy-ranking",
        passed,
        format!(
            "obs={:.4} random={:.4} sagg={:.4} imitation={:.4} sgim_d={:.4} seeds={seeds}{}",
            obs.mean,
            rnd.mean,
            sagg.mean,
            imi.mean,
            sgim.mean,
            if failed.is_empty() { String::new() } else { format!(" not significant: {}", failed.join(",")) }
        ),
    ))
}

fn halving(r: &ExperimentReport) -> Option<Verdict> {
    let rnd = stats(r, Strategy::Random)?;
    let sgim = stats(r, Strategy::SgimD)?;
    let ratio = sgim.mean / rnd.mean;
    Some(Verdict::new(
        "C2",
        "error-halving",
        ratio <= HALVING_FACTOR,
        format!("sgim_d/random={ratio:.3} (limit {HALVING_FACTOR})"),
    ))
}

fn noise_floor(r: &ExperimentReport) -> Option<Verdict> {
    let sgim = stats(r, Strategy::SgimD)?;
    let limit = NOISE_FLOOR_FACTOR * r.noise_std;
    Some(Verdict::new(
        "C3",
        "noise-floor",
        sgim.mean <= limit,
        format!("sgim_d={:.4} limit={limit:.4} (noise std {:.4})", sgim.mean, r.noise_std),
    ))
}

fn coverage(r: &ExperimentReport) -> Option<Verdict> {
    let per_seed = |s: Strategy| -> Vec<(u64, usize)> {
        r.runs_of(s).filter(|x| x.failure.is_none()).map(|x| (x.seed, x.coverage)).collect()
    };
    let (rnd, sagg, sgim) = (per_seed(Strategy::Random), per_seed(Strategy::SaggRiac), per_seed(Strategy::SgimD));
    if rnd.is_empty() || sagg.is_empty() || sgim.is_empty() {
        return None;
    }
    let mut bad = Vec::new();
    let mut checked = 0;
    for &(seed, c_sgim) in &sgim {
        let find = |v: &[(u64, usize)]| v.iter().find(|x| x.0 == seed).map(|x| x.1);
        let (Some(c_sagg), Some(c_rnd)) = (find(&sagg), find(&rnd)) else { continue };
        checked += 1;
        if !(c_sgim > c_sagg && c_sagg > c_rnd) {
            bad.push(format!("seed {seed}: {c_sgim}/{c_sagg}/{c_rnd}"));
        }
    }
    Some(Verdict::new(
        "C4",
        "coverage",
        checked > 0 && bad.is_empty(),
        if bad.is_empty() {
            format!("sgim_d>sagg_riac>random on {checked} seeds")
        } else {
            format!("violations (sgim/sagg/random): {}", bad.join("; "))
        },
    ))
}

fn demonstrators(reports: &[ExperimentReport]) -> Option<Verdict> {
    let standard: Vec<&ExperimentReport> = reports.iter().filter(|r| !is_large(r)).collect();
    let sagg = standard.iter().find_map(|r| stats(r, Strategy::SaggRiac))?;
    let sgim_for = |d: u8| {
        standard
            .iter()
            .filter(|r| r.demonstrator == Some(d))
            .find_map(|r| stats(r, Strategy::SgimD))
    };
    let (d1, d2, d3) = (sgim_for(1)?, sgim_for(2)?, sgim_for(3)?);
    let beats = [d1, d2, d3].iter().all(|d| d.mean < sagg.mean);
    let seeds = [d1.n, d2.n, d3.n, sagg.n].into_iter().min().unwrap_or(0);
    Some(Verdict::new(
        "C5",
        "demonstrator-robustness",
        beats && d3.mean <= d1.mean && seeds >= VARIANT_MIN_SEEDS,
        format!(
            "sgim_d d1={:.4} d2={:.4} d3={:.4} sagg={:.4} seeds={seeds}",
            d1.mean, d2.mean, d3.mean, sagg.mean
        ),
    ))
}

fn large_space(reports: &[ExperimentReport]) -> Option<Verdict> {
    let r = reports.iter().find(|r| is_large(r))?;
    let (sagg, sgim) = (stats(r, Strategy::SaggRiac)?, stats(r, Strategy::SgimD)?);
    let frac = |s: Strategy| {
        let v: Vec<f64> = r.runs_of(s).filter_map(|x| x.goal_reachable_fraction).collect();
        if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 }
    };
    let (f_sagg, f_sgim) = (frac(Strategy::SaggRiac), frac(Strategy::SgimD));
    let seeds = sagg.n.min(sgim.n);
    Some(Verdict::new(
        "C6",
        "large-task-space",
        sgim.mean < sagg.mean && f_sgim >= GOAL_FRACTION_FACTOR * f_sagg && seeds >= VARIANT_MIN_SEEDS,
        format!(
            "sgim_d={:.4} sagg={:.4} reachable goals sgim_d={f_sgim:.3} sagg={f_sagg:.3} seeds={seeds}",
            sgim.mean, sagg.mean
        ),
    ))
}

/// One verdict per criterion the reports carry enough data for; criteria
/// without their strategies are left out.
pub fn compare(reports: &[ExperimentReport]) -> Vec<Verdict> {
    let mut out = Vec::new();
    if let Some(main) = main_report(reports) {
        out.extend(ranking(main));
        out.extend(halving(main));
        out.extend(noise_floor(main));
        out.extend(coverage(main));
    }
    out.extend(demonstrators(reports));
    out.extend(large_space(reports));
    out
}
