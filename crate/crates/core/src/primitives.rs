//! Motor primitives: 25-parameter policies, Gaussian distance weighted joint
//! trajectories, and the least-squares correspondence that maps a demonstrated
//! trajectory back onto primitive parameters.
//!
//! Joint values are normalized joint positions in `[0, 1]`; the environment
//! maps them to radians.

use std::fmt;
use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Outcome;
use crate::policy_explorer::nelder_mead::{nelder_mead, NelderMeadOptions, Seed};

pub const N_JOINTS: usize = 6;
pub const KNOTS_PER_JOINT: usize = 4;
pub const PARAM_DIM: usize = N_JOINTS * KNOTS_PER_JOINT + 1;
/// Index of the duration component.
pub const DURATION_INDEX: usize = PARAM_DIM - 1;

pub const DELTA_MIN: f64 = 0.5;
pub const DELTA_MAX: f64 = 2.0;
/// Dimensionless sharpness; the kernel width is `SHARPNESS / delta^2`.
pub const SHARPNESS: f64 = 40.0;

/// Kernel sharpness for a movement of duration `delta`.
pub fn sigma_for(delta: f64) -> f64 {
    SHARPNESS / (delta * delta)
}

/// One policy: 4 knots per joint followed by the duration parameter, all in `[0, 1]`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams(#[serde(with = "param_array")] [f64; PARAM_DIM]);

mod param_array {
    use super::PARAM_DIM;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64; PARAM_DIM], s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; PARAM_DIM], D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        v.try_into()
            .map_err(|_| serde::de::Error::custom("policy needs exactly 25 values"))
    }
}

impl fmt::Debug for PolicyParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("PolicyParams").field(&&self.0[..]).finish()
    }
}

impl PolicyParams {
    /// Validating constructor: exactly 25 finite values in `[0, 1]`.
    pub fn new(values: &[f64]) -> Result<Self> {
        let arr: [f64; PARAM_DIM] = values.try_into().map_err(|_| {
            Error::InvalidParams(format!("expected {PARAM_DIM} values, got {}", values.len()))
        })?;
        if let Some((i, v)) = arr
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::InvalidParams(format!("component {i} = {v} outside [0, 1]")));
        }
        Ok(Self(arr))
    }

    /// Every component set to `v` (clamped).
    pub fn uniform(v: f64) -> Self {
        Self([v.clamp(0.0, 1.0); PARAM_DIM])
    }

    pub fn values(&self) -> &[f64; PARAM_DIM] {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn knots(&self, joint: usize) -> [f64; KNOTS_PER_JOINT] {
        let base = joint * KNOTS_PER_JOINT;
        [self.0[base], self.0[base + 1], self.0[base + 2], self.0[base + 3]]
    }

    pub fn set_knots(&mut self, joint: usize, knots: [f64; KNOTS_PER_JOINT]) {
        let base = joint * KNOTS_PER_JOINT;
        for (k, v) in knots.into_iter().enumerate() {
            self.0[base + k] = v.clamp(0.0, 1.0);
        }
    }

    /// Decoded movement duration in seconds.
    pub fn duration(&self) -> f64 {
        DELTA_MIN + self.0[DURATION_INDEX] * (DELTA_MAX - DELTA_MIN)
    }

    /// Duration component that decodes to `delta` (clamped to the valid range).
    pub fn encode_duration(delta: f64) -> f64 {
        ((delta - DELTA_MIN) / (DELTA_MAX - DELTA_MIN)).clamp(0.0, 1.0)
    }

    pub fn distance(&self, other: &PolicyParams) -> f64 {
        self.distance_sq(other).sqrt()
    }

    pub fn distance_sq(&self, other: &PolicyParams) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// Componentwise clamp to `[0, 1]`. Non-finite components map to 0.5.
pub fn clamp_params(raw: &[f64; PARAM_DIM]) -> PolicyParams {
    let mut out = [0.0; PARAM_DIM];
    for (o, r) in out.iter_mut().zip(raw) {
        *o = if r.is_finite() { r.clamp(0.0, 1.0) } else { 0.5 };
    }
    PolicyParams(out)
}

/// Knot times `0, delta/3, 2 delta/3, delta`.
pub fn knot_times(delta: f64) -> [f64; KNOTS_PER_JOINT] {
    std::array::from_fn(|i| i as f64 * delta / 3.0)
}

/// Normalized blending weights of the four knots at time `t`.
pub fn blend_weights(delta: f64, sigma: f64, t: f64) -> [f64; KNOTS_PER_JOINT] {
    let ts = knot_times(delta);
    let d2: [f64; KNOTS_PER_JOINT] = std::array::from_fn(|i| (t - ts[i]) * (t - ts[i]));
    // Shift by the smallest exponent so the nearest knot weight is exactly 1.
    let m = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let w: [f64; KNOTS_PER_JOINT] = std::array::from_fn(|i| (-sigma * (d2[i] - m)).exp());
    let total: f64 = w.iter().sum();
    w.map(|wi| wi / total)
}

/// Gaussian distance weighted interpolation of `knots` at time `t`.
pub fn blend(knots: &[f64; KNOTS_PER_JOINT], delta: f64, sigma: f64, t: f64) -> f64 {
    blend_weights(delta, sigma, t)
        .iter()
        .zip(knots)
        .map(|(w, u)| w * u)
        .sum()
}

/// `n` uniformly spaced times covering `[0, delta]`.
pub fn sample_times(delta: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| delta * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Sampled trajectory of one joint (normalized joint position over time).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTrajectory {
    pub joint: usize,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl JointTrajectory {
    pub fn new(joint: usize, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if joint >= N_JOINTS {
            return Err(Error::InvalidTrajectory(format!("joint {joint} out of range")));
        }
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidTrajectory(format!(
                "{} times vs {} values",
                times.len(),
                values.len()
            )));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidTrajectory("non-finite sample".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTrajectory("times must strictly increase".into()));
        }
        Ok(Self { joint, times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().expect("validated non-empty")
    }

    /// Piecewise linear value at `t` (held constant outside the sampled span).
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&s| s <= t);
        if idx == 0 {
            return self.values[0];
        }
        if idx >= self.times.len() {
            return *self.values.last().unwrap();
        }
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let (v0, v1) = (self.values[idx - 1], self.values[idx]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

/// Trajectory of `joint` under `params`, sampled at `times`.
pub fn generate_trajectory(params: &PolicyParams, joint: usize, times: &[f64]) -> Result<JointTrajectory> {
    let delta = params.duration();
    generate_with_sigma(&params.knots(joint), joint, delta, sigma_for(delta), times)
}

/// As [`generate_trajectory`] with explicit knots, duration and sharpness.
pub fn generate_with_sigma(
    knots: &[f64; KNOTS_PER_JOINT],
    joint: usize,
    delta: f64,
    sigma: f64,
    times: &[f64],
) -> Result<JointTrajectory> {
    if !(delta > 0.0) || !(sigma > 0.0) {
        return Err(Error::InvalidParams(format!("delta = {delta}, sigma = {sigma}")));
    }
    const SLACK: f64 = 1e-12;
    if let Some(&t) = times.iter().find(|&&t| !(t >= -SLACK && t <= delta + SLACK)) {
        return Err(Error::TimeOutOfDomain { time: t, duration: delta });
    }
    let values = times.iter().map(|&t| blend(knots, delta, sigma, t)).collect();
    JointTrajectory::new(joint, times.to_vec(), values)
}

/// A demonstrated movement before correspondence: one trajectory per joint
/// plus the observed landing point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDemonstration {
    pub delta: f64,
    pub trajectories: Vec<JointTrajectory>,
    pub outcome: Outcome,
}

impl RawDemonstration {
    pub fn new(delta: f64, trajectories: Vec<JointTrajectory>, outcome: Outcome) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidTrajectory(format!("duration {delta}")));
        }
        if trajectories.len() != N_JOINTS {
            return Err(Error::InvalidTrajectory(format!(
                "expected {N_JOINTS} joint trajectories, got {}",
                trajectories.len()
            )));
        }
        for (j, tr) in trajectories.iter().enumerate() {
            if tr.joint != j {
                return Err(Error::InvalidTrajectory(format!("trajectory {j} is for joint {}", tr.joint)));
            }
            if tr.len() < 2 || tr.times[0] != 0.0 || (tr.duration() - delta).abs() > 1e-9 * delta.max(1.0) {
                return Err(Error::InvalidTrajectory(format!(
                    "joint {j} must span [0, {delta}] with at least 2 samples"
                )));
            }
        }
        if !outcome.is_finite() {
            return Err(Error::InvalidTrajectory("non-finite outcome".into()));
        }
        Ok(Self {
            delta,
            trajectories,
            outcome,
        })
    }

    /// Writes the line-oriented text form: `delta=`, six `joint=` blocks of
    /// `t,angle` rows, then `tau=x,y`.
    pub fn to_text(&self) -> String {
        let mut s = format!("delta={}\n", self.delta);
        for tr in &self.trajectories {
            s.push_str(&format!("joint={}\n", tr.joint));
            for (t, v) in tr.times.iter().zip(&tr.values) {
                s.push_str(&format!("{t},{v}\n"));
            }
        }
        s.push_str(&format!("tau={},{}\n", self.outcome.x, self.outcome.y));
        s
    }

    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let err = |m: String| Error::parse(origin, m);
        let num = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| err(format!("bad number {s:?}: {e}")))
        };
        let mut delta = None;
        let mut outcome = None;
        let mut blocks: Vec<(usize, Vec<f64>, Vec<f64>)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(v) = line.strip_prefix("delta=") {
                delta = Some(num(v)?);
            } else if let Some(v) = line.strip_prefix("joint=") {
                let j = v
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| err(format!("line {}: {e}", lineno + 1)))?;
                blocks.push((j, Vec::new(), Vec::new()));
            } else if let Some(v) = line.strip_prefix("tau=") {
                let (x, y) = v
                    .split_once(',')
                    .ok_or_else(|| err(format!("line {}: expected tau=x,y", lineno + 1)))?;
                outcome = Some(Outcome::new(num(x)?, num(y)?));
            } else {
                let (t, a) = line
                    .split_once(',')
                    .ok_or_else(|| err(format!("line {}: expected t,angle", lineno + 1)))?;
                let block = blocks
                    .last_mut()
                    .ok_or_else(|| err(format!("line {}: sample before joint= header", lineno + 1)))?;
                block.1.push(num(t)?);
                block.2.push(num(a)?);
            }
        }
        let delta = delta.ok_or_else(|| err("missing delta= header".into()))?;
        let outcome = outcome.ok_or_else(|| err("missing tau= line".into()))?;
        let trajectories = blocks
            .into_iter()
            .map(|(j, t, v)| JointTrajectory::new(j, t, v))
            .collect::<Result<Vec<_>>>()?;
        RawDemonstration::new(delta, trajectories, outcome)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_text(&text, path)
    }
}

/// Result of mapping a demonstration onto the primitive parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    pub params: PolicyParams,
    /// L2 residual per joint.
    pub residuals: [f64; N_JOINTS],
    /// Set when the optimizer could not beat the constant-mean fit.
    pub fell_back: bool,
}

impl Correspondence {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Precomputed linear model `u(t_k) = sum_i a_ki u_i` for one demonstration.
struct JointFit<'a> {
    design: Vec<[f64; KNOTS_PER_JOINT]>,
    target: &'a [f64],
}

impl JointFit<'_> {
    fn sq_residual(&self, knots: &[f64]) -> f64 {
        self.design
            .iter()
            .zip(self.target)
            .map(|(row, y)| {
                let pred: f64 = row.iter().zip(knots).map(|(a, u)| a * u).sum();
                (y - pred) * (y - pred)
            })
            .sum()
    }
}

/// Least-squares fit of the four knots of every joint to a demonstration.
///
/// Each joint is fit independently with the bounded simplex search, started
/// at the demonstrated values at the knot times and restarted from the
/// incumbent until it stops improving.
pub fn fit_demonstration(demo: &RawDemonstration) -> Result<Correspondence> {
    let delta = demo.delta;
    let sigma = sigma_for(delta);
    let mut params = PolicyParams::uniform(0.5);
    params.0[DURATION_INDEX] = PolicyParams::encode_duration(delta);
    let mut residuals = [0.0; N_JOINTS];
    let mut fell_back = false;

    for tr in &demo.trajectories {
        if tr.len() < KNOTS_PER_JOINT {
            return Err(Error::InvalidTrajectory(format!(
                "joint {} has {} samples, need at least {KNOTS_PER_JOINT}",
                tr.joint,
                tr.len()
            )));
        }
        let fit = JointFit {
            design: tr.times.iter().map(|&t| blend_weights(delta, sigma, t)).collect(),
            target: &tr.values,
        };
        let mean = (tr.values.iter().sum::<f64>() / tr.len() as f64).clamp(0.0, 1.0);
        let baseline = [mean; KNOTS_PER_JOINT];
        let baseline_sq = fit.sq_residual(&baseline);

        let mut best: Vec<f64> = knot_times(delta)
            .iter()
            .map(|&t| tr.value_at(t).clamp(0.0, 1.0))
            .collect();
        let mut best_sq = fit.sq_residual(&best);
        let mut step = 0.05;
        for _ in 0..60 {
            if best_sq < 1e-26 {
                break;
            }
            let opts = NelderMeadOptions {
                max_evals: 800,
                tol: 1e-26,
                pad_step: step,
                ..NelderMeadOptions::default()
            };
            let res = nelder_mead(
                |u| fit.sq_residual(u),
                Seed::known(best.clone(), best_sq),
                &[],
                &opts,
            )?;
            let gain = best_sq - res.best.value;
            if res.best.value < best_sq {
                best = res.best.point;
                best_sq = res.best.value;
            }
            if gain <= best_sq * 1e-9 {
                step *= 0.1;
                if step < 1e-9 {
                    break;
                }
            }
        }
        let knots = if best_sq <= baseline_sq {
            [best[0], best[1], best[2], best[3]]
        } else {
            warn!("joint {}: correspondence fit did not beat the mean fit", tr.joint);
            fell_back = true;
            best_sq = baseline_sq;
            baseline
        };
        params.set_knots(tr.joint, knots);
        residuals[tr.joint] = best_sq.sqrt();
    }
    Ok(Correspondence {
        params,
        residuals,
        fell_back,
    })
}

/// Samples every joint of `params` at `n` uniform times, producing a
/// demonstration-shaped movement.
pub fn sample_policy(params: &PolicyParams, n: usize, outcome: Outcome) -> Result<RawDemonstration> {
    let delta = params.duration();
    let times = sample_times(delta, n);
    let trajectories = (0..N_JOINTS)
        .map(|j| generate_trajectory(params, j, &times))
        .collect::<Result<Vec<_>>>()?;
    RawDemonstration::new(delta, trajectories, outcome)
}
