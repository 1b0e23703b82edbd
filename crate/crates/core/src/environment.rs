//! Fishing-arm surrogate.
//!
//! A six joint arm (alternating yaw and pitch axes) holds a rod. The joint
//! trajectories are played back over 50 samples; the float leaves the rod tip
//! at the instant of peak tip speed with the tip's velocity and flies
//! ballistically to the water plane `z = 0`. The landing point, multiplied by
//! a calibration scale, is the outcome. Observation noise is Gaussian with a
//! standard deviation that grows with the peak tip speed.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Outcome, Rect};
use crate::primitives::{self, JointTrajectory, PolicyParams, RawDemonstration, N_JOINTS};
use crate::rng::{self, streams, Rng};

/// Number of playback samples per movement.
pub const PLAYBACK_STEPS: usize = 50;
/// Observations are clipped into this box.
pub const OBSERVATION_BOX: Rect = Rect::square(1.5);

/// Starting configuration shared by every episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    /// Joint angles (radians) of the rest pose; a normalized joint value of
    /// 0.5 maps to these.
    pub joint_rest_angles: [f64; N_JOINTS],
    pub label: String,
}

impl Default for Context {
    fn default() -> Self {
        Self {
            joint_rest_angles: [0.0, 0.55, 0.0, -0.35, 0.0, -0.25],
            label: "c_org".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub link_lengths: [f64; N_JOINTS],
    pub rod_length: f64,
    /// Height of the first joint above the water.
    pub base_height: f64,
    pub gravity: f64,
    /// Full range (radians) swept by each joint as its normalized value goes 0 -> 1.
    pub joint_spans: [f64; N_JOINTS],
    /// Odd power of the actuator map from normalized value to angle offset;
    /// values above 1 make small offsets around the rest pose most likely.
    pub actuator_exponent: f64,
    pub scale: f64,
    /// Noise standard deviation per axis at zero tip speed (task units).
    pub noise_base: f64,
    /// Extra standard deviation per `reference_speed` of peak tip speed.
    pub noise_speed_gain: f64,
    pub reference_speed: f64,
    pub rng_seed: u64,
    pub noise_enabled: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            link_lengths: [0.20, 0.18, 0.16, 0.14, 0.12, 0.10],
            rod_length: 0.5,
            base_height: 0.3,
            gravity: 9.81,
            joint_spans: [0.56, 0.35, 0.42, 0.35, 0.42, 0.35],
            actuator_exponent: 3.0,
            scale: 0.3742,
            noise_base: 0.02,
            noise_speed_gain: 0.003,
            reference_speed: 1.0,
            rng_seed: 0,
            noise_enabled: true,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Config(format!("scale must be positive, got {}", self.scale)));
        }
        if !(self.noise_base >= 0.0) || !(self.noise_speed_gain >= 0.0) {
            return Err(Error::Config("noise parameters must be non-negative".into()));
        }
        if self.link_lengths.iter().any(|l| !(*l > 0.0)) || !(self.rod_length > 0.0) {
            return Err(Error::Config("link and rod lengths must be positive".into()));
        }
        if !(self.actuator_exponent >= 1.0) {
            return Err(Error::Config("actuator exponent must be at least 1".into()));
        }
        if !(self.gravity > 0.0) || !(self.reference_speed > 0.0) {
            return Err(Error::Config("gravity and reference speed must be positive".into()));
        }
        Ok(())
    }
}

/// Noise-free result of one movement plus the dynamic quantity driving noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throw {
    pub landing: Outcome,
    pub peak_speed: f64,
}

/// The simulated arm. Owns its noise RNG.
#[derive(Debug, Clone)]
pub struct Environment {
    config: EnvConfig,
    context: Context,
    rng: Rng,
}

type Mat3 = [[f64; 3]; 3];

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn rot_z(q: f64) -> Mat3 {
    let (s, c) = q.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn rot_x(q: f64) -> Mat3 {
    let (s, c) = q.sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

impl Environment {
    pub fn new(config: EnvConfig, context: Context) -> Result<Self> {
        config.validate()?;
        let rng = rng::stream(config.rng_seed, streams::ENV);
        Ok(Self { config, context, rng })
    }

    pub fn with_defaults(seed: u64) -> Self {
        let config = EnvConfig {
            rng_seed: seed,
            ..EnvConfig::default()
        };
        Self::new(config, Context::default()).expect("default configuration is valid")
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn context(&self) -> &Context {
        &self.context
    }

    /// Same arm and scale, fresh noise stream.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut config = self.config.clone();
        config.rng_seed = seed;
        Self {
            rng: rng::stream(seed, streams::ENV),
            config,
            context: self.context.clone(),
        }
    }

    pub fn set_noise_enabled(&mut self, enabled: bool) {
        self.config.noise_enabled = enabled;
    }

    pub fn set_scale(&mut self, scale: f64) -> Result<()> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Config(format!("scale must be positive, got {scale}")));
        }
        self.config.scale = scale;
        Ok(())
    }

    /// Joint angle (radians) of `joint` at normalized value `u`.
    fn joint_angle(&self, joint: usize, u: f64) -> f64 {
        let x = 2.0 * u - 1.0;
        let shaped = x.signum() * x.abs().powf(self.config.actuator_exponent);
        self.context.joint_rest_angles[joint] + 0.5 * shaped * self.config.joint_spans[joint]
    }

    /// Rod tip position for normalized joint values `u`.
    pub fn tip_position(&self, u: &[f64; N_JOINTS]) -> [f64; 3] {
        let mut r: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut p = [0.0, 0.0, self.config.base_height];
        let advance = |p: &mut [f64; 3], r: &Mat3, len: f64| {
            for (i, pi) in p.iter_mut().enumerate() {
                *pi += r[i][1] * len;
            }
        };
        for (j, &uj) in u.iter().enumerate() {
            let q = self.joint_angle(j, uj);
            let rot = if j % 2 == 0 { rot_z(q) } else { rot_x(q) };
            r = mat_mul(&r, &rot);
            advance(&mut p, &r, self.config.link_lengths[j]);
        }
        advance(&mut p, &r, self.config.rod_length);
        p
    }

    /// Noise-free throw for joint values sampled at `PLAYBACK_STEPS` uniform
    /// instants of a movement lasting `delta` seconds.
    fn throw_from_samples(&self, samples: &[[f64; N_JOINTS]], delta: f64) -> Throw {
        let tips: Vec<[f64; 3]> = samples.iter().map(|u| self.tip_position(u)).collect();
        let n = tips.len();
        let dt = delta / (n - 1) as f64;
        let velocity = |k: usize| -> [f64; 3] {
            let (a, b, span) = match k {
                0 => (0, 1, dt),
                k if k == n - 1 => (n - 2, n - 1, dt),
                k => (k - 1, k + 1, 2.0 * dt),
            };
            std::array::from_fn(|i| (tips[b][i] - tips[a][i]) / span)
        };
        let mut release = 0;
        let mut peak = 0.0;
        let mut release_velocity = [0.0; 3];
        for k in 0..n {
            let v = velocity(k);
            let speed = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if speed > peak {
                peak = speed;
                release = k;
                release_velocity = v;
            }
        }
        let p = tips[release];
        let [vx, vy, vz] = release_velocity;
        let g = self.config.gravity;
        let flight = if p[2] > 0.0 {
            (vz + (vz * vz + 2.0 * g * p[2]).sqrt()) / g
        } else {
            0.0
        };
        let landing = Outcome::new(p[0] + vx * flight, p[1] + vy * flight).scaled(self.config.scale);
        Throw {
            landing,
            peak_speed: peak,
        }
    }

    /// Noise-free throw of a policy.
    pub fn throw_policy(&self, params: &PolicyParams) -> Throw {
        let delta = params.duration();
        let sigma = primitives::sigma_for(delta);
        let times = primitives::sample_times(delta, PLAYBACK_STEPS);
        let knots: [[f64; 4]; N_JOINTS] = std::array::from_fn(|j| params.knots(j));
        let samples: Vec<[f64; N_JOINTS]> = times
            .iter()
            .map(|&t| {
                let w = primitives::blend_weights(delta, sigma, t);
                std::array::from_fn(|j| (0..4).map(|i| w[i] * knots[j][i]).sum())
            })
            .collect();
        self.throw_from_samples(&samples, delta)
    }

    /// Noise-free throw of raw joint trajectories (e.g. a demonstration).
    pub fn throw_trajectories(&self, trajectories: &[JointTrajectory], delta: f64) -> Throw {
        let times = primitives::sample_times(delta, PLAYBACK_STEPS);
        let samples: Vec<[f64; N_JOINTS]> = times
            .iter()
            .map(|&t| std::array::from_fn(|j| trajectories[j].value_at(t)))
            .collect();
        self.throw_from_samples(&samples, delta)
    }

    /// Per-axis noise standard deviation for a throw.
    pub fn noise_std(&self, throw: &Throw) -> f64 {
        self.config.noise_base + self.config.noise_speed_gain * throw.peak_speed / self.config.reference_speed
    }

    fn observe(&mut self, throw: Throw) -> Outcome {
        let mut out = throw.landing;
        if self.config.noise_enabled {
            let std = self.noise_std(&throw);
            let nx: f64 = self.rng.sample(StandardNormal);
            let ny: f64 = self.rng.sample(StandardNormal);
            out.x += std * nx;
            out.y += std * ny;
        }
        OBSERVATION_BOX.clip(&out)
    }

    /// Performs a policy and observes where the float lands.
    pub fn execute(&mut self, params: &PolicyParams) -> Outcome {
        let throw = self.throw_policy(params);
        self.observe(throw)
    }

    /// Performs a demonstrated movement as recorded.
    pub fn execute_demonstration(&mut self, demo: &RawDemonstration) -> Outcome {
        let throw = self.throw_trajectories(&demo.trajectories, demo.delta);
        self.observe(throw)
    }

    /// Noise-free landing of the motionless policy.
    pub fn rest_outcome(&self) -> Outcome {
        self.throw_policy(&PolicyParams::uniform(0.5)).landing
    }

    /// Uniformly random policy.
    pub fn random_policy(rng: &mut Rng) -> PolicyParams {
        let v: [f64; primitives::PARAM_DIM] = std::array::from_fn(|_| rng.random::<f64>());
        primitives::clamp_params(&v)
    }
}

/// Empirical 99th percentile of the landing radius (about the base) of
/// `n_samples` random noise-free policies.
pub fn landing_radius_p99(env: &Environment, n_samples: usize, seed: u64) -> f64 {
    let mut rng = rng::stream(seed, streams::CALIBRATION);
    let mut radii: Vec<f64> = (0..n_samples)
        .map(|_| {
            let p = Environment::random_policy(&mut rng);
            let l = env.throw_policy(&p).landing;
            l.x.hypot(l.y)
        })
        .collect();
    radii.sort_by(f64::total_cmp);
    let idx = ((radii.len() as f64 * 0.99).ceil() as usize).clamp(1, radii.len()) - 1;
    radii[idx]
}

/// Scale factor putting the 99th percentile landing radius of random
/// policies at 1.0.
pub fn calibrate_scale(env: &Environment, n_samples: usize, seed: u64) -> Result<f64> {
    if n_samples < 1000 {
        return Err(Error::Calibration(format!("need at least 1000 samples, got {n_samples}")));
    }
    let mut unit = env.clone();
    unit.set_scale(1.0)?;
    let mut rng = rng::stream(seed, streams::CALIBRATION);
    let landings: Vec<Outcome> = (0..n_samples)
        .map(|_| unit.throw_policy(&Environment::random_policy(&mut rng)).landing)
        .collect();
    let first = landings[0];
    if landings.iter().all(|l| l.distance(&first) < 1e-12) {
        return Err(Error::Calibration("all landings coincide".into()));
    }
    let p99 = landing_radius_p99(&unit, n_samples, seed);
    if !(p99 > 0.0 && p99.is_finite()) {
        return Err(Error::Calibration(format!("degenerate landing radius {p99}")));
    }
    Ok(1.0 / p99)
}
