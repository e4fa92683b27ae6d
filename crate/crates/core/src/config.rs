//! Scenario constants and hyperparameters.
//!
//! A single TOML document configures the whole simulator. Powers are written
//! in dBm and ratios in dB in the file and stored linear internally; every
//! invariant is checked at load time and violations name the offending key.
//! Unknown keys are rejected. The environment variable `ANTIJAM_MASTER_SEED`
//! overrides the master seed (and nothing else).

use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Environment variable that overrides `master_seed` when set.
pub const MASTER_SEED_ENV: &str = "ANTIJAM_MASTER_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {key} = {value}: {reason}")]
    Invalid {
        key: &'static str,
        value: String,
        reason: String,
    },
    #[error("config i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn invalid(key: &'static str, value: impl std::fmt::Display, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        value: value.to_string(),
        reason: reason.into(),
    }
}

/// dB value to linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

// ---------------------------------------------------------------------------
// Raw file schema (units as written in the file)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    master_seed: u64,
    scenario: RawScenario,
    kinematics: RawKinematics,
    channel: RawChannel,
    hyper: RawHyper,
    #[serde(default)]
    env: RawEnv,
    #[serde(default)]
    oracle: RawOracle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    bs_position: Vec3,
    jammer_position: Vec3,
    ris_reference: Vec3,
    ris_rows: u32,
    ris_cols: u32,
    uav_start: Vec3,
    uav_goal: Vec3,
    mission_time_s: f64,
    slot_length_s: f64,
    tx_power_dbm: f64,
    jammer_power_dbm: f64,
    noise_power_dbm: f64,
    element_spacing_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKinematics {
    accel_max: f64,
    speed_min: f64,
    speed_max: f64,
    pitch_max_deg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    ref_path_loss_db: f64,
    exponent_direct: f64,
    exponent_ris: f64,
    rician_xi1: f64,
    rician_xi2: f64,
    rician_ris_db: f64,
    #[serde(default)]
    ris_fading_per_slot: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHyper {
    discount: f64,
    actor_lr: f64,
    critic_lr: f64,
    tau_actor: f64,
    tau_critic: f64,
    replay_capacity: usize,
    episodes: u32,
    #[serde(default)]
    steps_per_episode: Option<u32>,
    batch_size: usize,
    exploration_noise_var: f64,
    policy_noise_var: f64,
    noise_clip: f64,
    policy_delay: u32,
    reward_weight: f64,
    #[serde(default = "default_warmup")]
    warmup_random_steps: u64,
    #[serde(default)]
    mask_bootstrap_at_timeout: bool,
    #[serde(default = "default_actor_hidden")]
    actor_hidden: Vec<usize>,
    #[serde(default = "default_critic_hidden")]
    critic_hidden: Vec<usize>,
}

fn default_warmup() -> u64 {
    1000
}

fn default_actor_hidden() -> Vec<usize> {
    vec![64, 128, 64]
}

fn default_critic_hidden() -> Vec<usize> {
    vec![64, 128]
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnv {
    /// Optional box for per-episode random goal sampling; both corners must be
    /// given together. When absent every episode targets `uav_goal`.
    #[serde(default)]
    random_goal_min: Option<Vec3>,
    #[serde(default)]
    random_goal_max: Option<Vec3>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    objective: String,
    tolerance: f64,
    max_outer_iters: u32,
    max_inner_iters: u32,
    restarts: u32,
}

impl Default for RawOracle {
    fn default() -> Self {
        RawOracle {
            objective: "sinr".to_string(),
            tolerance: 1e-8,
            max_outer_iters: 30,
            max_inner_iters: 200,
            restarts: 3,
        }
    }
}

// ---------------------------------------------------------------------------
// Validated bundle (linear units)
// ---------------------------------------------------------------------------

/// Geometry, powers, and slot schedule. Powers in watts (linear).
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub bs_position: Vec3,
    pub jammer_position: Vec3,
    pub ris_reference: Vec3,
    /// RIS rows (y direction), `n_y`.
    pub ris_rows: u32,
    /// RIS columns (x direction), `n_x`.
    pub ris_cols: u32,
    pub uav_start: Vec3,
    pub uav_goal: Vec3,
    /// Mission duration in seconds.
    pub mission_time: f64,
    /// Slot length in seconds.
    pub slot_length: f64,
    /// Number of slots; `slot_count * slot_length == mission_time`.
    pub slot_count: u32,
    /// Transmit power of the base station, watts.
    pub tx_power: f64,
    /// Transmit power of the jammer, watts.
    pub jammer_power: f64,
    /// Noise power at the UAV receiver, watts.
    pub noise_power: f64,
    /// Element spacing over wavelength; the steering model assumes 0.5.
    pub element_spacing_ratio: f64,
}

impl ScenarioConfig {
    /// Total number of reflecting elements, `N = ris_cols * ris_rows`.
    pub fn n_elements(&self) -> usize {
        (self.ris_cols as usize) * (self.ris_rows as usize)
    }
}

/// Mobility constraint constants.
#[derive(Clone, Debug, PartialEq)]
pub struct KinematicLimits {
    /// Per-axis acceleration bound, m/s².
    pub accel_max: f64,
    /// Minimum speed, m/s.
    pub speed_min: f64,
    /// Maximum speed, m/s.
    pub speed_max: f64,
    /// Maximum pitch angle, radians.
    pub pitch_max: f64,
}

/// Propagation constants (linear ratios).
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelParams {
    /// Path-loss power ratio at the 1 m reference distance.
    pub ref_path_loss: f64,
    /// Path-loss exponent of the direct BS-UAV and jammer-UAV links.
    pub exponent_direct: f64,
    /// Path-loss exponent of the BS-RIS and jammer-RIS links.
    pub exponent_ris: f64,
    /// Elevation-dependent Rician factor coefficients for the direct links.
    pub rician_xi1: f64,
    pub rician_xi2: f64,
    /// Rician factor of the BS-RIS and jammer-RIS links (linear).
    pub rician_ris: f64,
    /// Redraw the RIS-link small-scale fading every slot instead of once per
    /// episode (the terrestrial endpoints are static, so the default is
    /// quasi-static).
    pub ris_fading_per_slot: bool,
}

/// Learner hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperParams {
    pub discount: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub tau_actor: f64,
    pub tau_critic: f64,
    pub replay_capacity: usize,
    pub episodes: u32,
    pub steps_per_episode: u32,
    pub batch_size: usize,
    pub exploration_noise_var: f64,
    pub policy_noise_var: f64,
    /// Clip bound applied to the TD3 target policy noise (plain bound, not a
    /// variance).
    pub noise_clip: f64,
    pub policy_delay: u32,
    /// Weight of the goal-progress term in the step reward.
    pub reward_weight: f64,
    /// Steps of uniform random actions before the policy takes over.
    pub warmup_random_steps: u64,
    /// If true, reaching the episode step limit is stored as a terminal
    /// transition (masking the bootstrap). Off by default: running out of
    /// slots is not an absorbing state.
    pub mask_bootstrap_at_timeout: bool,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
}

/// Optional per-episode goal randomization.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvOptions {
    pub random_goal: Option<(Vec3, Vec3)>,
}

/// Ratio optimized by the perfect-CSI phase oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleObjective {
    /// Signal-to-interference-plus-noise ratio (jammer in the denominator).
    Sinr,
    /// Signal-to-noise ratio (jammer ignored).
    Snr,
}

/// Settings for the Dinkelbach phase optimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleParams {
    pub objective: OracleObjective,
    pub tolerance: f64,
    pub max_outer_iters: u32,
    pub max_inner_iters: u32,
    pub restarts: u32,
}

/// The validated configuration bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub master_seed: u64,
    pub scenario: ScenarioConfig,
    pub limits: KinematicLimits,
    pub channel: ChannelParams,
    pub hyper: HyperParams,
    pub env: EnvOptions,
    pub oracle: OracleParams,
    raw: RawConfig,
}

impl Config {
    /// Parse and validate a TOML document. Does not consult the environment.
    pub fn from_toml_str(text: &str) -> Result<Config, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Config::from_raw(raw)
    }

    /// Load from a file, applying the `ANTIJAM_MASTER_SEED` override if set.
    pub fn load_from_path(path: &std::path::Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Config::from_toml_str(&text)?;
        if let Ok(v) = std::env::var(MASTER_SEED_ENV) {
            let seed: u64 = v.parse().map_err(|_| {
                invalid("master_seed", &v, format!("{MASTER_SEED_ENV} must be an unsigned integer"))
            })?;
            cfg.set_master_seed(seed);
        }
        Ok(cfg)
    }

    /// Re-emit the configuration as TOML (file units). Loading the result
    /// reproduces an equal bundle.
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(&self.raw).expect("config serialization cannot fail")
    }

    /// SHA-256 hash of the canonical TOML form, hex-encoded. Used for
    /// provenance stamps in metrics and checkpoints.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_toml_string().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn set_master_seed(&mut self, seed: u64) {
        self.master_seed = seed;
        self.raw.master_seed = seed;
    }

    /// Override the mission duration, recomputing the slot count and episode
    /// length. Used by mission-duration sweeps.
    pub fn with_mission_time(&self, mission_time: f64) -> Result<Config, ConfigError> {
        let mut raw = self.raw.clone();
        raw.scenario.mission_time_s = mission_time;
        raw.hyper.steps_per_episode = None;
        Config::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Config, ConfigError> {
        let s = &raw.scenario;
        if s.bs_position != Vec3::ZERO {
            return Err(invalid(
                "scenario.bs_position",
                format!("{:?}", s.bs_position.to_array()),
                "the base station must sit at the origin",
            ));
        }
        if s.jammer_position.z.abs() > 1e-12 {
            return Err(invalid(
                "scenario.jammer_position",
                s.jammer_position.z,
                "the jammer is terrestrial; its z-coordinate must be 0",
            ));
        }
        if s.ris_rows == 0 || s.ris_cols == 0 {
            return Err(invalid(
                "scenario.ris_rows/ris_cols",
                format!("{}x{}", s.ris_cols, s.ris_rows),
                "the RIS needs at least one element",
            ));
        }
        if !(s.mission_time_s > 0.0) || !(s.slot_length_s > 0.0) {
            return Err(invalid(
                "scenario.mission_time_s/slot_length_s",
                format!("{}/{}", s.mission_time_s, s.slot_length_s),
                "mission time and slot length must be positive",
            ));
        }
        let ratio = s.mission_time_s / s.slot_length_s;
        let slot_count = ratio.round();
        if (ratio - slot_count).abs() > 1e-9 * ratio.abs() || slot_count < 1.0 {
            return Err(invalid(
                "scenario.mission_time_s",
                s.mission_time_s,
                format!("must be an integer multiple of slot_length_s = {}", s.slot_length_s),
            ));
        }
        let slot_count = slot_count as u32;
        if (s.element_spacing_ratio - 0.5).abs() > 1e-12 {
            return Err(invalid(
                "scenario.element_spacing_ratio",
                s.element_spacing_ratio,
                "the steering model assumes half-wavelength spacing (0.5)",
            ));
        }
        let scenario = ScenarioConfig {
            bs_position: s.bs_position,
            jammer_position: s.jammer_position,
            ris_reference: s.ris_reference,
            ris_rows: s.ris_rows,
            ris_cols: s.ris_cols,
            uav_start: s.uav_start,
            uav_goal: s.uav_goal,
            mission_time: s.mission_time_s,
            slot_length: s.slot_length_s,
            slot_count,
            tx_power: dbm_to_watts(s.tx_power_dbm),
            jammer_power: dbm_to_watts(s.jammer_power_dbm),
            noise_power: dbm_to_watts(s.noise_power_dbm),
            element_spacing_ratio: s.element_spacing_ratio,
        };
        // dBm inputs are always positive in watts, but keep the check in case
        // the conversion path changes.
        if !(scenario.tx_power > 0.0 && scenario.jammer_power > 0.0 && scenario.noise_power > 0.0) {
            return Err(invalid(
                "scenario.*_power_dbm",
                "non-positive",
                "all powers must be positive",
            ));
        }

        let k = &raw.kinematics;
        if !(k.accel_max > 0.0) {
            return Err(invalid("kinematics.accel_max", k.accel_max, "must be positive"));
        }
        if !(k.speed_min > 0.0) {
            return Err(invalid("kinematics.speed_min", k.speed_min, "must be positive"));
        }
        if k.speed_min >= k.speed_max {
            return Err(invalid(
                "kinematics.speed_min",
                k.speed_min,
                format!("v_min ≥ v_max (speed_max = {})", k.speed_max),
            ));
        }
        let pitch_max = k.pitch_max_deg.to_radians();
        if !(pitch_max > 0.0 && pitch_max < std::f64::consts::FRAC_PI_2) {
            return Err(invalid(
                "kinematics.pitch_max_deg",
                k.pitch_max_deg,
                "must lie strictly between 0 and 90 degrees",
            ));
        }
        let limits = KinematicLimits {
            accel_max: k.accel_max,
            speed_min: k.speed_min,
            speed_max: k.speed_max,
            pitch_max,
        };

        let c = &raw.channel;
        let ref_path_loss = db_to_linear(c.ref_path_loss_db);
        if !(ref_path_loss > 0.0) {
            return Err(invalid("channel.ref_path_loss_db", c.ref_path_loss_db, "must be finite"));
        }
        if !(c.exponent_direct > 2.0) {
            return Err(invalid(
                "channel.exponent_direct",
                c.exponent_direct,
                "the direct path-loss exponent must exceed 2",
            ));
        }
        if !(c.exponent_ris > 0.0) {
            return Err(invalid("channel.exponent_ris", c.exponent_ris, "must be positive"));
        }
        if c.rician_xi1 < 0.0 {
            return Err(invalid("channel.rician_xi1", c.rician_xi1, "must be nonnegative"));
        }
        let rician_ris = db_to_linear(c.rician_ris_db);
        let channel = ChannelParams {
            ref_path_loss,
            exponent_direct: c.exponent_direct,
            exponent_ris: c.exponent_ris,
            rician_xi1: c.rician_xi1,
            rician_xi2: c.rician_xi2,
            rician_ris,
            ris_fading_per_slot: c.ris_fading_per_slot,
        };

        let h = &raw.hyper;
        if !(h.discount > 0.0 && h.discount < 1.0) {
            return Err(invalid("hyper.discount", h.discount, "must lie strictly in (0, 1)"));
        }
        for (key, tau) in [("hyper.tau_actor", h.tau_actor), ("hyper.tau_critic", h.tau_critic)] {
            if !(tau > 0.0 && tau <= 1.0) {
                return Err(invalid(key, tau, "must lie in (0, 1]"));
            }
        }
        for (key, lr) in [("hyper.actor_lr", h.actor_lr), ("hyper.critic_lr", h.critic_lr)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(invalid(key, lr, "must be positive and finite"));
            }
        }
        if h.batch_size == 0 || h.batch_size > h.replay_capacity {
            return Err(invalid(
                "hyper.batch_size",
                h.batch_size,
                format!("must lie in [1, replay_capacity = {}]", h.replay_capacity),
            ));
        }
        if h.policy_delay == 0 {
            return Err(invalid("hyper.policy_delay", h.policy_delay, "must be at least 1"));
        }
        if h.episodes == 0 {
            return Err(invalid("hyper.episodes", h.episodes, "must be at least 1"));
        }
        let steps_per_episode = h.steps_per_episode.unwrap_or(slot_count);
        if steps_per_episode == 0 || steps_per_episode > slot_count {
            return Err(invalid(
                "hyper.steps_per_episode",
                steps_per_episode,
                format!("must lie in [1, slot_count = {slot_count}]"),
            ));
        }
        for (key, v) in [
            ("hyper.exploration_noise_var", h.exploration_noise_var),
            ("hyper.policy_noise_var", h.policy_noise_var),
            ("hyper.noise_clip", h.noise_clip),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(key, v, "must be nonnegative and finite"));
            }
        }
        if !h.reward_weight.is_finite() {
            return Err(invalid("hyper.reward_weight", h.reward_weight, "must be finite"));
        }
        if h.actor_hidden.is_empty() || h.actor_hidden.iter().any(|&d| d == 0) {
            return Err(invalid(
                "hyper.actor_hidden",
                format!("{:?}", h.actor_hidden),
                "needs at least one nonzero layer width",
            ));
        }
        if h.critic_hidden.is_empty() || h.critic_hidden.iter().any(|&d| d == 0) {
            return Err(invalid(
                "hyper.critic_hidden",
                format!("{:?}", h.critic_hidden),
                "needs at least one nonzero layer width",
            ));
        }
        let hyper = HyperParams {
            discount: h.discount,
            actor_lr: h.actor_lr,
            critic_lr: h.critic_lr,
            tau_actor: h.tau_actor,
            tau_critic: h.tau_critic,
            replay_capacity: h.replay_capacity,
            episodes: h.episodes,
            steps_per_episode,
            batch_size: h.batch_size,
            exploration_noise_var: h.exploration_noise_var,
            policy_noise_var: h.policy_noise_var,
            noise_clip: h.noise_clip,
            policy_delay: h.policy_delay,
            reward_weight: h.reward_weight,
            warmup_random_steps: h.warmup_random_steps,
            mask_bootstrap_at_timeout: h.mask_bootstrap_at_timeout,
            actor_hidden: h.actor_hidden.clone(),
            critic_hidden: h.critic_hidden.clone(),
        };

        let env = match (&raw.env.random_goal_min, &raw.env.random_goal_max) {
            (None, None) => EnvOptions { random_goal: None },
            (Some(lo), Some(hi)) => {
                if lo.x > hi.x || lo.y > hi.y || lo.z > hi.z {
                    return Err(invalid(
                        "env.random_goal_min",
                        format!("{:?}", lo.to_array()),
                        "each component must not exceed random_goal_max",
                    ));
                }
                EnvOptions {
                    random_goal: Some((*lo, *hi)),
                }
            }
            _ => {
                return Err(invalid(
                    "env.random_goal_min/random_goal_max",
                    "partial",
                    "both corners must be given together",
                ))
            }
        };

        let o = &raw.oracle;
        let objective = match o.objective.as_str() {
            "sinr" => OracleObjective::Sinr,
            "snr" => OracleObjective::Snr,
            other => {
                return Err(invalid(
                    "oracle.objective",
                    other,
                    "must be \"sinr\" or \"snr\"",
                ))
            }
        };
        if !(o.tolerance > 0.0) {
            return Err(invalid("oracle.tolerance", o.tolerance, "must be positive"));
        }
        let oracle = OracleParams {
            objective,
            tolerance: o.tolerance,
            max_outer_iters: o.max_outer_iters.max(1),
            max_inner_iters: o.max_inner_iters.max(1),
            restarts: o.restarts,
        };

        Ok(Config {
            master_seed: raw.master_seed,
            scenario,
            limits,
            channel,
            hyper,
            env,
            oracle,
            raw,
        })
    }

    /// Full-scale defaults: the reference scenario geometry with a 5x4 RIS,
    /// a 30 s mission in 0.1 s slots, and the published learner settings.
    /// Transmit powers default to 20 dBm (invented: the link budget needs
    /// them but no value is published; see README).
    pub fn full_scale() -> Config {
        Config::from_toml_str(FULL_SCALE_TOML).expect("built-in config must validate")
    }

    /// Desk-scale defaults used by the acceptance suite: the same physics
    /// with a compressed geometry, an eight-element RIS, a 10 s mission, and
    /// small networks so that training completes in CPU minutes.
    pub fn desk_scale() -> Config {
        Config::from_toml_str(DESK_SCALE_TOML).expect("built-in config must validate")
    }
}

/// Built-in full-scale configuration (see `configs/full.toml`).
pub const FULL_SCALE_TOML: &str = r#"
master_seed = 42

[scenario]
bs_position = [0.0, 0.0, 0.0]
jammer_position = [-25.0, -25.0, 0.0]
ris_reference = [50.0, 50.0, 30.0]
ris_rows = 4
ris_cols = 5
uav_start = [-200.0, -100.0, 5.0]
uav_goal = [100.0, 60.0, 50.0]
mission_time_s = 30.0
slot_length_s = 0.1
tx_power_dbm = 20.0
jammer_power_dbm = 20.0
noise_power_dbm = -169.0
element_spacing_ratio = 0.5

[kinematics]
accel_max = 2.0
speed_min = 2.0
speed_max = 40.0
pitch_max_deg = 45.0

[channel]
ref_path_loss_db = -30.0
exponent_direct = 3.5
exponent_ris = 2.8
rician_xi1 = 1.0
rician_xi2 = 4.4
rician_ris_db = 3.0

[hyper]
discount = 0.99
actor_lr = 1e-4
critic_lr = 1e-3
tau_actor = 5e-3
tau_critic = 5e-3
replay_capacity = 100000
episodes = 3000
steps_per_episode = 300
batch_size = 128
exploration_noise_var = 0.2
policy_noise_var = 0.2
noise_clip = 0.5
policy_delay = 2
reward_weight = 1.0
warmup_random_steps = 1000
actor_hidden = [64, 128, 64]
critic_hidden = [64, 128]
"#;

/// Built-in desk-scale configuration (see `configs/desk.toml`).
pub const DESK_SCALE_TOML: &str = r#"
master_seed = 0

[scenario]
bs_position = [0.0, 0.0, 0.0]
jammer_position = [-12.0, -10.0, 0.0]
ris_reference = [14.0, 12.0, 8.0]
ris_rows = 2
ris_cols = 4
uav_start = [-30.0, -18.0, 4.0]
uav_goal = [22.0, 14.0, 10.0]
mission_time_s = 10.0
slot_length_s = 0.1
tx_power_dbm = 20.0
jammer_power_dbm = 20.0
noise_power_dbm = -110.0
element_spacing_ratio = 0.5

[kinematics]
accel_max = 2.0
speed_min = 2.0
speed_max = 40.0
pitch_max_deg = 45.0

[channel]
ref_path_loss_db = -30.0
exponent_direct = 3.5
exponent_ris = 2.8
rician_xi1 = 1.0
rician_xi2 = 4.4
rician_ris_db = 3.0

[hyper]
discount = 0.99
actor_lr = 1e-4
critic_lr = 1e-3
tau_actor = 5e-3
tau_critic = 5e-3
replay_capacity = 100000
episodes = 500
steps_per_episode = 100
batch_size = 64
exploration_noise_var = 0.2
policy_noise_var = 0.2
noise_clip = 0.5
policy_delay = 2
reward_weight = 1.0
warmup_random_steps = 1000
actor_hidden = [32, 64, 32]
critic_hidden = [32, 64]
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scale_converts_units() {
        let cfg = Config::full_scale();
        // -30 dB reference path loss is 1e-3 linear.
        assert!((cfg.channel.ref_path_loss - 1e-3).abs() < 1e-18);
        // 3 dB RIS Rician factor.
        assert!((cfg.channel.rician_ris - db_to_linear(3.0)).abs() < 1e-15);
        // 20 dBm transmit power is 0.1 W.
        assert!((cfg.scenario.tx_power - 0.1).abs() < 1e-15);
        // -169 dBm noise power.
        assert!((cfg.scenario.noise_power - 1.2589254117941663e-20).abs() < 1e-32);
        assert_eq!(cfg.scenario.slot_count, 300);
        assert_eq!(cfg.scenario.n_elements(), 20);
        assert_eq!(cfg.hyper.steps_per_episode, 300);
    }

    #[test]
    fn db_round_trip() {
        for &db in &[-169.0, -30.0, 0.0, 3.0, 20.0] {
            let back = linear_to_db(db_to_linear(db));
            assert!((back - db).abs() <= 1e-12 * db.abs().max(1.0), "{db} -> {back}");
        }
        for &lin in &[1e-20, 1e-3, 1.0, 1.9952623149688795] {
            let back = db_to_linear(linear_to_db(lin));
            assert!(((back - lin) / lin).abs() <= 1e-12, "{lin} -> {back}");
        }
    }

    #[test]
    fn speed_order_violation_names_key() {
        let text = FULL_SCALE_TOML
            .replace("speed_min = 2.0", "speed_min = 5.0")
            .replace("speed_max = 40.0", "speed_max = 2.0");
        let err = Config::from_toml_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("speed_min"), "{msg}");
        assert!(msg.contains("5"), "{msg}");
        assert!(msg.contains("v_min ≥ v_max"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{FULL_SCALE_TOML}\n[extra]\nfoo = 1\n");
        assert!(matches!(Config::from_toml_str(&text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn mission_time_must_divide() {
        let text = FULL_SCALE_TOML.replace("mission_time_s = 30.0", "mission_time_s = 30.05");
        let err = Config::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("integer multiple"));
    }

    #[test]
    fn terrestrial_jammer_required() {
        let text = FULL_SCALE_TOML.replace(
            "jammer_position = [-25.0, -25.0, 0.0]",
            "jammer_position = [-25.0, -25.0, 3.0]",
        );
        let err = Config::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("jammer"));
    }

    #[test]
    fn serialization_round_trips_to_equal_bundle() {
        let cfg = Config::desk_scale();
        let text = cfg.to_toml_string();
        let back = Config::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.content_hash(), back.content_hash());
    }

    #[test]
    fn mission_time_override_recomputes_slots() {
        let cfg = Config::desk_scale();
        let longer = cfg.with_mission_time(20.0).unwrap();
        assert_eq!(longer.scenario.slot_count, 200);
        assert_eq!(longer.hyper.steps_per_episode, 200);
    }
}
