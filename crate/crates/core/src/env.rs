//! Episodic environment: reset, step, observation construction, and episode
//! accounting.
//!
//! An episode starts at the configured start position with the minimum-speed
//! velocity pointed at the goal, draws fresh quasi-static RIS-link fading,
//! and runs a fixed number of steps (no early termination: the finishing
//! distance is measured at mission end). Each step applies the kinematics,
//! samples a new channel snapshot, scores the link under the commanded RIS
//! phases, and pays `rate + ζ·(d_prev - d_curr)`.
//!
//! Observations are `[q - goal, V, sinr]`; only the measured SINR enters the
//! state (no channel-state information). The network input scales positions
//! by 1/100, velocities by 1/v_max, and the SINR through `ln(1 + sinr)`;
//! the scaling is bijective and fixed so checkpoints stay portable.

use crate::baseline::{dinkelbach_optimize, no_ris_metrics};
use crate::channel::{sample_ris_links, sample_snapshot, ChannelError, ChannelSnapshot, RisLinks};
use crate::config::Config;
use crate::kinematics::{clamp_accel, finishing_distance, initial_velocity, step as kin_step, UavState};
use crate::link::{sinr_metrics, step_reward, LinkError, LinkMetrics, RisPhaseVector};
use crate::vec3::Vec3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Fixed divisor for position components entering the networks.
pub const POSITION_SCALE: f64 = 100.0;

/// Observation vector length: relative position, velocity, SINR.
pub const OBSERVATION_DIM: usize = 7;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("this environment expects {expected} RIS phases, got {got}")]
    PhaseCount { expected: usize, got: usize },
    #[error("RIS phases required in learned mode")]
    PhasesRequired,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Link(#[from] LinkError),
}

/// Who configures the RIS each slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RisMode {
    /// Phases come from the agent action.
    Learned,
    /// No RIS: reflected terms are zeroed.
    Absent,
    /// Per-slot perfect-CSI Dinkelbach phases.
    Oracle,
}

/// Raw observation; see [`Observation::to_network_input`] for the scaled form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub relative_position: Vec3,
    pub velocity: Vec3,
    /// Measured linear SINR of the current slot.
    pub sinr: f64,
}

impl Observation {
    /// Scaled 7-vector fed to the networks.
    pub fn to_network_input(&self, speed_max: f64) -> Vec<f64> {
        vec![
            self.relative_position.x / POSITION_SCALE,
            self.relative_position.y / POSITION_SCALE,
            self.relative_position.z / POSITION_SCALE,
            self.velocity.x / speed_max,
            self.velocity.y / speed_max,
            self.velocity.z / speed_max,
            self.sinr.ln_1p(),
        ]
    }

    /// Inverse of [`Observation::to_network_input`].
    pub fn from_network_input(input: &[f64], speed_max: f64) -> Observation {
        Observation {
            relative_position: Vec3::new(
                input[0] * POSITION_SCALE,
                input[1] * POSITION_SCALE,
                input[2] * POSITION_SCALE,
            ),
            velocity: Vec3::new(
                input[3] * speed_max,
                input[4] * speed_max,
                input[5] * speed_max,
            ),
            sinr: input[6].exp_m1(),
        }
    }
}

/// Mutable per-episode state.
#[derive(Clone, Debug)]
pub struct EpisodeState {
    pub uav: UavState,
    pub snapshot: ChannelSnapshot,
    pub goal: Vec3,
    pub prev_goal_distance: f64,
    pub initial_goal_distance: f64,
    pub cumulative_rate: f64,
    pub cumulative_reward: f64,
    pub step_index: u32,
    pub done: bool,
    ris_links: RisLinks,
    rng: ChaCha8Rng,
}

/// Result of one environment step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub metrics: LinkMetrics,
    pub done: bool,
}

/// The episodic simulation for one RIS mode.
#[derive(Clone, Copy, Debug)]
pub struct Env<'c> {
    cfg: &'c Config,
    mode: RisMode,
}

impl<'c> Env<'c> {
    pub fn new(cfg: &'c Config, mode: RisMode) -> Env<'c> {
        Env { cfg, mode }
    }

    pub fn mode(&self) -> RisMode {
        self.mode
    }

    /// Number of phase entries in the agent action for this mode.
    pub fn phase_count(&self) -> usize {
        match self.mode {
            RisMode::Learned => self.cfg.scenario.n_elements(),
            RisMode::Absent | RisMode::Oracle => 0,
        }
    }

    pub fn steps_per_episode(&self) -> u32 {
        self.cfg.hyper.steps_per_episode
    }

    /// Begin an episode. The observation's SINR entry is a probe at zero
    /// phases (or without the RIS in `Absent` mode).
    pub fn reset(&self, mut rng: ChaCha8Rng) -> Result<(EpisodeState, Observation), EnvError> {
        let sc = &self.cfg.scenario;
        let goal = match self.cfg.env.random_goal {
            None => sc.uav_goal,
            Some((lo, hi)) => Vec3::new(
                sample_range(&mut rng, lo.x, hi.x),
                sample_range(&mut rng, lo.y, hi.y),
                sample_range(&mut rng, lo.z, hi.z),
            ),
        };
        let uav = UavState {
            position: sc.uav_start,
            velocity: initial_velocity(sc.uav_start, goal, &self.cfg.limits),
            slot: 0,
        };
        let ris_links = sample_ris_links(sc, &self.cfg.channel, &mut rng);
        let snapshot = sample_snapshot(uav.position, 0, sc, &self.cfg.channel, &ris_links, &mut rng)?;
        let metrics = match self.mode {
            RisMode::Absent => no_ris_metrics(&snapshot, sc.tx_power, sc.jammer_power, sc.noise_power),
            _ => sinr_metrics(
                &snapshot,
                &RisPhaseVector::zeros(sc.n_elements()),
                sc.tx_power,
                sc.jammer_power,
                sc.noise_power,
            )?,
        };
        let distance = finishing_distance(uav.position, goal);
        let observation = Observation {
            relative_position: uav.position - goal,
            velocity: uav.velocity,
            sinr: metrics.sinr,
        };
        Ok((
            EpisodeState {
                uav,
                snapshot,
                goal,
                prev_goal_distance: distance,
                initial_goal_distance: distance,
                cumulative_rate: 0.0,
                cumulative_reward: 0.0,
                step_index: 0,
                done: false,
                ris_links,
                rng,
            },
            observation,
        ))
    }

    /// Advance one slot under the given controls. `phases` is required (and
    /// length-checked) in `Learned` mode and ignored otherwise.
    pub fn step(
        &self,
        state: &mut EpisodeState,
        phases: Option<&RisPhaseVector>,
        accel_raw: Vec3,
    ) -> Result<StepOutcome, EnvError> {
        if state.done {
            return Err(EnvError::EpisodeFinished);
        }
        let sc = &self.cfg.scenario;
        let accel = clamp_accel(accel_raw, &self.cfg.limits);
        state.uav = kin_step(&state.uav, &accel, sc.slot_length, &self.cfg.limits);

        if self.cfg.channel.ris_fading_per_slot {
            state.ris_links = sample_ris_links(sc, &self.cfg.channel, &mut state.rng);
        }
        let snapshot = sample_snapshot(
            state.uav.position,
            state.uav.slot,
            sc,
            &self.cfg.channel,
            &state.ris_links,
            &mut state.rng,
        )?;

        let metrics = match self.mode {
            RisMode::Learned => {
                let phases = phases.ok_or(EnvError::PhasesRequired)?;
                if phases.len() != sc.n_elements() {
                    return Err(EnvError::PhaseCount {
                        expected: sc.n_elements(),
                        got: phases.len(),
                    });
                }
                sinr_metrics(&snapshot, phases, sc.tx_power, sc.jammer_power, sc.noise_power)?
            }
            RisMode::Absent => no_ris_metrics(&snapshot, sc.tx_power, sc.jammer_power, sc.noise_power),
            RisMode::Oracle => {
                let solved = dinkelbach_optimize(
                    &snapshot,
                    sc.tx_power,
                    sc.jammer_power,
                    sc.noise_power,
                    &self.cfg.oracle,
                    &mut state.rng,
                );
                sinr_metrics(&snapshot, &solved.phases, sc.tx_power, sc.jammer_power, sc.noise_power)?
            }
        };

        let distance = finishing_distance(state.uav.position, state.goal);
        let reward = step_reward(
            metrics.rate,
            state.prev_goal_distance,
            distance,
            self.cfg.hyper.reward_weight,
        );

        state.snapshot = snapshot;
        state.prev_goal_distance = distance;
        state.cumulative_rate += metrics.rate;
        state.cumulative_reward += reward;
        state.step_index += 1;
        state.done = state.step_index >= self.cfg.hyper.steps_per_episode;

        Ok(StepOutcome {
            observation: Observation {
                relative_position: state.uav.position - state.goal,
                velocity: state.uav.velocity,
                sinr: metrics.sinr,
            },
            reward,
            metrics,
            done: state.done,
        })
    }
}

fn sample_range(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}
