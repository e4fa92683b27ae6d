//! Experiment orchestration: training loops, evaluation suites, mission-
//! duration sweeps, and artifact export.
//!
//! Every stochastic component draws from a labeled stream of the run seed,
//! so a (config, algorithm, seed) triple reproduces its metrics byte for
//! byte. Evaluation episodes are independent and run in parallel.

pub mod export;
pub mod metrics;
pub mod svg;
pub mod verify;

use crate::agents::{uniform_action, ActionMode, ActionSpace, Agent, AgentCheckpoint, AgentError, LearnerKind};
use crate::config::Config;
use crate::env::{Env, EnvError, EpisodeState, Observation, RisMode, OBSERVATION_DIM};
use crate::parallel;
use crate::replay::{ReplayBuffer, Transition};
use crate::rng::rng_stream;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("checkpoint was trained for a {checkpoint}-element action, scenario needs {scenario}")]
    ActionDimMismatch { checkpoint: usize, scenario: usize },
    #[error("checkpoint algorithm {0:?} is not recognized")]
    UnknownAlgorithm(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed artifact {path}: {reason}")]
    Malformed { path: String, reason: String },
}

/// Trainable schemes: the two learners plus the two reference schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainAlgorithm {
    /// DDPG steering both the RIS and the UAV.
    Ddpg,
    /// TD3 steering both the RIS and the UAV.
    Td3,
    /// TD3 trajectory planning without any RIS.
    Td3NoRis,
    /// TD3 trajectory planning with per-slot perfect-CSI Dinkelbach phases.
    Td3CsiBaseline,
}

impl TrainAlgorithm {
    pub const ALL: [TrainAlgorithm; 4] = [
        TrainAlgorithm::Ddpg,
        TrainAlgorithm::Td3,
        TrainAlgorithm::Td3NoRis,
        TrainAlgorithm::Td3CsiBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrainAlgorithm::Ddpg => "ddpg",
            TrainAlgorithm::Td3 => "td3",
            TrainAlgorithm::Td3NoRis => "td3-no-ris",
            TrainAlgorithm::Td3CsiBaseline => "td3-csi-baseline",
        }
    }

    pub fn parse(s: &str) -> Option<TrainAlgorithm> {
        TrainAlgorithm::ALL.into_iter().find(|a| a.name() == s)
    }

    pub fn learner(self) -> LearnerKind {
        match self {
            TrainAlgorithm::Ddpg => LearnerKind::Ddpg,
            _ => LearnerKind::Td3,
        }
    }

    pub fn ris_mode(self) -> RisMode {
        match self {
            TrainAlgorithm::Ddpg | TrainAlgorithm::Td3 => RisMode::Learned,
            TrainAlgorithm::Td3NoRis => RisMode::Absent,
            TrainAlgorithm::Td3CsiBaseline => RisMode::Oracle,
        }
    }
}

/// Everything produced by one training run.
#[derive(Clone, Debug)]
pub struct TrainResult {
    pub algorithm: TrainAlgorithm,
    pub seed: u64,
    /// Total reward per episode.
    pub episode_rewards: Vec<f64>,
    /// Running mean of the per-episode rewards.
    pub average_rewards: Vec<f64>,
    /// Mean critic loss per episode (NaN before updates start).
    pub critic_losses: Vec<f64>,
    pub checkpoint: AgentCheckpoint,
    /// Set when a non-finite training signal stopped the run early; the
    /// checkpoint is the last good parameter set.
    pub aborted: Option<String>,
}

/// Train one agent. Deterministic for a given (config, algorithm, seed).
pub fn train(cfg: &Config, algorithm: TrainAlgorithm, seed: u64) -> Result<TrainResult, HarnessError> {
    let env = Env::new(cfg, algorithm.ris_mode());
    let space = ActionSpace {
        phase_count: env.phase_count(),
        accel_max: cfg.limits.accel_max,
    };
    let hyper = &cfg.hyper;
    let mut agent = Agent::new(
        algorithm.learner(),
        OBSERVATION_DIM,
        space,
        hyper,
        &mut rng_stream(seed, "train/agent-init"),
    );
    let mut buffer = ReplayBuffer::new(hyper.replay_capacity);
    let mut explore_rng = rng_stream(seed, "train/explore");
    let mut replay_rng = rng_stream(seed, "train/replay");
    let mut update_rng = rng_stream(seed, "train/update");
    let config_hash = cfg.content_hash();
    let rng_label = format!("master:{seed}");

    let mut episode_rewards = Vec::with_capacity(hyper.episodes as usize);
    let mut critic_losses = Vec::with_capacity(hyper.episodes as usize);
    let mut aborted = None;
    let mut global_step: u64 = 0;

    'training: for episode in 0..hyper.episodes {
        let (mut state, obs) = env.reset(rng_stream(seed, &format!("train/episode/{episode}")))?;
        let mut net_obs = obs.to_network_input(cfg.limits.speed_max);
        let mut loss_sum = 0.0;
        let mut loss_count = 0u32;
        for _ in 0..hyper.steps_per_episode {
            let action = if global_step < hyper.warmup_random_steps {
                uniform_action(space.dim(), &mut explore_rng)
            } else {
                agent.select_action(&net_obs, ActionMode::Explore, &mut explore_rng)
            };
            let (phases, accel) = space.denormalize(&action);
            let phases_opt = (space.phase_count > 0).then_some(&phases);
            let out = env.step(&mut state, phases_opt, accel)?;
            let next_obs = out.observation.to_network_input(cfg.limits.speed_max);
            buffer.push(Transition {
                state: net_obs,
                action,
                reward: out.reward,
                next_state: next_obs.clone(),
                terminal: out.done && hyper.mask_bootstrap_at_timeout,
            });
            net_obs = next_obs;
            global_step += 1;

            if global_step >= hyper.warmup_random_steps && buffer.len() >= hyper.batch_size {
                let batch = buffer
                    .sample(hyper.batch_size, &mut replay_rng)
                    .expect("size checked above");
                match agent.update(&batch, &mut update_rng) {
                    Ok(diag) => {
                        loss_sum += diag.critic_loss;
                        loss_count += 1;
                    }
                    Err(
                        err @ (AgentError::NonFinite { .. }
                        | AgentError::Mlp(crate::mlp::MlpError::NonFiniteGradient)),
                    ) => {
                        log::error!("episode {episode}: {err}; stopping with the last good parameters");
                        aborted = Some(err.to_string());
                        episode_rewards.push(state.cumulative_reward);
                        critic_losses.push(if loss_count > 0 {
                            loss_sum / f64::from(loss_count)
                        } else {
                            f64::NAN
                        });
                        break 'training;
                    }
                    Err(err) => return Err(err.into()),
                }
            }
        }
        episode_rewards.push(state.cumulative_reward);
        critic_losses.push(if loss_count > 0 {
            loss_sum / f64::from(loss_count)
        } else {
            f64::NAN
        });
        if (episode + 1) % 100 == 0 {
            log::info!(
                "{} seed {seed}: episode {}/{} reward {:.3}",
                algorithm.name(),
                episode + 1,
                hyper.episodes,
                state.cumulative_reward
            );
        }
    }

    let average_rewards = metrics::running_average(&episode_rewards);
    let checkpoint = agent.to_checkpoint(
        algorithm.name(),
        &rng_label,
        episode_rewards.len() as u64,
        &config_hash,
    );
    Ok(TrainResult {
        algorithm,
        seed,
        episode_rewards,
        average_rewards,
        critic_losses,
        checkpoint,
        aborted,
    })
}

/// One evaluation rollout's scores.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalEpisode {
    pub episode: u64,
    /// Sum of per-slot spectral efficiencies over the episode, bits/s/Hz.
    pub cumulative_rate: f64,
    /// Distance to the goal at mission end, meters.
    pub finishing_distance: f64,
    pub total_reward: f64,
}

/// Deterministic-policy evaluation summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub algorithm: String,
    pub seed: u64,
    pub n_episodes: u64,
    pub mean_rate: f64,
    pub std_rate: f64,
    pub mean_finishing_distance: f64,
    pub std_finishing_distance: f64,
    pub episodes: Vec<EvalEpisode>,
    pub config_hash: String,
    pub code_version: String,
}

/// Evaluate a checkpoint with the exploration noise disabled.
pub fn evaluate(
    checkpoint: &AgentCheckpoint,
    cfg: &Config,
    n_episodes: u64,
    seed: u64,
) -> Result<EvalReport, HarnessError> {
    let algorithm = TrainAlgorithm::parse(&checkpoint.algorithm)
        .ok_or_else(|| HarnessError::UnknownAlgorithm(checkpoint.algorithm.clone()))?;
    let env = Env::new(cfg, algorithm.ris_mode());
    if checkpoint.action_space.phase_count != env.phase_count() {
        return Err(HarnessError::ActionDimMismatch {
            checkpoint: checkpoint.action_space.phase_count,
            scenario: env.phase_count(),
        });
    }
    if checkpoint.config_hash != cfg.content_hash() {
        log::warn!("checkpoint was trained under a different configuration");
    }
    let agent = Agent::from_checkpoint(checkpoint, &cfg.hyper)?;

    let indices: Vec<u64> = (0..n_episodes).collect();
    let runs = parallel::map_collect(&indices, |&i| -> Result<EvalEpisode, HarnessError> {
        let (mut state, obs) = env.reset(rng_stream(seed, &format!("eval/episode/{i}")))?;
        rollout(&env, &agent, &mut state, obs, cfg)?;
        Ok(EvalEpisode {
            episode: i,
            cumulative_rate: state.cumulative_rate,
            finishing_distance: state.prev_goal_distance,
            total_reward: state.cumulative_reward,
        })
    });
    let mut episodes = Vec::with_capacity(runs.len());
    for r in runs {
        episodes.push(r?);
    }
    let (mean_rate, std_rate) = metrics::mean_std(
        &episodes.iter().map(|e| e.cumulative_rate).collect::<Vec<_>>(),
    );
    let (mean_fd, std_fd) = metrics::mean_std(
        &episodes.iter().map(|e| e.finishing_distance).collect::<Vec<_>>(),
    );
    Ok(EvalReport {
        algorithm: checkpoint.algorithm.clone(),
        seed,
        n_episodes,
        mean_rate,
        std_rate,
        mean_finishing_distance: mean_fd,
        std_finishing_distance: std_fd,
        episodes,
        config_hash: cfg.content_hash(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

fn rollout(
    env: &Env,
    agent: &Agent,
    state: &mut EpisodeState,
    first_obs: Observation,
    cfg: &Config,
) -> Result<(), HarnessError> {
    let space = agent.action_space();
    // Exploit mode never touches the rng.
    let mut unused = rng_stream(0, "eval/unused");
    let mut net_obs = first_obs.to_network_input(cfg.limits.speed_max);
    while !state.done {
        let action = agent.select_action(&net_obs, ActionMode::Exploit, &mut unused);
        let (phases, accel) = space.denormalize(&action);
        let phases_opt = (space.phase_count > 0).then_some(&phases);
        let out = env.step(state, phases_opt, accel)?;
        net_obs = out.observation.to_network_input(cfg.limits.speed_max);
    }
    Ok(())
}

/// One per-slot record of a traced evaluation episode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub sinr: f64,
    pub rate: f64,
    pub reward: f64,
    pub goal_distance: f64,
}

/// Replay one zero-noise episode, recording every slot.
pub fn trace_episode(
    checkpoint: &AgentCheckpoint,
    cfg: &Config,
    seed: u64,
) -> Result<Vec<TraceRow>, HarnessError> {
    let algorithm = TrainAlgorithm::parse(&checkpoint.algorithm)
        .ok_or_else(|| HarnessError::UnknownAlgorithm(checkpoint.algorithm.clone()))?;
    let env = Env::new(cfg, algorithm.ris_mode());
    let agent = Agent::from_checkpoint(checkpoint, &cfg.hyper)?;
    let space = agent.action_space();
    let mut unused = rng_stream(0, "eval/unused");
    let (mut state, obs) = env.reset(rng_stream(seed, "eval/episode/0"))?;
    let mut net_obs = obs.to_network_input(cfg.limits.speed_max);
    let mut rows = Vec::new();
    while !state.done {
        let action = agent.select_action(&net_obs, ActionMode::Exploit, &mut unused);
        let (phases, accel) = space.denormalize(&action);
        let phases_opt = (space.phase_count > 0).then_some(&phases);
        let out = env.step(&mut state, phases_opt, accel)?;
        rows.push(TraceRow {
            t: state.step_index,
            x: state.uav.position.x,
            y: state.uav.position.y,
            z: state.uav.position.z,
            vx: state.uav.velocity.x,
            vy: state.uav.velocity.y,
            vz: state.uav.velocity.z,
            sinr: out.metrics.sinr,
            rate: out.metrics.rate,
            reward: out.reward,
            goal_distance: state.prev_goal_distance,
        });
        net_obs = out.observation.to_network_input(cfg.limits.speed_max);
    }
    Ok(rows)
}

/// Aggregate row of a mission-duration sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub duration_s: f64,
    pub mean_rate: f64,
    pub std_rate: f64,
    pub mean_finishing_distance: f64,
    pub std_finishing_distance: f64,
}

/// A sweep's aggregate table plus the per-episode detail behind it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub algorithm: String,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
    /// `(duration, eval episode)` pairs for scatter-style exports.
    pub detail: Vec<(f64, EvalEpisode)>,
}

/// Train and evaluate once per mission duration.
pub fn sweep_mission_duration(
    cfg: &Config,
    algorithm: TrainAlgorithm,
    durations: &[f64],
    seed: u64,
    eval_episodes: u64,
) -> Result<SweepResult, HarnessError> {
    let mut rows = Vec::with_capacity(durations.len());
    let mut detail = Vec::new();
    for &duration in durations {
        let run_cfg = cfg.with_mission_time(duration)?;
        log::info!("sweep: duration {duration} s ({} slots)", run_cfg.scenario.slot_count);
        let trained = train(&run_cfg, algorithm, seed)?;
        let report = evaluate(&trained.checkpoint, &run_cfg, eval_episodes, seed)?;
        rows.push(SweepRow {
            duration_s: duration,
            mean_rate: report.mean_rate,
            std_rate: report.std_rate,
            mean_finishing_distance: report.mean_finishing_distance,
            std_finishing_distance: report.std_finishing_distance,
        });
        detail.extend(report.episodes.iter().map(|e| (duration, *e)));
    }
    Ok(SweepResult {
        algorithm: algorithm.name().to_string(),
        seed,
        rows,
        detail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> Config {
        let text = crate::config::DESK_SCALE_TOML
            .replace("episodes = 500", "episodes = 3")
            .replace("steps_per_episode = 100", "steps_per_episode = 20")
            .replace("warmup_random_steps = 1000", "warmup_random_steps = 30")
            .replace("batch_size = 64", "batch_size = 16")
            .replace("actor_hidden = [32, 64, 32]", "actor_hidden = [8, 8]")
            .replace("critic_hidden = [32, 64]", "critic_hidden = [8, 8]");
        Config::from_toml_str(&text).unwrap()
    }

    #[test]
    fn train_produces_running_averages_and_checkpoint() {
        let cfg = tiny_cfg();
        let result = train(&cfg, TrainAlgorithm::Ddpg, 7).unwrap();
        assert_eq!(result.episode_rewards.len(), 3);
        assert_eq!(result.average_rewards.len(), 3);
        assert!(result.aborted.is_none());
        let expected = metrics::running_average(&result.episode_rewards);
        assert_eq!(result.average_rewards, expected);
        assert_eq!(result.checkpoint.algorithm, "ddpg");
        assert_eq!(result.checkpoint.episode, 3);
    }

    #[test]
    fn same_seed_reproduces_training_bitwise() {
        let cfg = tiny_cfg();
        let a = train(&cfg, TrainAlgorithm::Td3, 5).unwrap();
        let b = train(&cfg, TrainAlgorithm::Td3, 5).unwrap();
        assert_eq!(a.episode_rewards, b.episode_rewards);
        assert_eq!(a.checkpoint.actor, b.checkpoint.actor);
        let c = train(&cfg, TrainAlgorithm::Td3, 6).unwrap();
        assert_ne!(a.episode_rewards, c.episode_rewards);
    }

    #[test]
    fn evaluate_is_deterministic_and_sized() {
        let cfg = tiny_cfg();
        let trained = train(&cfg, TrainAlgorithm::Td3NoRis, 3).unwrap();
        let r1 = evaluate(&trained.checkpoint, &cfg, 5, 11).unwrap();
        let r2 = evaluate(&trained.checkpoint, &cfg, 5, 11).unwrap();
        assert_eq!(r1.episodes, r2.episodes);
        assert_eq!(r1.episodes.len(), 5);
        assert!(r1.mean_rate.is_finite());
        assert!(r1.episodes.iter().all(|e| e.finishing_distance >= 0.0));
    }

    #[test]
    fn evaluate_rejects_mismatched_scenario() {
        let cfg = tiny_cfg();
        let trained = train(&cfg, TrainAlgorithm::Td3, 2).unwrap();
        let mut bigger = cfg.clone();
        bigger.scenario.ris_cols += 1;
        assert!(matches!(
            evaluate(&trained.checkpoint, &bigger, 2, 0),
            Err(HarnessError::ActionDimMismatch { .. })
        ));
    }

    #[test]
    fn trace_rows_cover_the_episode() {
        let cfg = tiny_cfg();
        let trained = train(&cfg, TrainAlgorithm::Td3, 4).unwrap();
        let rows = trace_episode(&trained.checkpoint, &cfg, 9).unwrap();
        assert_eq!(rows.len(), cfg.hyper.steps_per_episode as usize);
        assert_eq!(rows.last().unwrap().t, cfg.hyper.steps_per_episode);
    }

    #[test]
    fn sweep_emits_one_row_per_duration() {
        let cfg = tiny_cfg();
        let result = sweep_mission_duration(&cfg, TrainAlgorithm::Td3NoRis, &[2.0, 4.0], 1, 3).unwrap();
        assert_eq!(result.rows.len(), 2);
        assert_eq!(result.detail.len(), 6);
        assert_eq!(result.rows[0].duration_s, 2.0);
        assert!(result.rows.iter().all(|r| r.mean_rate.is_finite()));
    }
}
