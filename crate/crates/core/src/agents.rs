//! DDPG and TD3 learners over the MLP stack.
//!
//! Both keep an actor with a soft-updated target copy; DDPG regresses one
//! critic to `y = r + γ·Q'(s', μ'(s'))`, TD3 regresses two critics to the
//! minimum of the target pair under a smoothed target action, and delays
//! actor/target refreshes. Actions are normalized to `[-1, 1]^{N+3}`: the
//! first N entries map to RIS phases in `[-π, π)`, the last three to
//! per-axis accelerations in `[-a_max, a_max]`.
//!
//! Batch gradients accumulate over fixed-size chunks in index order, so
//! updates are bit-deterministic for a given seed regardless of the thread
//! count.

use crate::config::HyperParams;
use crate::link::{wrap_angle, RisPhaseVector};
use crate::mlp::{Activation, Gradients, Mlp, MlpError, Optimizer};
use crate::parallel;
use crate::replay::Transition;
use crate::vec3::Vec3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("transition dimensions do not match the agent")]
    DimensionMismatch,
    #[error("non-finite {quantity}; update aborted")]
    NonFinite { quantity: &'static str },
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error("unsupported checkpoint version {0}")]
    CheckpointVersion(u32),
    #[error("checkpoint is internally inconsistent: {0}")]
    CorruptCheckpoint(String),
}

/// Learner family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Ddpg,
    Td3,
}

impl LearnerKind {
    pub fn critic_count(self) -> usize {
        match self {
            LearnerKind::Ddpg => 1,
            LearnerKind::Td3 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Ddpg => "ddpg",
            LearnerKind::Td3 => "td3",
        }
    }
}

/// Shape and scaling of the normalized action vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionSpace {
    /// Number of RIS phase entries (0 when the agent does not steer the RIS).
    pub phase_count: usize,
    /// Acceleration bound used to scale the last three entries, m/s².
    pub accel_max: f64,
}

impl ActionSpace {
    pub fn dim(&self) -> usize {
        self.phase_count + 3
    }

    /// Map a normalized action to physical controls: phases scaled by π
    /// (with +π wrapping to -π) and accelerations scaled by `accel_max`.
    pub fn denormalize(&self, action: &[f64]) -> (RisPhaseVector, Vec3) {
        assert_eq!(action.len(), self.dim(), "action dimension mismatch");
        let phases = RisPhaseVector::new(
            action[..self.phase_count]
                .iter()
                .map(|&a| wrap_angle(a * PI))
                .collect(),
        );
        let acc = &action[self.phase_count..];
        let accel = Vec3::new(
            acc[0] * self.accel_max,
            acc[1] * self.accel_max,
            acc[2] * self.accel_max,
        );
        (phases, accel)
    }
}

/// Uniform random action in the closed box `[-1, 1]^dim` (warm-up phase).
pub fn uniform_action(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

/// Clip a drawn target-policy smoothing noise to the configured bound.
pub fn clip_policy_noise(raw: f64, clip: f64) -> f64 {
    raw.clamp(-clip, clip)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionMode {
    /// Actor output plus clipped Gaussian exploration noise.
    Explore,
    /// Raw actor output (evaluation).
    Exploit,
}

/// Diagnostics from one learner update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateDiagnostics {
    /// Mean squared Bellman error, averaged over critics.
    pub critic_loss: f64,
    /// Mean critic value of the refreshed policy, when the actor stepped.
    pub actor_objective: Option<f64>,
    pub actor_updated: bool,
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// Portable text snapshot of a whole learner.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AgentCheckpoint {
    pub version: u32,
    pub kind: LearnerKind,
    /// Harness-level training variant (e.g. which baseline), stored opaquely.
    pub algorithm: String,
    /// Label of the random stream family the run was trained under.
    pub rng_label: String,
    /// Training episodes completed when the snapshot was taken.
    pub episode: u64,
    pub state_dim: usize,
    pub action_space: ActionSpace,
    pub actor: Mlp,
    pub actor_opt: Optimizer,
    pub target_actor: Mlp,
    pub critics: Vec<Mlp>,
    pub critic_opts: Vec<Optimizer>,
    pub target_critics: Vec<Mlp>,
    pub update_calls: u64,
    /// Hash of the configuration the agent was built for.
    pub config_hash: String,
}

/// An actor-critic learner (networks, targets, optimizers, hyperparameters).
#[derive(Clone, Debug)]
pub struct Agent {
    kind: LearnerKind,
    state_dim: usize,
    action_space: ActionSpace,
    hyper: HyperParams,
    actor: Mlp,
    actor_opt: Optimizer,
    target_actor: Mlp,
    critics: Vec<Mlp>,
    critic_opts: Vec<Optimizer>,
    target_critics: Vec<Mlp>,
    update_calls: u64,
    actor_updates: u64,
}

impl Agent {
    pub fn new(
        kind: LearnerKind,
        state_dim: usize,
        action_space: ActionSpace,
        hyper: &HyperParams,
        rng: &mut impl Rng,
    ) -> Agent {
        let mut actor_dims = vec![state_dim];
        actor_dims.extend_from_slice(&hyper.actor_hidden);
        actor_dims.push(action_space.dim());
        let actor = Mlp::new(&actor_dims, Activation::Relu, Activation::Tanh, rng);

        let mut critic_dims = vec![state_dim + action_space.dim()];
        critic_dims.extend_from_slice(&hyper.critic_hidden);
        critic_dims.push(1);
        let critics: Vec<Mlp> = (0..kind.critic_count())
            .map(|_| Mlp::new(&critic_dims, Activation::Relu, Activation::Identity, rng))
            .collect();

        let actor_opt = Optimizer::adam(hyper.actor_lr, &actor);
        let critic_opts = critics.iter().map(|c| Optimizer::adam(hyper.critic_lr, c)).collect();
        Agent {
            kind,
            state_dim,
            action_space,
            hyper: hyper.clone(),
            target_actor: actor.clone(),
            target_critics: critics.clone(),
            actor,
            actor_opt,
            critics,
            critic_opts,
            update_calls: 0,
            actor_updates: 0,
        }
    }

    pub fn kind(&self) -> LearnerKind {
        self.kind
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_space(&self) -> ActionSpace {
        self.action_space
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn critics(&self) -> &[Mlp] {
        &self.critics
    }

    pub fn critics_mut(&mut self) -> &mut [Mlp] {
        &mut self.critics
    }

    pub fn target_actor(&self) -> &Mlp {
        &self.target_actor
    }

    pub fn target_critics(&self) -> &[Mlp] {
        &self.target_critics
    }

    /// Mutable targets, for scripted mechanism checks.
    pub fn target_critics_mut(&mut self) -> &mut [Mlp] {
        &mut self.target_critics
    }

    pub fn update_calls(&self) -> u64 {
        self.update_calls
    }

    pub fn actor_updates(&self) -> u64 {
        self.actor_updates
    }

    /// Force targets to equal the online networks (test scaffolding).
    pub fn sync_targets(&mut self) {
        self.target_actor = self.actor.clone();
        self.target_critics = self.critics.clone();
    }

    /// Normalized action for `state`; exploration adds clipped Gaussian noise.
    pub fn select_action(&self, state: &[f64], mode: ActionMode, rng: &mut impl Rng) -> Vec<f64> {
        let mut action = self.actor.output(state).expect("state dimension checked by caller");
        if mode == ActionMode::Explore {
            let std = self.hyper.exploration_noise_var.sqrt();
            for a in &mut action {
                let noise: f64 = rng.sample(StandardNormal);
                *a = (*a + std * noise).clamp(-1.0, 1.0);
            }
        }
        action
    }

    /// One learner update on a sampled batch.
    pub fn update(
        &mut self,
        batch: &[&Transition],
        rng: &mut impl Rng,
    ) -> Result<UpdateDiagnostics, AgentError> {
        if batch.is_empty() {
            return Err(AgentError::EmptyBatch);
        }
        let action_dim = self.action_space.dim();
        if batch
            .iter()
            .any(|t| t.state.len() != self.state_dim || t.action.len() != action_dim || t.next_state.len() != self.state_dim)
        {
            return Err(AgentError::DimensionMismatch);
        }
        if batch.iter().any(|t| !t.reward.is_finite()) {
            return Err(AgentError::NonFinite { quantity: "reward" });
        }
        match self.kind {
            LearnerKind::Ddpg => self.ddpg_update(batch),
            LearnerKind::Td3 => self.td3_update(batch, rng),
        }
    }

    fn ddpg_update(&mut self, batch: &[&Transition]) -> Result<UpdateDiagnostics, AgentError> {
        let targets = self.bootstrap_targets(batch, None)?;
        let critic_loss = self.regress_critics(batch, &targets)?;
        let actor_objective = self.ascend_actor(batch)?;
        self.soft_update_targets()?;
        self.update_calls += 1;
        self.actor_updates += 1;
        Ok(UpdateDiagnostics {
            critic_loss,
            actor_objective: Some(actor_objective),
            actor_updated: true,
        })
    }

    fn td3_update(
        &mut self,
        batch: &[&Transition],
        rng: &mut impl Rng,
    ) -> Result<UpdateDiagnostics, AgentError> {
        // Target-action smoothing noise, drawn sequentially so parallel
        // chunking cannot affect the stream.
        let std = self.hyper.policy_noise_var.sqrt();
        let clip = self.hyper.noise_clip;
        let noise: Vec<Vec<f64>> = batch
            .iter()
            .map(|_| {
                (0..self.action_space.dim())
                    .map(|_| {
                        let n: f64 = rng.sample(StandardNormal);
                        clip_policy_noise(std * n, clip)
                    })
                    .collect()
            })
            .collect();
        let targets = self.bootstrap_targets(batch, Some(&noise))?;
        let critic_loss = self.regress_critics(batch, &targets)?;

        self.update_calls += 1;
        let refresh_policy = self.update_calls % u64::from(self.hyper.policy_delay) == 0;
        let actor_objective = if refresh_policy {
            let objective = self.ascend_actor(batch)?;
            self.soft_update_targets()?;
            self.actor_updates += 1;
            Some(objective)
        } else {
            None
        };
        Ok(UpdateDiagnostics {
            critic_loss,
            actor_objective,
            actor_updated: refresh_policy,
        })
    }

    /// Bellman targets `y_i = r_i + γ·Q'(s', a')`, with the bootstrap dropped
    /// on terminal transitions. With `noise`, the target action is the
    /// clipped, perturbed target-actor output and the target value is the
    /// minimum over the target critics. Public so mechanism checks can script
    /// it directly.
    pub fn bootstrap_targets(
        &self,
        batch: &[&Transition],
        noise: Option<&[Vec<f64>]>,
    ) -> Result<Vec<f64>, AgentError> {
        let gamma = self.hyper.discount;
        let chunk = chunk_size(batch.len());
        let items: Vec<(usize, &Transition)> = batch.iter().copied().enumerate().collect();
        let chunks = parallel::map_chunks(&items, chunk, |part| -> Result<Vec<f64>, MlpError> {
            let mut ys = Vec::with_capacity(part.len());
            for (i, t) in part {
                let mut next_action = self.target_actor.output(&t.next_state)?;
                if let Some(noise) = noise {
                    for (a, n) in next_action.iter_mut().zip(&noise[*i]) {
                        *a = (*a + n).clamp(-1.0, 1.0);
                    }
                }
                let input = concat(&t.next_state, &next_action);
                let mut value = f64::INFINITY;
                for critic in &self.target_critics {
                    value = value.min(critic.output(&input)?[0]);
                }
                let bootstrap = if t.terminal { 0.0 } else { gamma * value };
                ys.push(t.reward + bootstrap);
            }
            Ok(ys)
        });
        let mut targets = Vec::with_capacity(batch.len());
        for part in chunks {
            targets.extend(part?);
        }
        if targets.iter().any(|y| !y.is_finite()) {
            return Err(AgentError::NonFinite { quantity: "bootstrap target" });
        }
        Ok(targets)
    }

    /// Regress every critic toward the shared targets; returns the mean
    /// squared error averaged over critics.
    fn regress_critics(&mut self, batch: &[&Transition], targets: &[f64]) -> Result<f64, AgentError> {
        let inputs: Vec<Vec<f64>> = batch.iter().map(|t| concat(&t.state, &t.action)).collect();
        let scale = 1.0 / batch.len() as f64;
        let chunk = chunk_size(batch.len());
        let mut total_loss = 0.0;
        for ci in 0..self.critics.len() {
            let critic = &self.critics[ci];
            let items: Vec<(usize, &Vec<f64>)> = inputs.iter().enumerate().collect();
            let parts = parallel::map_chunks(&items, chunk, |part| -> Result<(Gradients, f64), MlpError> {
                let mut grads = Gradients::zeros_like(critic);
                let mut loss = 0.0;
                for (i, input) in part {
                    let pass = critic.forward(input)?;
                    let err = pass.output()[0] - targets[*i];
                    loss += err * err * scale;
                    grads.add(&critic.backward(&pass, &[2.0 * err * scale])?);
                }
                Ok((grads, loss))
            });
            let mut grads = Gradients::zeros_like(critic);
            let mut loss = 0.0;
            for part in parts {
                let (g, l) = part?;
                grads.add(&g);
                loss += l;
            }
            if !loss.is_finite() {
                return Err(AgentError::NonFinite { quantity: "critic loss" });
            }
            self.critic_opts[ci].apply(&mut self.critics[ci], &grads)?;
            total_loss += loss;
        }
        Ok(total_loss / self.critics.len() as f64)
    }

    /// Gradient-ascent step on the actor through the first critic; returns
    /// the mean critic value. Ascent runs as descent on the negated
    /// objective.
    fn ascend_actor(&mut self, batch: &[&Transition]) -> Result<f64, AgentError> {
        let critic = &self.critics[0];
        let actor = &self.actor;
        let scale = 1.0 / batch.len() as f64;
        let state_dim = self.state_dim;
        let chunk = chunk_size(batch.len());
        let parts = parallel::map_chunks(batch, chunk, |part| -> Result<(Gradients, f64), MlpError> {
            let mut grads = Gradients::zeros_like(actor);
            let mut objective = 0.0;
            for t in part {
                let actor_pass = actor.forward(&t.state)?;
                let input = concat(&t.state, actor_pass.output());
                let critic_pass = critic.forward(&input)?;
                objective += critic_pass.output()[0] * scale;
                let dq = critic.backward(&critic_pass, &[scale])?;
                grads.add(&actor.backward(&actor_pass, &dq.input[state_dim..])?);
            }
            Ok((grads, objective))
        });
        let mut grads = Gradients::zeros_like(actor);
        let mut objective = 0.0;
        for part in parts {
            let (g, o) = part?;
            grads.add(&g);
            objective += o;
        }
        if !objective.is_finite() {
            return Err(AgentError::NonFinite { quantity: "actor objective" });
        }
        grads.scale(-1.0);
        self.actor_opt.apply(&mut self.actor, &grads)?;
        Ok(objective)
    }

    fn soft_update_targets(&mut self) -> Result<(), AgentError> {
        self.target_actor.soft_update_from(&self.actor, self.hyper.tau_actor)?;
        for (target, online) in self.target_critics.iter_mut().zip(&self.critics) {
            target.soft_update_from(online, self.hyper.tau_critic)?;
        }
        Ok(())
    }

    pub fn to_checkpoint(
        &self,
        algorithm: &str,
        rng_label: &str,
        episode: u64,
        config_hash: &str,
    ) -> AgentCheckpoint {
        AgentCheckpoint {
            version: CHECKPOINT_VERSION,
            kind: self.kind,
            algorithm: algorithm.to_string(),
            rng_label: rng_label.to_string(),
            episode,
            state_dim: self.state_dim,
            action_space: self.action_space,
            actor: self.actor.clone(),
            actor_opt: self.actor_opt.clone(),
            target_actor: self.target_actor.clone(),
            critics: self.critics.clone(),
            critic_opts: self.critic_opts.clone(),
            target_critics: self.target_critics.clone(),
            update_calls: self.update_calls,
            config_hash: config_hash.to_string(),
        }
    }

    pub fn from_checkpoint(cp: &AgentCheckpoint, hyper: &HyperParams) -> Result<Agent, AgentError> {
        if cp.version != CHECKPOINT_VERSION {
            return Err(AgentError::CheckpointVersion(cp.version));
        }
        for net in std::iter::once(&cp.actor)
            .chain(std::iter::once(&cp.target_actor))
            .chain(&cp.critics)
            .chain(&cp.target_critics)
        {
            net.validate()
                .map_err(|e| AgentError::CorruptCheckpoint(e.to_string()))?;
        }
        let dim = cp.action_space.dim();
        if cp.actor.input_dim() != cp.state_dim
            || cp.actor.output_dim() != dim
            || cp.critics.len() != cp.kind.critic_count()
            || cp.critics.iter().any(|c| c.input_dim() != cp.state_dim + dim || c.output_dim() != 1)
        {
            return Err(AgentError::CorruptCheckpoint(
                "network shapes do not match the declared dimensions".to_string(),
            ));
        }
        Ok(Agent {
            kind: cp.kind,
            state_dim: cp.state_dim,
            action_space: cp.action_space,
            hyper: hyper.clone(),
            actor: cp.actor.clone(),
            actor_opt: cp.actor_opt.clone(),
            target_actor: cp.target_actor.clone(),
            critics: cp.critics.clone(),
            critic_opts: cp.critic_opts.clone(),
            target_critics: cp.target_critics.clone(),
            update_calls: cp.update_calls,
            actor_updates: 0,
        })
    }
}

fn chunk_size(batch: usize) -> usize {
    // Eight chunks regardless of thread count keeps accumulation order fixed.
    batch.div_ceil(8)
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::rng::rng_stream;
    use approx::assert_relative_eq;

    fn hyper() -> HyperParams {
        let mut h = Config::desk_scale().hyper;
        h.actor_hidden = vec![8, 8];
        h.critic_hidden = vec![8, 8];
        h
    }

    fn space() -> ActionSpace {
        ActionSpace {
            phase_count: 2,
            accel_max: 2.0,
        }
    }

    fn transition(rng: &mut impl Rng, state_dim: usize, action_dim: usize, reward: f64, terminal: bool) -> Transition {
        Transition {
            state: (0..state_dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            action: (0..action_dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            reward,
            next_state: (0..state_dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            terminal,
        }
    }

    #[test]
    fn denormalize_maps_bounds() {
        let s = space();
        let (phases, accel) = s.denormalize(&[0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(phases.angles(), &[0.0, 0.0]);
        assert_eq!(accel, Vec3::ZERO);

        // +1 phase wraps to -pi (half-open interval); -1 stays at -pi.
        let (phases, accel) = s.denormalize(&[1.0, -1.0, -1.0, 0.5, 1.0]);
        assert_eq!(phases.angles()[0], -PI);
        assert_eq!(phases.angles()[1], -PI);
        assert_eq!(accel, Vec3::new(-2.0, 1.0, 2.0));
    }

    #[test]
    fn exploit_is_deterministic_and_explore_reduces_to_it_without_noise() {
        let mut rng = rng_stream(1, "agents/select");
        let mut h = hyper();
        let agent = Agent::new(LearnerKind::Ddpg, 7, space(), &h, &mut rng);
        let state = vec![0.3, -0.2, 0.5, 0.0, 0.1, -0.7, 0.9];
        let a1 = agent.select_action(&state, ActionMode::Exploit, &mut rng);
        let a2 = agent.select_action(&state, ActionMode::Exploit, &mut rng);
        assert_eq!(a1, a2);

        h.exploration_noise_var = 0.0;
        let agent = Agent::new(LearnerKind::Ddpg, 7, space(), &h, &mut rng_stream(1, "agents/select"));
        let mut noise_rng = rng_stream(2, "agents/noise");
        let explored = agent.select_action(&state, ActionMode::Explore, &mut noise_rng);
        let exploited = agent.select_action(&state, ActionMode::Exploit, &mut noise_rng);
        assert_eq!(explored, exploited);
    }

    #[test]
    fn explored_actions_stay_in_the_box() {
        let mut rng = rng_stream(3, "agents/box");
        let agent = Agent::new(LearnerKind::Td3, 7, space(), &hyper(), &mut rng);
        let state = vec![0.0; 7];
        for _ in 0..100_000 {
            let a = agent.select_action(&state, ActionMode::Explore, &mut rng);
            assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn ddpg_zero_discount_regresses_to_rewards() {
        let mut h = hyper();
        h.discount = 0.0; // degenerate discount: target is exactly the reward
        h.critic_lr = 5e-3;
        let mut rng = rng_stream(4, "agents/regress");
        let mut agent = Agent::new(LearnerKind::Ddpg, 4, ActionSpace { phase_count: 0, accel_max: 2.0 }, &h, &mut rng);
        let batch: Vec<Transition> = (0..8)
            .map(|i| transition(&mut rng, 4, 3, (i as f64) / 4.0 - 1.0, false))
            .collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let mut last = f64::INFINITY;
        for _ in 0..4000 {
            last = agent.update(&refs, &mut rng).unwrap().critic_loss;
        }
        assert!(last < 1e-3, "critic did not regress to rewards: mse {last}");
    }

    #[test]
    fn terminal_transitions_drop_the_bootstrap() {
        let mut rng = rng_stream(5, "agents/terminal");
        let agent = Agent::new(LearnerKind::Ddpg, 4, ActionSpace { phase_count: 0, accel_max: 2.0 }, &hyper(), &mut rng);
        let mut t = transition(&mut rng, 4, 3, 1.25, true);
        let refs = [&t];
        let y = agent.bootstrap_targets(&refs, None).unwrap();
        assert_eq!(y[0], 1.25);
        t.terminal = false;
        let refs = [&t];
        let y_boot = agent.bootstrap_targets(&refs, None).unwrap();
        assert_ne!(y_boot[0], 1.25);
    }

    #[test]
    fn target_networks_move_by_at_most_tau() {
        let mut rng = rng_stream(6, "agents/tau");
        let mut agent = Agent::new(LearnerKind::Ddpg, 4, ActionSpace { phase_count: 0, accel_max: 2.0 }, &hyper(), &mut rng);
        let tau = agent.hyper.tau_actor;
        let batch: Vec<Transition> = (0..4).map(|_| transition(&mut rng, 4, 3, 0.5, false)).collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let target_before = agent.target_actor.clone();
        let online_before = agent.actor.clone();
        agent.update(&refs, &mut rng).unwrap();
        // target' - target = tau * (online_new - target_old), so the move is
        // bounded by tau times the online-target gap.
        let gap = online_before.max_param_abs_diff(&target_before);
        let online_step = agent.actor.max_param_abs_diff(&online_before);
        let moved = agent.target_actor.max_param_abs_diff(&target_before);
        assert!(moved <= tau * (gap + online_step) + 1e-12, "moved {moved}");
    }

    #[test]
    fn target_gap_shrinks_when_online_is_frozen() {
        let mut rng = rng_stream(7, "agents/drift");
        let mut agent = Agent::new(LearnerKind::Td3, 4, ActionSpace { phase_count: 0, accel_max: 2.0 }, &hyper(), &mut rng);
        // Drift the targets away, then apply soft updates with the online
        // nets untouched: the gap must shrink by at least (1 - tau).
        for layer in agent.target_actor.layers_mut() {
            for w in &mut layer.weights {
                *w += 0.1;
            }
        }
        let gap_before = agent.target_actor.max_param_abs_diff(&agent.actor);
        agent.soft_update_targets().unwrap();
        let gap_after = agent.target_actor.max_param_abs_diff(&agent.actor);
        let tau = agent.hyper.tau_actor;
        assert!(gap_after <= (1.0 - tau) * gap_before + 1e-12);
    }

    #[test]
    fn td3_uses_the_lesser_target_critic() {
        let mut rng = rng_stream(8, "agents/min");
        let mut h = hyper();
        h.policy_noise_var = 0.0;
        let mut agent = Agent::new(LearnerKind::Td3, 4, ActionSpace { phase_count: 0, accel_max: 2.0 }, &h, &mut rng);
        // Push target critic 0 far above target critic 1 by biasing its
        // output layer: the target must follow the smaller branch.
        {
            let last = agent.target_critics[0].layers_mut().last_mut().unwrap();
            for b in &mut last.bias {
                *b += 50.0;
            }
        }
        let t = transition(&mut rng, 4, 3, 0.0, false);
        let refs = [&t];
        let noise = vec![vec![0.0; 3]];
        let y = agent.bootstrap_targets(&refs, Some(&noise)).unwrap()[0];

        let a = agent.target_actor.output(&t.next_state).unwrap();
        let input = concat(&t.next_state, &a);
        let q_low = agent.target_critics[1].output(&input).unwrap()[0];
        assert_relative_eq!(y, agent.hyper.discount * q_low, max_relative = 1e-12);
    }

    #[test]
    fn td3_actor_updates_every_policy_delay_calls() {
        let mut rng = rng_stream(9, "agents/delay");
        let mut agent = Agent::new(LearnerKind::Td3, 4, ActionSpace { phase_count: 0, accel_max: 2.0 }, &hyper(), &mut rng);
        assert_eq!(agent.hyper.policy_delay, 2);
        let batch: Vec<Transition> = (0..4).map(|_| transition(&mut rng, 4, 3, 0.1, false)).collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let calls = 50u64;
        for i in 1..=calls {
            let diag = agent.update(&refs, &mut rng).unwrap();
            assert_eq!(diag.actor_updated, i % 2 == 0, "call {i}");
        }
        assert_eq!(agent.update_calls(), calls);
        assert_eq!(agent.actor_updates(), calls / 2);
    }

    #[test]
    fn td3_target_never_exceeds_single_critic_targets() {
        let mut rng = rng_stream(10, "agents/lower-bound");
        let agent = Agent::new(LearnerKind::Td3, 4, ActionSpace { phase_count: 0, accel_max: 2.0 }, &hyper(), &mut rng);
        for _ in 0..50 {
            let reward = rng.gen_range(-1.0..1.0);
            let t = transition(&mut rng, 4, 3, reward, false);
            let refs = [&t];
            let noise = vec![vec![0.0; 3]];
            let y = agent.bootstrap_targets(&refs, Some(&noise)).unwrap()[0];
            let a = agent.target_actor.output(&t.next_state).unwrap();
            let input = concat(&t.next_state, &a);
            for critic in agent.target_critics() {
                let single = t.reward + agent.hyper.discount * critic.output(&input).unwrap()[0];
                assert!(y <= single + 1e-12);
            }
        }
    }

    #[test]
    fn updates_are_bit_deterministic() {
        let run = || {
            let mut rng = rng_stream(11, "agents/deterministic");
            let mut agent = Agent::new(LearnerKind::Td3, 4, ActionSpace { phase_count: 1, accel_max: 2.0 }, &hyper(), &mut rng);
            let batch: Vec<Transition> = (0..16).map(|_| transition(&mut rng, 4, 4, 0.3, false)).collect();
            let refs: Vec<&Transition> = batch.iter().collect();
            for _ in 0..10 {
                agent.update(&refs, &mut rng).unwrap();
            }
            agent
        };
        let a = run();
        let b = run();
        assert_eq!(a.actor, b.actor);
        assert_eq!(a.critics, b.critics);
        assert_eq!(a.target_actor, b.target_actor);
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let mut rng = rng_stream(12, "agents/checkpoint");
        let h = hyper();
        let mut agent = Agent::new(LearnerKind::Td3, 4, ActionSpace { phase_count: 2, accel_max: 2.0 }, &h, &mut rng);
        let batch: Vec<Transition> = (0..8).map(|_| transition(&mut rng, 4, 5, 0.2, false)).collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        for _ in 0..4 {
            agent.update(&refs, &mut rng).unwrap();
        }
        let cp = agent.to_checkpoint("td3", "master:12", 4, "hash");
        let json = serde_json::to_string(&cp).unwrap();
        let cp2: AgentCheckpoint = serde_json::from_str(&json).unwrap();
        let restored = Agent::from_checkpoint(&cp2, &h).unwrap();
        assert_eq!(restored.actor, agent.actor);
        assert_eq!(restored.critics, agent.critics);
        assert_eq!(restored.update_calls, agent.update_calls);

        let mut bad = cp2.clone();
        bad.version = 99;
        assert!(matches!(Agent::from_checkpoint(&bad, &h), Err(AgentError::CheckpointVersion(99))));
    }

    #[test]
    fn non_finite_reward_refuses_update() {
        let mut rng = rng_stream(13, "agents/nan");
        let mut agent = Agent::new(LearnerKind::Ddpg, 4, ActionSpace { phase_count: 0, accel_max: 2.0 }, &hyper(), &mut rng);
        let mut t = transition(&mut rng, 4, 3, f64::NAN, false);
        t.reward = f64::NAN;
        let refs = [&t];
        assert!(matches!(
            agent.update(&refs, &mut rng),
            Err(AgentError::NonFinite { .. })
        ));
    }
}
