//! Self-verification suites: gradient correctness against finite
//! differences, phase-alignment and grid oracles for the Dinkelbach
//! optimizer, kinematic feasibility, reward telescoping, learner mechanism
//! checks, metrics determinism, and the desk-scale learning study. The
//! acceptance tests and the `verify` CLI subcommand both run these.

use super::{evaluate, train, TrainAlgorithm};
use crate::agents::{ActionSpace, Agent, LearnerKind};
use crate::baseline::{dinkelbach_optimize, grid_verify};
use crate::channel::{complex_gaussian, ChannelSnapshot};
use crate::config::Config;
use crate::kinematics::{clamp_accel, is_feasible, project, step as kin_step, UavState, FEASIBILITY_SLACK};
use crate::link::{effective_gain, RisPhaseVector};
use crate::mlp::{
    finite_difference_gradients, max_relative_gradient_error, min_preactivation_margin, Activation, Mlp,
};
use crate::parallel;
use crate::replay::Transition;
use crate::rng::rng_stream;
use crate::vec3::Vec3;
use num_complex::Complex64;
use rand::Rng;
use std::time::Instant;

/// Outcome of one verification check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
    pub seconds: f64,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "{} {} ({:.2}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            self.details
        )
    }
}

fn finish(name: &'static str, start: Instant, passed: bool, details: String, budget_s: f64) -> CheckResult {
    let seconds = start.elapsed().as_secs_f64();
    let within_budget = seconds < budget_s;
    CheckResult {
        name,
        passed: passed && within_budget,
        details: if within_budget {
            details
        } else {
            format!("{details}; exceeded {budget_s}s budget")
        },
        seconds,
    }
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness
// ---------------------------------------------------------------------------

/// Analytic backprop against central finite differences on 100 nets: the
/// full-size actor and critic shapes plus width-reduced variants of both,
/// every parameter checked at relative tolerance 1e-4.
pub fn check_gradients() -> CheckResult {
    let start = Instant::now();
    let cases: Vec<u64> = (0..100).collect();
    let worst = parallel::map_collect(&cases, |&case| {
        let mut rng = rng_stream(case, "verify/gradients");
        // Cases 0 and 1 use the full actor (7 -> 64/128/64 -> 23, tanh out)
        // and critic (30 -> 64/128 -> 1) shapes; the rest shrink the widths
        // but keep the layer structure and activations.
        let (dims, hidden, output): (Vec<usize>, Activation, Activation) = match case {
            0 => (vec![7, 64, 128, 64, 23], Activation::Relu, Activation::Tanh),
            1 => (vec![30, 64, 128, 1], Activation::Relu, Activation::Identity),
            c if c % 2 == 0 => {
                let w = rng.gen_range(4..16usize);
                (vec![7, w, 2 * w, w, rng.gen_range(4..24)], Activation::Relu, Activation::Tanh)
            }
            _ => {
                let w = rng.gen_range(4..16usize);
                (vec![rng.gen_range(10..30), w, 2 * w, 1], Activation::Relu, Activation::Identity)
            }
        };
        // Keep rectifier pre-activations away from the kink so the central
        // difference is valid; deterministic re-roll on the same stream.
        let mut attempt = 0;
        loop {
            let net = Mlp::new(&dims, hidden, output, &mut rng);
            let input: Vec<f64> = (0..dims[0]).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let grad: Vec<f64> = (0..*dims.last().unwrap()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            attempt += 1;
            if min_preactivation_margin(&net, &input) < 1e-4 && attempt < 25 {
                continue;
            }
            let pass = net.forward(&input).expect("dims match");
            let analytic = net.backward(&pass, &grad).expect("cache matches");
            let numeric = finite_difference_gradients(&net, &input, &grad, 1e-5);
            return max_relative_gradient_error(&analytic, &numeric);
        }
    });
    let max_err = worst.into_iter().fold(0.0f64, f64::max);
    finish(
        "gradient-correctness",
        start,
        max_err < 1e-4,
        format!("max relative gradient error {max_err:.3e} over 100 nets (tolerance 1e-4)"),
        5.0,
    )
}

// ---------------------------------------------------------------------------
// 2. Phase alignment optimum
// ---------------------------------------------------------------------------

fn random_snapshot(rng: &mut impl Rng, n: usize) -> ChannelSnapshot {
    ChannelSnapshot {
        bs_uav: complex_gaussian(rng),
        jammer_uav: complex_gaussian(rng),
        bs_ris: (0..n).map(|_| complex_gaussian(rng)).collect(),
        jammer_ris: (0..n).map(|_| complex_gaussian(rng)).collect(),
        ris_uav: (0..n).map(|_| complex_gaussian(rng)).collect(),
        slot: 0,
    }
}

/// Jammer-free, direct-free snapshots: the optimizer must reach the
/// closed-form aligned gain `(Σ|h_ru||h_br|)²` within 1e-6 relative.
pub fn check_phase_alignment() -> CheckResult {
    let start = Instant::now();
    let params = Config::desk_scale().oracle;
    let mut rng = rng_stream(2024, "verify/alignment");
    let mut worst = 0.0f64;
    for case in 0..50 {
        let n = 1 + (case % 8);
        let mut snap = random_snapshot(&mut rng, n);
        snap.bs_uav = Complex64::new(0.0, 0.0);
        snap.jammer_uav = Complex64::new(0.0, 0.0);
        snap.jammer_ris = vec![Complex64::new(0.0, 0.0); n];
        let bound: f64 = snap
            .ris_uav
            .iter()
            .zip(&snap.bs_ris)
            .map(|(ru, br)| ru.norm() * br.norm())
            .sum();
        let expected = bound * bound;
        let result = dinkelbach_optimize(&snap, 1.0, 1.0, 0.31, &params, &mut rng);
        let gain = effective_gain(Complex64::new(0.0, 0.0), &snap.ris_uav, &result.phases, &snap.bs_ris)
            .expect("lengths match")
            .norm_sqr();
        worst = worst.max(((gain - expected) / expected).abs());
    }
    finish(
        "phase-alignment-optimum",
        start,
        worst < 1e-6,
        format!("max relative gap to the aligned gain {worst:.3e} over 50 snapshots (tolerance 1e-6)"),
        1.0,
    )
}

// ---------------------------------------------------------------------------
// 3. Dinkelbach vs. the grid oracle
// ---------------------------------------------------------------------------

pub fn check_dinkelbach_vs_grid() -> CheckResult {
    let start = Instant::now();
    let params = Config::desk_scale().oracle;
    let mut rng = rng_stream(2025, "verify/grid");
    let mut worst_gap = f64::NEG_INFINITY;
    let mut lambda_ok = true;
    for case in 0..20 {
        let n = 1 + (case % 3);
        let points = match n {
            1 => 360,
            2 => 128,
            _ => 64,
        };
        let snap = random_snapshot(&mut rng, n);
        let result = dinkelbach_optimize(&snap, 1.0, 0.8, 0.2, &params, &mut rng);
        let grid = grid_verify(&snap, 1.0, 0.8, 0.2, points).expect("n <= 3");
        worst_gap = worst_gap.max((grid - result.ratio) / grid);
        for pair in result.lambda_history.windows(2) {
            if pair[1] < pair[0] * (1.0 - 1e-12) {
                lambda_ok = false;
            }
        }
    }
    finish(
        "dinkelbach-vs-grid",
        start,
        worst_gap <= 1e-3 && lambda_ok,
        format!(
            "worst (grid - ratio)/grid = {worst_gap:.3e} over 20 snapshots (allowed 1e-3); lambda nondecreasing: {lambda_ok}"
        ),
        30.0,
    )
}

// ---------------------------------------------------------------------------
// 4. Kinematic feasibility
// ---------------------------------------------------------------------------

pub fn check_kinematic_feasibility() -> CheckResult {
    let start = Instant::now();
    let limits = Config::desk_scale().limits;
    let chunks: Vec<u64> = (0..50).collect();
    let failures: usize = parallel::map_collect(&chunks, |&c| {
        let mut rng = rng_stream(c, "verify/kinematics");
        let mut bad = 0usize;
        for _ in 0..2000 {
            let state = UavState {
                position: Vec3::new(
                    rng.gen_range(-200.0..200.0),
                    rng.gen_range(-200.0..200.0),
                    rng.gen_range(0.0..120.0),
                ),
                velocity: Vec3::new(
                    rng.gen_range(-60.0..60.0),
                    rng.gen_range(-60.0..60.0),
                    rng.gen_range(-60.0..60.0),
                ),
                slot: 0,
            };
            let raw = Vec3::new(
                rng.gen_range(-8.0..8.0),
                rng.gen_range(-8.0..8.0),
                rng.gen_range(-8.0..8.0),
            );
            let accel = clamp_accel(raw, &limits);
            let a = accel.vector();
            if a.x.abs() > limits.accel_max || a.y.abs() > limits.accel_max || a.z.abs() > limits.accel_max {
                bad += 1;
                continue;
            }
            let next = kin_step(&state, &accel, 0.1, &limits);
            let v = next.velocity;
            let speed = v.norm();
            let pitch_ok = v.z.abs() <= limits.pitch_max.sin() * speed * (1.0 + FEASIBILITY_SLACK);
            let speed_ok = speed >= limits.speed_min * (1.0 - FEASIBILITY_SLACK)
                && speed <= limits.speed_max * (1.0 + FEASIBILITY_SLACK);
            if !(pitch_ok && speed_ok && is_feasible(v, &limits)) {
                bad += 1;
                continue;
            }
            // Idempotence, bit for bit.
            let once = project(v, None, &limits).velocity;
            if once != v {
                bad += 1;
            }
        }
        bad
    })
    .into_iter()
    .sum();
    finish(
        "kinematic-feasibility",
        start,
        failures == 0,
        format!("{failures} violations in 100000 random steps (slack 1e-12, projection idempotent)"),
        5.0,
    )
}

// ---------------------------------------------------------------------------
// 5. Reward telescoping
// ---------------------------------------------------------------------------

pub fn check_reward_telescoping(cfg: &Config) -> CheckResult {
    let start = Instant::now();
    let env = crate::env::Env::new(cfg, crate::env::RisMode::Learned);
    let n = cfg.scenario.n_elements();
    let mut worst = 0.0f64;
    for seed in 0..3u64 {
        let mut action_rng = rng_stream(seed, "verify/telescoping-actions");
        let (mut state, _) = env
            .reset(rng_stream(seed, "verify/telescoping"))
            .expect("scenario is valid");
        let mut reward_sum = 0.0;
        let mut rate_sum = 0.0;
        while !state.done {
            let phases = RisPhaseVector::new((0..n).map(|_| action_rng.gen_range(-3.2..3.2)).collect());
            let accel = Vec3::new(
                action_rng.gen_range(-2.0..2.0),
                action_rng.gen_range(-2.0..2.0),
                action_rng.gen_range(-2.0..2.0),
            );
            let out = env.step(&mut state, Some(&phases), accel).expect("feasible");
            reward_sum += out.reward;
            rate_sum += out.metrics.rate;
        }
        let expected =
            rate_sum + cfg.hyper.reward_weight * (state.initial_goal_distance - state.prev_goal_distance);
        worst = worst.max((reward_sum - expected).abs());
    }
    finish(
        "reward-telescoping",
        start,
        worst <= 1e-9,
        format!("max |Σreward - (Σrate + ζ·net progress)| = {worst:.3e} (allowed 1e-9)"),
        10.0,
    )
}

// ---------------------------------------------------------------------------
// 7. Metrics determinism
// ---------------------------------------------------------------------------

/// Train twice for 20 episodes under one seed; the rendered metrics CSVs
/// must match byte for byte.
pub fn check_metrics_determinism() -> CheckResult {
    let start = Instant::now();
    let text = crate::config::DESK_SCALE_TOML.replace("episodes = 500", "episodes = 20");
    let cfg = Config::from_toml_str(&text).expect("built-in config must validate");
    let run = || {
        let result = train(&cfg, TrainAlgorithm::Td3, 0).expect("training succeeds");
        super::export::render_train_metrics_csv(&result, &cfg)
    };
    let a = run();
    let b = run();
    finish(
        "metrics-determinism",
        start,
        a == b,
        format!("two 20-episode runs, identical seed: {} bytes each, byte-identical: {}", a.len(), a == b),
        600.0,
    )
}

// ---------------------------------------------------------------------------
// 8. TD3 mechanism unit checks
// ---------------------------------------------------------------------------

pub fn check_td3_mechanisms() -> CheckResult {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut ok = true;

    let mut hyper = Config::desk_scale().hyper;
    hyper.actor_hidden = vec![8, 8];
    hyper.critic_hidden = vec![8, 8];
    hyper.policy_noise_var = 0.0;
    let space = ActionSpace { phase_count: 0, accel_max: 2.0 };
    let mut rng = rng_stream(77, "verify/td3");

    // Min-critic selection on a scripted pair of target critics: bias the
    // first target far above the second and confirm the Bellman target
    // follows the lesser branch.
    {
        let mut agent = Agent::new(LearnerKind::Td3, 4, space, &hyper, &mut rng);
        for b in &mut agent.target_critics_mut()[0].layers_mut().last_mut().unwrap().bias {
            *b += 40.0;
        }
        let t = Transition {
            state: vec![0.1, -0.2, 0.3, 0.0],
            action: vec![0.0, 0.1, -0.1],
            reward: 0.0,
            next_state: vec![0.2, 0.0, -0.3, 0.1],
            terminal: false,
        };
        let refs = [&t];
        let noise = [vec![0.0; 3]];
        let y = agent.bootstrap_targets(&refs, Some(&noise)).expect("finite");
        let a = agent.target_actor().output(&t.next_state).expect("dims match");
        let mut input = t.next_state.clone();
        input.extend_from_slice(&a);
        let q_low = agent.target_critics()[1].output(&input).expect("dims match")[0];
        let min_ok = (y[0] - hyper.discount * q_low).abs() < 1e-12;
        ok &= min_ok;
        details.push(format!("min-critic target follows the lesser branch: {min_ok}"));
    }

    // Noise clipping at the 0.5 bound.
    {
        let clipped = crate::agents::clip_policy_noise(0.8, 0.5);
        let clip_ok = clipped == 0.5 && crate::agents::clip_policy_noise(-0.9, 0.5) == -0.5;
        ok &= clip_ok;
        details.push(format!("noise 0.8 clipped to 0.5: {clip_ok}"));
    }

    // Delayed policy updates: exactly k actor updates across 2k calls.
    {
        let mut hyper2 = hyper.clone();
        hyper2.policy_noise_var = 0.2;
        let mut agent = Agent::new(LearnerKind::Td3, 4, space, &hyper2, &mut rng);
        let batch: Vec<Transition> = (0..4)
            .map(|i| Transition {
                state: vec![0.1 * i as f64; 4],
                action: vec![0.05 * i as f64; 3],
                reward: 0.2,
                next_state: vec![0.1 * i as f64 + 0.05; 4],
                terminal: false,
            })
            .collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let calls = 2000u64;
        for _ in 0..calls {
            agent.update(&refs, &mut rng).expect("finite batch");
        }
        let delay_ok = agent.actor_updates() == calls / 2;
        ok &= delay_ok;
        details.push(format!(
            "actor updated {} times in {calls} critic updates (expect {}): {delay_ok}",
            agent.actor_updates(),
            calls / 2
        ));
    }

    finish("td3-mechanisms", start, ok, details.join("; "), 120.0)
}

// ---------------------------------------------------------------------------
// 6. Desk-scale learning
// ---------------------------------------------------------------------------

/// Episodes needed for the running average to reach 90% of its final value.
fn episodes_to_ninety_percent(average_rewards: &[f64]) -> usize {
    let final_avg = *average_rewards.last().expect("nonempty");
    if final_avg <= 0.0 {
        return average_rewards.len();
    }
    let threshold = 0.9 * final_avg;
    average_rewards
        .iter()
        .position(|&a| a >= threshold)
        .map(|i| i + 1)
        .unwrap_or(average_rewards.len())
}

fn pooled_window_means(rewards_per_seed: &[&[f64]], window: usize) -> (f64, f64) {
    let mut first = Vec::new();
    let mut last = Vec::new();
    for rewards in rewards_per_seed {
        first.extend_from_slice(&rewards[..window.min(rewards.len())]);
        let start = rewards.len().saturating_sub(window);
        last.extend_from_slice(&rewards[start..]);
    }
    (
        super::metrics::mean_std(&first).0,
        super::metrics::mean_std(&last).0,
    )
}

/// The desk-scale learning study: trains DDPG, TD3, and the no-RIS variant
/// for every seed and checks reward growth, the RIS rate advantage, and
/// TD3's convergence speed against DDPG's.
pub fn check_desk_scale_learning(cfg: &Config, seeds: &[u64]) -> Vec<CheckResult> {
    let start = Instant::now();
    let jobs: Vec<(TrainAlgorithm, u64)> = [TrainAlgorithm::Ddpg, TrainAlgorithm::Td3, TrainAlgorithm::Td3NoRis]
        .into_iter()
        .flat_map(|algo| seeds.iter().map(move |&s| (algo, s)))
        .collect();
    let runs = parallel::map_collect(&jobs, |&(algo, seed)| {
        let result = train(cfg, algo, seed).expect("training must run");
        let eval = if matches!(algo, TrainAlgorithm::Td3 | TrainAlgorithm::Td3NoRis) {
            Some(evaluate(&result.checkpoint, cfg, 100, seed).expect("evaluation must run"))
        } else {
            None
        };
        (algo, seed, result, eval)
    });

    let rewards_of = |algo: TrainAlgorithm| -> Vec<&[f64]> {
        runs.iter()
            .filter(|(a, ..)| *a == algo)
            .map(|(_, _, r, _)| r.episode_rewards.as_slice())
            .collect()
    };
    let mut results = Vec::new();

    // (a) reward growth for both learners.
    {
        let mut ok = true;
        let mut parts = Vec::new();
        for algo in [TrainAlgorithm::Ddpg, TrainAlgorithm::Td3] {
            let (first, last) = pooled_window_means(&rewards_of(algo), 50);
            let grew = last >= 1.5 * first;
            ok &= grew;
            parts.push(format!(
                "{}: first-50 mean {first:.2}, last-50 mean {last:.2}, ratio {:.2} (need 1.5)",
                algo.name(),
                last / first
            ));
        }
        results.push(CheckResult {
            name: "learning-reward-growth",
            passed: ok,
            details: parts.join("; "),
            seconds: start.elapsed().as_secs_f64(),
        });
    }

    // (b) trained TD3 rate against the no-RIS variant, identical seeds.
    {
        let mean_rate = |algo: TrainAlgorithm| -> f64 {
            let rates: Vec<f64> = runs
                .iter()
                .filter(|(a, ..)| *a == algo)
                .map(|(_, _, _, e)| e.as_ref().expect("evaluated").mean_rate)
                .collect();
            super::metrics::mean_std(&rates).0
        };
        let with_ris = mean_rate(TrainAlgorithm::Td3);
        let without = mean_rate(TrainAlgorithm::Td3NoRis);
        let ratio = with_ris / without;
        results.push(CheckResult {
            name: "learning-ris-rate-advantage",
            passed: ratio >= 1.1,
            details: format!(
                "TD3 mean test rate {with_ris:.2} vs no-RIS {without:.2}, ratio {ratio:.3} (need 1.1)"
            ),
            seconds: start.elapsed().as_secs_f64(),
        });
    }

    // (c) TD3 reaches 90% of its final average at least as fast as DDPG in
    // a majority of seeds.
    {
        let mut faster = 0usize;
        let mut parts = Vec::new();
        for &seed in seeds {
            let find = |algo: TrainAlgorithm| -> usize {
                runs.iter()
                    .find(|(a, s, ..)| *a == algo && *s == seed)
                    .map(|(_, _, r, _)| episodes_to_ninety_percent(&r.average_rewards))
                    .expect("run exists")
            };
            let td3 = find(TrainAlgorithm::Td3);
            let ddpg = find(TrainAlgorithm::Ddpg);
            if td3 <= ddpg {
                faster += 1;
            }
            parts.push(format!("seed {seed}: td3 {td3} vs ddpg {ddpg} episodes"));
        }
        // At least two thirds of the seeds (2 of 3 in the standard study).
        let need = (2 * seeds.len()).div_ceil(3);
        results.push(CheckResult {
            name: "learning-td3-converges-faster",
            passed: faster >= need,
            details: format!("{faster}/{} seeds faster (need {need}); {}", seeds.len(), parts.join(", ")),
            seconds: start.elapsed().as_secs_f64(),
        });
    }

    let total = start.elapsed().as_secs_f64();
    results.push(CheckResult {
        name: "learning-wall-clock",
        passed: total < 1200.0,
        details: format!("desk-scale study finished in {total:.0}s (budget 1200s)"),
        seconds: total,
    });
    results
}

/// The fast suite: every check that runs in seconds.
pub fn run_quick(cfg: &Config) -> Vec<CheckResult> {
    vec![
        check_gradients(),
        check_phase_alignment(),
        check_dinkelbach_vs_grid(),
        check_kinematic_feasibility(),
        check_reward_telescoping(cfg),
        check_td3_mechanisms(),
    ]
}
