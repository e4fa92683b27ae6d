//! Rayon vs. sequential throughput on the data-parallel inner loops:
//! evaluation rollouts, batch gradient accumulation, channel Monte Carlo,
//! and the phase-grid search. Built with the default `parallel` feature the
//! `/rayon` ids use the thread pool and the `/seq` ids the sequential twins;
//! rebuilding with `--no-default-features` makes both sequential, which is
//! the fallback build this suite exists to compare against.

use antijam_core::agents::{ActionMode, ActionSpace, Agent, LearnerKind};
use antijam_core::channel::{complex_gaussian, sample_direct, sample_ris_links, sample_snapshot};
use antijam_core::config::Config;
use antijam_core::env::{Env, RisMode};
use antijam_core::link::RisPhaseVector;
use antijam_core::mlp::{Activation, Gradients, Mlp};
use antijam_core::parallel;
use antijam_core::replay::Transition;
use antijam_core::rng::rng_stream;
use antijam_core::vec3::Vec3;
use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

fn bench_eval_rollouts(c: &mut Criterion) {
    let cfg = Config::desk_scale();
    let env = Env::new(&cfg, RisMode::Learned);
    let space = ActionSpace {
        phase_count: env.phase_count(),
        accel_max: cfg.limits.accel_max,
    };
    let agent = Agent::new(
        LearnerKind::Td3,
        antijam_core::env::OBSERVATION_DIM,
        space,
        &cfg.hyper,
        &mut rng_stream(0, "bench/agent"),
    );
    let rollout = |i: &u64| -> f64 {
        let mut unused = rng_stream(0, "bench/unused");
        let (mut state, obs) = env.reset(rng_stream(*i, "bench/episode")).unwrap();
        let mut net_obs = obs.to_network_input(cfg.limits.speed_max);
        while !state.done {
            let action = agent.select_action(&net_obs, ActionMode::Exploit, &mut unused);
            let (phases, accel) = space.denormalize(&action);
            let out = env.step(&mut state, Some(&phases), accel).unwrap();
            net_obs = out.observation.to_network_input(cfg.limits.speed_max);
        }
        state.cumulative_rate
    };
    let episodes: Vec<u64> = (0..16).collect();
    let mut group = c.benchmark_group("eval_rollouts");
    group.sample_size(10);
    group.bench_function("rayon", |b| {
        b.iter(|| parallel::map_collect(&episodes, rollout))
    });
    group.bench_function("seq", |b| {
        b.iter(|| parallel::map_collect_seq(&episodes, rollout))
    });
    group.finish();
}

fn bench_batch_gradients(c: &mut Criterion) {
    let mut rng = rng_stream(1, "bench/grads");
    let critic = Mlp::new(&[18, 32, 64, 1], Activation::Relu, Activation::Identity, &mut rng);
    let batch: Vec<Transition> = (0..64)
        .map(|_| Transition {
            state: (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            action: (0..11).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            reward: rng.gen_range(-1.0..1.0),
            next_state: (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            terminal: false,
        })
        .collect();
    let inputs: Vec<Vec<f64>> = batch
        .iter()
        .map(|t| {
            let mut v = t.state.clone();
            v.extend_from_slice(&t.action);
            v
        })
        .collect();
    let accumulate = |part: &[Vec<f64>]| -> Gradients {
        let mut grads = Gradients::zeros_like(&critic);
        for input in part {
            let pass = critic.forward(input).unwrap();
            let err = pass.output()[0] - 0.5;
            grads.add(&critic.backward(&pass, &[2.0 * err / 64.0]).unwrap());
        }
        grads
    };
    let mut group = c.benchmark_group("batch_gradients");
    group.bench_function("rayon", |b| {
        b.iter(|| parallel::map_chunks(&inputs, 8, accumulate))
    });
    group.bench_function("seq", |b| {
        b.iter(|| parallel::map_chunks_seq(&inputs, 8, accumulate))
    });
    group.finish();
}

fn bench_channel_monte_carlo(c: &mut Criterion) {
    let cfg = Config::desk_scale();
    let chunks: Vec<u64> = (0..32).collect();
    let sample_chunk = |chunk: &u64| -> f64 {
        let mut rng = rng_stream(*chunk, "bench/mc");
        let links = sample_ris_links(&cfg.scenario, &cfg.channel, &mut rng);
        let mut acc = 0.0;
        for _ in 0..500 {
            let snap = sample_snapshot(
                Vec3::new(-20.0, -10.0, 6.0),
                0,
                &cfg.scenario,
                &cfg.channel,
                &links,
                &mut rng,
            )
            .unwrap();
            acc += snap.bs_uav.norm_sqr();
            acc += sample_direct(35.0, 2.0, 3.5, 1e-3, &mut rng).unwrap().norm_sqr();
        }
        acc
    };
    let mut group = c.benchmark_group("channel_monte_carlo");
    group.bench_function("rayon", |b| {
        b.iter(|| parallel::map_collect(&chunks, sample_chunk))
    });
    group.bench_function("seq", |b| {
        b.iter(|| parallel::map_collect_seq(&chunks, sample_chunk))
    });
    group.finish();
}

fn bench_phase_grid(c: &mut Criterion) {
    let mut rng = rng_stream(2, "bench/grid");
    let n = 2usize;
    let cascade_sig: Vec<Complex64> = (0..n).map(|_| complex_gaussian(&mut rng)).collect();
    let cascade_jam: Vec<Complex64> = (0..n).map(|_| complex_gaussian(&mut rng)).collect();
    let direct_sig = complex_gaussian(&mut rng);
    let direct_jam = complex_gaussian(&mut rng);
    let points = 256usize;
    let outer: Vec<usize> = (0..points).collect();
    let best_for_outer = |first: &usize| -> f64 {
        let theta0 = -PI + 2.0 * PI * *first as f64 / points as f64;
        let mut best = f64::NEG_INFINITY;
        for second in 0..points {
            let theta1 = -PI + 2.0 * PI * second as f64 / points as f64;
            let phases = RisPhaseVector::new(vec![theta0, theta1]);
            let coeffs = phases.coefficients();
            let sig = direct_sig + coeffs[0] * cascade_sig[0] + coeffs[1] * cascade_sig[1];
            let jam = direct_jam + coeffs[0] * cascade_jam[0] + coeffs[1] * cascade_jam[1];
            best = best.max(sig.norm_sqr() / (0.8 * jam.norm_sqr() + 0.2));
        }
        best
    };
    let mut group = c.benchmark_group("phase_grid");
    group.bench_function("rayon", |b| {
        b.iter(|| {
            parallel::map_collect(&outer, best_for_outer)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max)
        })
    });
    group.bench_function("seq", |b| {
        b.iter(|| {
            parallel::map_collect_seq(&outer, best_for_outer)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max)
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_eval_rollouts,
    bench_batch_gradients,
    bench_channel_monte_carlo,
    bench_phase_grid
);
criterion_main!(benches);
