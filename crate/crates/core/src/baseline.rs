//! Reference schemes for the RIS configuration: no-RIS operation, a
//! perfect-CSI Dinkelbach fractional-programming optimizer over the
//! unit-modulus phases, and an exhaustive phase-grid verifier.
//!
//! The Dinkelbach loop maximizes the ratio `f/g` with
//! `f(θ) = P_t·|g_B(θ)|²` and `g(θ) = P_J·|g_J(θ)|² + σ²` (the jammer term
//! drops in SNR mode) by repeatedly maximizing the surrogate `f - λ·g` over
//! the phases and refreshing `λ = f/g`. The inner solve is gradient ascent
//! in angle space with Armijo backtracking and angle wrapping as the
//! retraction, warm-started from the current iterate, a signal-aligned
//! start, and random restarts; accepted steps never decrease the surrogate,
//! which makes the λ sequence nondecreasing.

use crate::channel::ChannelSnapshot;
use crate::config::{OracleObjective, OracleParams};
use crate::link::{metrics_from_gains, wrap_angle, LinkMetrics, RisPhaseVector};
use crate::parallel;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("grid verification supports at most 3 elements, got {n}")]
    TooManyElements { n: usize },
    #[error("grid needs at least 2 points per dimension, got {points}")]
    TooFewPoints { points: usize },
}

/// Link metrics with every reflected term zeroed (RIS absent).
pub fn no_ris_metrics(
    snapshot: &ChannelSnapshot,
    tx_power: f64,
    jammer_power: f64,
    noise_power: f64,
) -> LinkMetrics {
    metrics_from_gains(
        snapshot.bs_uav,
        snapshot.jammer_uav,
        tx_power,
        jammer_power,
        noise_power,
    )
}

/// Output of the Dinkelbach optimizer.
#[derive(Clone, Debug)]
pub struct DinkelbachResult {
    pub phases: RisPhaseVector,
    /// Final objective ratio (SINR, or SNR in SNR mode).
    pub ratio: f64,
    /// λ after each outer iteration, nondecreasing.
    pub lambda_history: Vec<f64>,
    /// False when the outer loop hit its iteration cap before the
    /// convergence test; the best iterate is still returned.
    pub converged: bool,
}

/// Cascade terms of the ratio: the per-element products the phases weight,
/// plus the direct gains.
struct RatioTerms {
    signal_direct: Complex64,
    signal_cascade: Vec<Complex64>,
    jammer_direct: Complex64,
    jammer_cascade: Vec<Complex64>,
    tx_power: f64,
    jammer_power: f64,
    noise_power: f64,
    objective: OracleObjective,
}

impl RatioTerms {
    fn new(
        snapshot: &ChannelSnapshot,
        tx_power: f64,
        jammer_power: f64,
        noise_power: f64,
        objective: OracleObjective,
    ) -> RatioTerms {
        let cascade = |incident: &[Complex64]| -> Vec<Complex64> {
            snapshot
                .ris_uav
                .iter()
                .zip(incident)
                .map(|(&ru, &inc)| ru.conj() * inc)
                .collect()
        };
        RatioTerms {
            signal_direct: snapshot.bs_uav,
            signal_cascade: cascade(&snapshot.bs_ris),
            jammer_direct: snapshot.jammer_uav,
            jammer_cascade: cascade(&snapshot.jammer_ris),
            tx_power,
            jammer_power,
            noise_power,
            objective,
        }
    }

    fn n(&self) -> usize {
        self.signal_cascade.len()
    }

    fn gains(&self, coeffs: &[Complex64]) -> (Complex64, Complex64) {
        let mut sig = self.signal_direct;
        let mut jam = self.jammer_direct;
        for ((&c, &s), &j) in coeffs
            .iter()
            .zip(&self.signal_cascade)
            .zip(&self.jammer_cascade)
        {
            sig += c * s;
            jam += c * j;
        }
        (sig, jam)
    }

    /// Numerator `f`, denominator `g`.
    fn f_g(&self, angles: &[f64]) -> (f64, f64) {
        let coeffs: Vec<Complex64> = angles.iter().map(|&a| Complex64::from_polar(1.0, a)).collect();
        let (sig, jam) = self.gains(&coeffs);
        let f = self.tx_power * sig.norm_sqr();
        let g = match self.objective {
            OracleObjective::Sinr => self.jammer_power * jam.norm_sqr() + self.noise_power,
            OracleObjective::Snr => self.noise_power,
        };
        (f, g)
    }

    fn ratio(&self, angles: &[f64]) -> f64 {
        let (f, g) = self.f_g(angles);
        f / g
    }

    fn surrogate(&self, angles: &[f64], lambda: f64) -> f64 {
        let (f, g) = self.f_g(angles);
        f - lambda * g
    }

    /// Gradient of `f - λ·g` with respect to each angle.
    fn surrogate_gradient(&self, angles: &[f64], lambda: f64) -> Vec<f64> {
        let coeffs: Vec<Complex64> = angles.iter().map(|&a| Complex64::from_polar(1.0, a)).collect();
        let (sig, jam) = self.gains(&coeffs);
        let sig_conj = sig.conj();
        let jam_conj = jam.conj();
        (0..self.n())
            .map(|i| {
                let df = -2.0 * self.tx_power * (sig_conj * self.signal_cascade[i] * coeffs[i]).im;
                let dg = match self.objective {
                    OracleObjective::Sinr => {
                        -2.0 * self.jammer_power * (jam_conj * self.jammer_cascade[i] * coeffs[i]).im
                    }
                    OracleObjective::Snr => 0.0,
                };
                df - lambda * dg
            })
            .collect()
    }

    /// Phases aligning every signal cascade term with the direct signal (or
    /// with phase zero when there is no direct term).
    fn signal_aligned(&self) -> Vec<f64> {
        let reference = if self.signal_direct.norm_sqr() > 0.0 {
            self.signal_direct.arg()
        } else {
            0.0
        };
        self.signal_cascade
            .iter()
            .map(|c| wrap_angle(reference - c.arg()))
            .collect()
    }
}

/// Armijo-backtracking gradient ascent on the surrogate, warm-started at
/// `start`. Accepted steps never decrease the surrogate.
fn inner_ascend(terms: &RatioTerms, lambda: f64, start: Vec<f64>, max_iters: u32) -> (Vec<f64>, f64) {
    let mut theta = start;
    let mut value = terms.surrogate(&theta, lambda);
    let mut step = 0.5; // radians along the normalized gradient
    for _ in 0..max_iters {
        let grad = terms.surrogate_gradient(&theta, lambda);
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm <= 0.0 || !gnorm.is_finite() {
            break;
        }
        let direction: Vec<f64> = grad.iter().map(|g| g / gnorm).collect();
        let mut accepted = false;
        let mut len = step;
        for _ in 0..40 {
            let trial: Vec<f64> = theta
                .iter()
                .zip(&direction)
                .map(|(&t, &d)| wrap_angle(t + len * d))
                .collect();
            let trial_value = terms.surrogate(&trial, lambda);
            if trial_value >= value + 1e-4 * len * gnorm {
                theta = trial;
                value = trial_value;
                step = (len * 2.0).min(1.0);
                accepted = true;
                break;
            }
            len *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (theta, value)
}

/// Per-slot perfect-CSI phase optimization via Dinkelbach iterations.
pub fn dinkelbach_optimize(
    snapshot: &ChannelSnapshot,
    tx_power: f64,
    jammer_power: f64,
    noise_power: f64,
    params: &OracleParams,
    rng: &mut impl Rng,
) -> DinkelbachResult {
    let terms = RatioTerms::new(snapshot, tx_power, jammer_power, noise_power, params.objective);
    let n = terms.n();
    let mut theta: Vec<f64> = vec![0.0; n];
    let mut lambda = terms.ratio(&theta);
    let mut history = vec![lambda];
    let mut converged = false;

    for _ in 0..params.max_outer_iters {
        // Warm start plus alignment and random restarts; keep the best.
        let mut starts: Vec<Vec<f64>> = vec![theta.clone(), terms.signal_aligned()];
        for _ in 0..params.restarts {
            starts.push((0..n).map(|_| rng.gen_range(-PI..PI)).collect());
        }
        let mut best: Option<(Vec<f64>, f64)> = None;
        for start in starts {
            let (cand, value) = inner_ascend(&terms, lambda, start, params.max_inner_iters);
            if best.as_ref().map_or(true, |(_, v)| value > *v) {
                best = Some((cand, value));
            }
        }
        let (next_theta, surrogate) = best.expect("at least one start");
        theta = next_theta;
        let (f, g) = terms.f_g(&theta);
        lambda = f / g;
        history.push(lambda);
        if surrogate.abs() < params.tolerance * g {
            converged = true;
            break;
        }
    }

    DinkelbachResult {
        phases: RisPhaseVector::new(theta),
        ratio: lambda,
        lambda_history: history,
        converged,
    }
}

/// Exhaustive SINR maximization over a uniform phase grid; the brute-force
/// oracle for small arrays.
pub fn grid_verify(
    snapshot: &ChannelSnapshot,
    tx_power: f64,
    jammer_power: f64,
    noise_power: f64,
    points_per_dim: usize,
) -> Result<f64, OracleError> {
    let n = snapshot.n_elements();
    if n > 3 {
        return Err(OracleError::TooManyElements { n });
    }
    if points_per_dim < 2 {
        return Err(OracleError::TooFewPoints { points: points_per_dim });
    }
    let terms = RatioTerms::new(snapshot, tx_power, jammer_power, noise_power, OracleObjective::Sinr);
    // Tabulate cascade · e^{jθ} per element and grid point.
    let coeffs: Vec<Complex64> = (0..points_per_dim)
        .map(|k| Complex64::from_polar(1.0, -PI + 2.0 * PI * k as f64 / points_per_dim as f64))
        .collect();
    let sig_table: Vec<Vec<Complex64>> = terms
        .signal_cascade
        .iter()
        .map(|&c| coeffs.iter().map(|&e| c * e).collect())
        .collect();
    let jam_table: Vec<Vec<Complex64>> = terms
        .jammer_cascade
        .iter()
        .map(|&c| coeffs.iter().map(|&e| c * e).collect())
        .collect();

    let ratio_at = |idx: &[usize]| -> f64 {
        let mut sig = terms.signal_direct;
        let mut jam = terms.jammer_direct;
        for (dim, &k) in idx.iter().enumerate() {
            sig += sig_table[dim][k];
            jam += jam_table[dim][k];
        }
        let f = tx_power * sig.norm_sqr();
        let g = jammer_power * jam.norm_sqr() + noise_power;
        f / g
    };

    let outer: Vec<usize> = (0..points_per_dim).collect();
    let best_per_outer = parallel::map_collect(&outer, |&first| {
        let mut best = f64::NEG_INFINITY;
        match n {
            1 => best = ratio_at(&[first]),
            2 => {
                for second in 0..points_per_dim {
                    best = best.max(ratio_at(&[first, second]));
                }
            }
            _ => {
                for second in 0..points_per_dim {
                    for third in 0..points_per_dim {
                        best = best.max(ratio_at(&[first, second, third]));
                    }
                }
            }
        }
        best
    });
    Ok(best_per_outer.into_iter().fold(f64::NEG_INFINITY, f64::max))
}
