//! RIS phase application, SINR, rate, and the step reward.
//!
//! The received gain on each path is `h_direct + Σ_n conj(h_ru[n])·e^{jθ_n}·h_x[n]`;
//! the SINR divides the transmit-side power by jammer power plus noise, and
//! the rate is the spectral efficiency `log2(1 + sinr)` in bits/s/Hz.

use crate::channel::ChannelSnapshot;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("length mismatch: ris-uav vector has {ris_uav} entries, incident vector has {incident}")]
    LengthMismatch { ris_uav: usize, incident: usize },
}

/// Wrap an angle into `[-π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let wrapped = a - 2.0 * PI * ((a + PI) / (2.0 * PI)).floor();
    // Guard the upper edge: rounding can land exactly on π.
    if wrapped >= PI {
        -PI
    } else {
        wrapped
    }
}

/// Per-element RIS phase shifts, wrap-normalized into `[-π, π)`. Unit
/// modulus is structural: only angles are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct RisPhaseVector {
    angles: Vec<f64>,
}

impl RisPhaseVector {
    pub fn new(angles: Vec<f64>) -> Self {
        RisPhaseVector {
            angles: angles.into_iter().map(wrap_angle).collect(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        RisPhaseVector {
            angles: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// The reflection coefficients `e^{jθ_n}`.
    pub fn coefficients(&self) -> Vec<Complex64> {
        self.angles
            .iter()
            .map(|&a| Complex64::from_polar(1.0, a))
            .collect()
    }
}

/// Link quality figures for one slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkMetrics {
    /// Linear SINR at the UAV.
    pub sinr: f64,
    /// Spectral efficiency, bits/s/Hz.
    pub rate: f64,
    /// Received power on the transmit path, watts.
    pub desired_power: f64,
    /// Received jamming power, watts (noise excluded).
    pub interference_power: f64,
}

/// Combined direct-plus-reflected gain of one path:
/// `h_direct + Σ_n conj(h_ru[n])·e^{jθ_n}·h_x[n]`.
pub fn effective_gain(
    direct: Complex64,
    ris_uav: &[Complex64],
    theta: &RisPhaseVector,
    incident: &[Complex64],
) -> Result<Complex64, LinkError> {
    if ris_uav.len() != incident.len() || ris_uav.len() != theta.len() {
        return Err(LinkError::LengthMismatch {
            ris_uav: ris_uav.len(),
            incident: incident.len(),
        });
    }
    let mut sum = direct;
    for ((&ru, &a), &inc) in ris_uav.iter().zip(theta.angles()).zip(incident) {
        sum += ru.conj() * Complex64::from_polar(1.0, a) * inc;
    }
    Ok(sum)
}

/// SINR and rate for one snapshot under the given phase configuration.
pub fn sinr_metrics(
    snapshot: &ChannelSnapshot,
    theta: &RisPhaseVector,
    tx_power: f64,
    jammer_power: f64,
    noise_power: f64,
) -> Result<LinkMetrics, LinkError> {
    let signal = effective_gain(snapshot.bs_uav, &snapshot.ris_uav, theta, &snapshot.bs_ris)?;
    let jam = effective_gain(snapshot.jammer_uav, &snapshot.ris_uav, theta, &snapshot.jammer_ris)?;
    Ok(metrics_from_gains(signal, jam, tx_power, jammer_power, noise_power))
}

/// Metrics from already-combined path gains.
pub fn metrics_from_gains(
    signal_gain: Complex64,
    jammer_gain: Complex64,
    tx_power: f64,
    jammer_power: f64,
    noise_power: f64,
) -> LinkMetrics {
    let desired_power = tx_power * signal_gain.norm_sqr();
    let interference_power = jammer_power * jammer_gain.norm_sqr();
    let sinr = desired_power / (interference_power + noise_power);
    LinkMetrics {
        sinr,
        rate: (1.0 + sinr).log2(),
        desired_power,
        interference_power,
    }
}

/// Step reward: rate plus weighted progress toward the goal,
/// `r = rate + ζ·(d_prev - d_curr)`.
pub fn step_reward(rate: f64, d_prev: f64, d_curr: f64, zeta: f64) -> f64 {
    rate + zeta * (d_prev - d_curr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit_snapshot() -> ChannelSnapshot {
        ChannelSnapshot {
            bs_uav: c(1.0, 0.0),
            jammer_uav: c(1.0, 0.0),
            bs_ris: vec![c(1.0, 0.0)],
            jammer_ris: vec![c(1.0, 0.0)],
            ris_uav: vec![c(1.0, 0.0)],
            slot: 0,
        }
    }

    #[test]
    fn wrap_angle_half_open_interval() {
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-12);
        assert_relative_eq!(wrap_angle(0.3), 0.3, epsilon = 1e-15);
        let mut rng = crate::rng::rng_stream(9, "link/wrap");
        for _ in 0..1000 {
            let a: f64 = rng.gen_range(-50.0..50.0);
            let w = wrap_angle(a);
            assert!((-PI..PI).contains(&w), "{a} wrapped to {w}");
        }
    }

    #[test]
    fn effective_gain_single_element() {
        let theta = RisPhaseVector::zeros(1);
        let g = effective_gain(c(1.0, 0.0), &[c(1.0, 0.0)], &theta, &[c(1.0, 0.0)]).unwrap();
        assert_relative_eq!(g.re, 2.0, epsilon = 1e-15);
        assert_relative_eq!(g.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn identity_phases_sum_incident_entries() {
        let incident = vec![c(0.3, 0.1), c(-0.2, 0.4), c(0.05, -0.6)];
        let ones = vec![c(1.0, 0.0); 3];
        let theta = RisPhaseVector::zeros(3);
        let direct = c(0.7, -0.2);
        let g = effective_gain(direct, &ones, &theta, &incident).unwrap();
        let expected = direct + incident.iter().sum::<Complex64>();
        assert_relative_eq!(g.re, expected.re, epsilon = 1e-15);
        assert_relative_eq!(g.im, expected.im, epsilon = 1e-15);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let theta = RisPhaseVector::zeros(2);
        let err = effective_gain(c(0.0, 0.0), &[c(1.0, 0.0)], &theta, &[c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(err.is_err());
    }

    #[test]
    fn two_element_alignment_found_by_grid_search() {
        // h_direct = 0, h_ru = [1, j], h_x = [1, 1]: the best |gain| is 2,
        // attained when theta_1 = theta_2 - pi/2. One-degree grid oracle.
        let ris_uav = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let incident = vec![c(1.0, 0.0), c(1.0, 0.0)];
        let mut best = 0.0f64;
        let mut best_pair = (0.0, 0.0);
        let step = PI / 180.0;
        for i in 0..360 {
            for j in 0..360 {
                let t1 = -PI + i as f64 * step;
                let t2 = -PI + j as f64 * step;
                let theta = RisPhaseVector::new(vec![t1, t2]);
                let g = effective_gain(c(0.0, 0.0), &ris_uav, &theta, &incident)
                    .unwrap()
                    .norm();
                if g > best {
                    best = g;
                    best_pair = (t1, t2);
                }
            }
        }
        assert_relative_eq!(best, 2.0, max_relative = 1e-3);
        let diff = wrap_angle(best_pair.0 - (best_pair.1 - PI / 2.0));
        assert!(diff.abs() < 2.0 * step, "maximizer off the t1 = t2 - pi/2 line: {diff}");
    }

    #[test]
    fn sinr_unit_example() {
        let snap = unit_snapshot();
        let theta = RisPhaseVector::zeros(1);
        let m = sinr_metrics(&snap, &theta, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(m.sinr, 0.8, epsilon = 1e-15);
        assert_relative_eq!(m.rate, 1.8f64.log2(), epsilon = 1e-15);
        assert_relative_eq!(m.rate, 0.8480, max_relative = 1e-4);
        assert_relative_eq!(m.desired_power, 4.0, epsilon = 1e-15);
        assert_relative_eq!(m.interference_power, 4.0, epsilon = 1e-15);
    }

    #[test]
    fn jammer_free_no_ris_reduces_to_snr() {
        let mut snap = unit_snapshot();
        snap.bs_ris = vec![c(0.0, 0.0)];
        snap.jammer_ris = vec![c(0.0, 0.0)];
        snap.bs_uav = c(0.6, -0.3);
        let theta = RisPhaseVector::zeros(1);
        let m = sinr_metrics(&snap, &theta, 2.0, 0.0, 0.5).unwrap();
        let expected = 2.0 * snap.bs_uav.norm_sqr() / 0.5;
        assert_relative_eq!(m.sinr, expected, epsilon = 1e-15);
    }

    #[test]
    fn global_phase_invariance_without_direct_term() {
        let mut rng = crate::rng::rng_stream(21, "link/phase-invariance");
        for _ in 0..100 {
            let n = rng.gen_range(1..6);
            let ris_uav: Vec<Complex64> = (0..n)
                .map(|_| crate::channel::complex_gaussian(&mut rng))
                .collect();
            let incident: Vec<Complex64> = (0..n)
                .map(|_| crate::channel::complex_gaussian(&mut rng))
                .collect();
            let base: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
            let shift: f64 = rng.gen_range(-PI..PI);
            let shifted: Vec<f64> = base.iter().map(|&a| a + shift).collect();
            let g0 = effective_gain(c(0.0, 0.0), &ris_uav, &RisPhaseVector::new(base), &incident)
                .unwrap()
                .norm();
            let g1 = effective_gain(c(0.0, 0.0), &ris_uav, &RisPhaseVector::new(shifted), &incident)
                .unwrap()
                .norm();
            assert!((g0 - g1).abs() <= 1e-12 * g0.max(1.0), "{g0} vs {g1}");
        }
    }

    #[test]
    fn aligned_phases_reach_the_amplitude_bound() {
        // Jammer-free, direct-free optimum: theta_n = -arg(conj(h_ru)·h_x)
        // achieves (sum |h_ru||h_x|)^2; grid search cannot beat it.
        let mut rng = crate::rng::rng_stream(22, "link/alignment");
        for _ in 0..20 {
            let n = rng.gen_range(1..4usize);
            let ris_uav: Vec<Complex64> = (0..n)
                .map(|_| crate::channel::complex_gaussian(&mut rng))
                .collect();
            let incident: Vec<Complex64> = (0..n)
                .map(|_| crate::channel::complex_gaussian(&mut rng))
                .collect();
            let aligned: Vec<f64> = ris_uav
                .iter()
                .zip(&incident)
                .map(|(&ru, &inc)| -(ru.conj() * inc).arg())
                .collect();
            let bound: f64 = ris_uav
                .iter()
                .zip(&incident)
                .map(|(&ru, &inc)| ru.norm() * inc.norm())
                .sum();
            let g = effective_gain(c(0.0, 0.0), &ris_uav, &RisPhaseVector::new(aligned), &incident)
                .unwrap()
                .norm();
            assert_relative_eq!(g, bound, max_relative = 1e-12);

            let points = 60usize;
            let mut best = 0.0f64;
            let mut idx = vec![0usize; n];
            loop {
                let theta = RisPhaseVector::new(
                    idx.iter()
                        .map(|&k| -PI + 2.0 * PI * k as f64 / points as f64)
                        .collect(),
                );
                let g = effective_gain(c(0.0, 0.0), &ris_uav, &theta, &incident)
                    .unwrap()
                    .norm();
                best = best.max(g);
                let mut dim = 0;
                loop {
                    if dim == n {
                        break;
                    }
                    idx[dim] += 1;
                    if idx[dim] < points {
                        break;
                    }
                    idx[dim] = 0;
                    dim += 1;
                }
                if dim == n {
                    break;
                }
            }
            assert!(best <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rate_monotone_in_powers() {
        let snap = unit_snapshot();
        let theta = RisPhaseVector::zeros(1);
        let base = sinr_metrics(&snap, &theta, 1.0, 1.0, 1.0).unwrap();
        let more_tx = sinr_metrics(&snap, &theta, 1.5, 1.0, 1.0).unwrap();
        let more_jam = sinr_metrics(&snap, &theta, 1.0, 1.5, 1.0).unwrap();
        assert!(more_tx.rate > base.rate);
        assert!(more_jam.rate < base.rate);
    }

    #[test]
    fn step_reward_examples() {
        assert_eq!(step_reward(0.7, 50.0, 50.0, 1.0), 0.7);
        assert_eq!(step_reward(1.0, 100.0, 90.0, 1.0), 11.0);
        assert!(step_reward(1.0, 90.0, 100.0, 1.0) < 1.0);
    }
}
