//! Complex channel gains for every link in the scenario.
//!
//! Direct BS-UAV and jammer-UAV links are Rician with an elevation-dependent
//! factor `β_t = ξ1·exp(ξ2·asin(z/d))`; BS-RIS and jammer-RIS links are
//! Rician around rectangular-array steering vectors; the RIS-UAV link is pure
//! line of sight with inverse-square path loss. Element spacing is half a
//! wavelength, so steering phases step by `π·index·spatial_frequency` and no
//! carrier frequency enters the model. Small-scale fading is block fading:
//! the UAV-side links redraw every slot, the terrestrial RIS links once per
//! episode (configurable to per-slot).

use crate::config::{ChannelParams, ScenarioConfig};
use crate::vec3::Vec3;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("degenerate geometry: {link} distance is zero")]
    DegenerateGeometry { link: &'static str },
}

/// Direction cosines seen by the array, each in `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialFrequencies {
    pub phi_x: f64,
    pub phi_y: f64,
}

/// All link distances for one UAV position (meters).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distances {
    pub bs_uav: f64,
    pub bs_ris: f64,
    pub jammer_ris: f64,
    pub jammer_uav: f64,
    pub ris_uav: f64,
}

/// Every complex gain needed to evaluate one time slot.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSnapshot {
    pub bs_uav: Complex64,
    pub jammer_uav: Complex64,
    pub bs_ris: Vec<Complex64>,
    pub jammer_ris: Vec<Complex64>,
    pub ris_uav: Vec<Complex64>,
    pub slot: u32,
}

impl ChannelSnapshot {
    pub fn n_elements(&self) -> usize {
        self.ris_uav.len()
    }

    pub fn is_finite(&self) -> bool {
        let finite = |c: &Complex64| c.re.is_finite() && c.im.is_finite();
        finite(&self.bs_uav)
            && finite(&self.jammer_uav)
            && self.bs_ris.iter().all(finite)
            && self.jammer_ris.iter().all(finite)
            && self.ris_uav.iter().all(finite)
    }
}

/// Quasi-static fading of the BS-RIS and jammer-RIS links, drawn per episode.
#[derive(Clone, Debug, PartialEq)]
pub struct RisLinks {
    pub bs_ris: Vec<Complex64>,
    pub jammer_ris: Vec<Complex64>,
}

/// Zero-mean unit-variance circularly symmetric complex Gaussian draw.
pub fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// All five link distances for the UAV at `q_t`.
pub fn distances(q_t: Vec3, scenario: &ScenarioConfig) -> Distances {
    Distances {
        bs_uav: q_t.norm(),
        bs_ris: scenario.ris_reference.norm(),
        jammer_ris: (scenario.jammer_position - scenario.ris_reference).norm(),
        jammer_uav: (q_t - scenario.jammer_position).norm(),
        ris_uav: (q_t - scenario.ris_reference).norm(),
    }
}

/// Elevation-dependent Rician factor of the direct links,
/// `β_t = ξ1·exp(ξ2·asin(z_t/d_bu))` (linear ratio).
pub fn rician_factor_bu(z_t: f64, d_bu: f64, params: &ChannelParams) -> Result<f64, ChannelError> {
    if d_bu <= 0.0 {
        return Err(ChannelError::DegenerateGeometry { link: "bs-uav" });
    }
    let ratio = (z_t / d_bu).clamp(-1.0, 1.0);
    Ok(params.rician_xi1 * (params.rician_xi2 * ratio.asin()).exp())
}

/// Rectangular-array response for the given direction cosines, at
/// half-wavelength spacing. The element `(col k_x, row k_y)` lands at
/// flattened index `k_x * n_y + k_y` (columns outer, rows inner) with value
/// `exp(-jπ(k_x·φ_x + k_y·φ_y))`; every entry has unit modulus.
pub fn steering_vector(n_x: u32, n_y: u32, phi: &SpatialFrequencies) -> Vec<Complex64> {
    let mut out = Vec::with_capacity((n_x * n_y) as usize);
    for kx in 0..n_x {
        let phase_x = -PI * kx as f64 * phi.phi_x;
        for ky in 0..n_y {
            let phase = phase_x - PI * ky as f64 * phi.phi_y;
            out.push(Complex64::from_polar(1.0, phase));
        }
    }
    out
}

/// One Rician draw for a direct (scalar) link: deterministic unit-modulus
/// line-of-sight component plus a fresh scatter draw, scaled by the path
/// loss `sqrt(ρ d^{-κ})`.
pub fn sample_direct(
    d: f64,
    rician_factor: f64,
    exponent: f64,
    ref_path_loss: f64,
    rng: &mut impl Rng,
) -> Result<Complex64, ChannelError> {
    if d <= 0.0 {
        return Err(ChannelError::DegenerateGeometry { link: "direct" });
    }
    let amplitude = (ref_path_loss * d.powf(-exponent)).sqrt();
    let los_weight = (rician_factor / (1.0 + rician_factor)).sqrt();
    let nlos_weight = (1.0 / (1.0 + rician_factor)).sqrt();
    let los = Complex64::new(1.0, 0.0);
    let scatter = complex_gaussian(rng);
    Ok((los * los_weight + scatter * nlos_weight) * amplitude)
}

fn ris_incident_link(
    d: f64,
    los: &[Complex64],
    params: &ChannelParams,
    rng: &mut impl Rng,
) -> Vec<Complex64> {
    let amplitude = (params.ref_path_loss * d.powf(-params.exponent_ris)).sqrt();
    let beta = params.rician_ris;
    let los_weight = (beta / (1.0 + beta)).sqrt();
    let nlos_weight = (1.0 / (1.0 + beta)).sqrt();
    los.iter()
        .map(|&g| (g * los_weight + complex_gaussian(rng) * nlos_weight) * amplitude)
        .collect()
}

/// Draw the BS-RIS and jammer-RIS channel vectors. Steering directions come
/// from the geometry; the scatter components are i.i.d. complex Gaussian.
pub fn sample_ris_links(
    scenario: &ScenarioConfig,
    params: &ChannelParams,
    rng: &mut impl Rng,
) -> RisLinks {
    let d = distances(Vec3::ZERO, scenario);
    let r = scenario.ris_reference;
    let j = scenario.jammer_position;
    let bs_phi = SpatialFrequencies {
        phi_x: r.x / d.bs_ris,
        phi_y: r.y / d.bs_ris,
    };
    let jam_phi = SpatialFrequencies {
        phi_x: (j.x - r.x) / d.jammer_ris,
        phi_y: (j.y - r.y) / d.jammer_ris,
    };
    let bs_los = steering_vector(scenario.ris_cols, scenario.ris_rows, &bs_phi);
    let jam_los = steering_vector(scenario.ris_cols, scenario.ris_rows, &jam_phi);
    RisLinks {
        bs_ris: ris_incident_link(d.bs_ris, &bs_los, params, rng),
        jammer_ris: ris_incident_link(d.jammer_ris, &jam_los, params, rng),
    }
}

/// Deterministic RIS-UAV line-of-sight vector with inverse-square path loss:
/// `sqrt(ρ)/d_RU` times the array response at the departure direction.
pub fn ris_uav_link(
    q_t: Vec3,
    scenario: &ScenarioConfig,
    params: &ChannelParams,
) -> Result<Vec<Complex64>, ChannelError> {
    let r = scenario.ris_reference;
    let d_ru = (q_t - r).norm();
    if d_ru <= 0.0 {
        return Err(ChannelError::DegenerateGeometry { link: "ris-uav" });
    }
    let phi = SpatialFrequencies {
        phi_x: (q_t.x - r.x) / d_ru,
        phi_y: (q_t.y - r.y) / d_ru,
    };
    let amplitude = params.ref_path_loss.sqrt() / d_ru;
    Ok(steering_vector(scenario.ris_cols, scenario.ris_rows, &phi)
        .into_iter()
        .map(|g| g * amplitude)
        .collect())
}

/// Assemble the full snapshot for one slot: fresh draws for the direct links,
/// the deterministic RIS-UAV response at `q_t`, and the supplied (typically
/// quasi-static) RIS incident links.
pub fn sample_snapshot(
    q_t: Vec3,
    slot: u32,
    scenario: &ScenarioConfig,
    params: &ChannelParams,
    ris_links: &RisLinks,
    rng: &mut impl Rng,
) -> Result<ChannelSnapshot, ChannelError> {
    let d = distances(q_t, scenario);
    if d.bs_uav <= 0.0 {
        return Err(ChannelError::DegenerateGeometry { link: "bs-uav" });
    }
    if d.jammer_uav <= 0.0 {
        return Err(ChannelError::DegenerateGeometry { link: "jammer-uav" });
    }
    let beta_t = rician_factor_bu(q_t.z, d.bs_uav, params)?;
    let bs_uav = sample_direct(d.bs_uav, beta_t, params.exponent_direct, params.ref_path_loss, rng)?;
    let jammer_uav = sample_direct(
        d.jammer_uav,
        beta_t,
        params.exponent_direct,
        params.ref_path_loss,
        rng,
    )?;
    let ris_uav = ris_uav_link(q_t, scenario, params)?;
    Ok(ChannelSnapshot {
        bs_uav,
        jammer_uav,
        bs_ris: ris_links.bs_ris.clone(),
        jammer_ris: ris_links.jammer_ris.clone(),
        ris_uav,
        slot,
    })
}
