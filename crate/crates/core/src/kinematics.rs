//! Discrete-time UAV motion with acceleration, speed, and pitch constraints.
//!
//! Position integrates exactly under piecewise-constant acceleration:
//! `q' = q + V δ + ½ a δ²`, `V_raw = V + a δ`. Learned accelerations are
//! clipped per axis, and the raw velocity is repaired in two stages: the
//! pitch ratio `|V_z|/‖V‖` is rotated onto the cone boundary (preserving
//! speed, vertical sign, and horizontal azimuth), then the speed is rescaled
//! radially into `[v_min, v_max]`. Both constraints hold exactly afterwards
//! and the repair is idempotent.

use crate::config::KinematicLimits;
use crate::vec3::Vec3;

/// Relative slack used both to trigger a repair and to verify feasibility;
/// keeps the repair idempotent in floating point.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// UAV state at the start of a slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UavState {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Slot index in `[0, slot_count]`.
    pub slot: u32,
}

/// Per-axis clipped acceleration command (m/s²).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Accel(Vec3);

impl Accel {
    pub fn vector(&self) -> Vec3 {
        self.0
    }
}

/// Clip each component of a raw acceleration into `[-accel_max, accel_max]`.
pub fn clamp_accel(raw: Vec3, limits: &KinematicLimits) -> Accel {
    let a = limits.accel_max;
    Accel(Vec3::new(
        raw.x.clamp(-a, a),
        raw.y.clamp(-a, a),
        raw.z.clamp(-a, a),
    ))
}

/// Result of the velocity repair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub velocity: Vec3,
    /// Set when the input gave no usable direction (zero vector, or pure
    /// vertical with no heading hint) and a fallback heading was invented.
    pub degenerate: bool,
}

/// Repair a raw velocity so that both the speed band and the pitch-ratio
/// constraint hold. `heading_hint` supplies a direction for degenerate
/// inputs (typically the pre-step velocity).
pub fn project(v_raw: Vec3, heading_hint: Option<Vec3>, limits: &KinematicLimits) -> Projection {
    let speed = v_raw.norm();
    if speed == 0.0 || !v_raw.is_finite() {
        let (dir, degenerate) = match heading_hint.and_then(Vec3::normalized) {
            Some(u) => (u, false),
            None => (Vec3::UNIT_X, true),
        };
        return Projection {
            velocity: dir * limits.speed_min,
            degenerate,
        };
    }

    let sin_pitch = limits.pitch_max.sin();
    let cos_pitch = limits.pitch_max.cos();
    let mut v = v_raw;
    let mut degenerate = false;
    if v.z.abs() > sin_pitch * speed * (1.0 + FEASIBILITY_SLACK) {
        let horizontal = v.horizontal_norm();
        let (ux, uy, invented) = if horizontal > 0.0 {
            (v.x / horizontal, v.y / horizontal, false)
        } else {
            // Pure vertical: recover an azimuth from the hint, else +x.
            match heading_hint.map(|h| (h.x, h.y, h.horizontal_norm())) {
                Some((hx, hy, hn)) if hn > 0.0 => (hx / hn, hy / hn, false),
                _ => (1.0, 0.0, true),
            }
        };
        degenerate = invented;
        v = Vec3::new(
            ux * cos_pitch * speed,
            uy * cos_pitch * speed,
            v.z.signum() * sin_pitch * speed,
        );
    }

    let speed = v.norm();
    if speed < limits.speed_min * (1.0 - FEASIBILITY_SLACK) {
        v = v * (limits.speed_min / speed);
    } else if speed > limits.speed_max * (1.0 + FEASIBILITY_SLACK) {
        v = v * (limits.speed_max / speed);
    }
    Projection {
        velocity: v,
        degenerate,
    }
}

/// Advance one slot: exact quadratic position update, Euler velocity update,
/// then constraint repair. Every input is made feasible.
pub fn step(state: &UavState, accel: &Accel, slot_length: f64, limits: &KinematicLimits) -> UavState {
    let a = accel.vector();
    let position =
        state.position + state.velocity * slot_length + a * (0.5 * slot_length * slot_length);
    let raw_velocity = state.velocity + a * slot_length;
    let projected = project(raw_velocity, Some(state.velocity), limits);
    UavState {
        position,
        velocity: projected.velocity,
        slot: state.slot + 1,
    }
}

/// Euclidean distance from the UAV to its goal.
pub fn finishing_distance(position: Vec3, goal: Vec3) -> f64 {
    position.distance(goal)
}

/// Default initial velocity: minimum speed pointed at the goal (a fixed-wing
/// craft cannot hover). Falls back to +x when start and goal coincide.
pub fn initial_velocity(start: Vec3, goal: Vec3, limits: &KinematicLimits) -> Vec3 {
    let dir = (goal - start).normalized().unwrap_or(Vec3::UNIT_X);
    dir * limits.speed_min
}

/// True when `v` satisfies both the speed band and the pitch ratio within
/// the standard slack.
pub fn is_feasible(v: Vec3, limits: &KinematicLimits) -> bool {
    let speed = v.norm();
    let sin_pitch = limits.pitch_max.sin();
    speed >= limits.speed_min * (1.0 - FEASIBILITY_SLACK)
        && speed <= limits.speed_max * (1.0 + FEASIBILITY_SLACK)
        && v.z.abs() <= sin_pitch * speed * (1.0 + FEASIBILITY_SLACK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn limits() -> KinematicLimits {
        KinematicLimits {
            accel_max: 2.0,
            speed_min: 2.0,
            speed_max: 40.0,
            pitch_max: 45f64.to_radians(),
        }
    }

    #[test]
    fn accel_clips_componentwise() {
        let a = clamp_accel(Vec3::new(3.0, 0.0, -5.0), &limits());
        assert_eq!(a.vector(), Vec3::new(2.0, 0.0, -2.0));
        assert_eq!(clamp_accel(Vec3::ZERO, &limits()).vector(), Vec3::ZERO);
        let interior = Vec3::new(1.9, -1.9, 2.0);
        assert_eq!(clamp_accel(interior, &limits()).vector(), interior);
    }

    #[test]
    fn step_integrates_quadratically() {
        let state = UavState {
            position: Vec3::ZERO,
            velocity: Vec3::new(10.0, 0.0, 0.0),
            slot: 0,
        };
        let a = clamp_accel(Vec3::new(2.0, 0.0, 0.0), &limits());
        let next = step(&state, &a, 0.1, &limits());
        assert_relative_eq!(next.position.x, 1.01, max_relative = 1e-15);
        assert_relative_eq!(next.velocity.x, 10.2, max_relative = 1e-15);
        assert_eq!(next.slot, 1);
    }

    #[test]
    fn zero_accel_keeps_feasible_velocity() {
        let state = UavState {
            position: Vec3::new(1.0, 2.0, 3.0),
            velocity: Vec3::new(5.0, -3.0, 1.0),
            slot: 7,
        };
        let a = clamp_accel(Vec3::ZERO, &limits());
        let next = step(&state, &a, 0.1, &limits());
        assert_eq!(next.velocity, state.velocity);
        assert_eq!(next.position, state.position + state.velocity * 0.1);
    }

    #[test]
    fn slow_velocity_rescaled_to_minimum_speed() {
        let p = project(Vec3::new(0.5, 0.0, 0.0), None, &limits());
        assert!(!p.degenerate);
        assert_relative_eq!(p.velocity.norm(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(p.velocity.x, 2.0, max_relative = 1e-12);
        assert_eq!(p.velocity.y, 0.0);
    }

    #[test]
    fn fast_velocity_rescaled_radially() {
        let v = Vec3::new(30.0, 40.0, 0.0); // norm 50
        let p = project(v, None, &limits());
        assert_relative_eq!(p.velocity.norm(), 40.0, max_relative = 1e-12);
        let u = p.velocity.normalized().unwrap();
        assert_relative_eq!(u.x, 0.6, max_relative = 1e-12);
        assert_relative_eq!(u.y, 0.8, max_relative = 1e-12);
    }

    // Independent scalar construction of the pitch repair in the
    // (horizontal, vertical) half-plane, used as the oracle for the 3D rule.
    fn pitch_repair_2d(h: f64, z: f64, pitch_max: f64) -> (f64, f64) {
        let n = (h * h + z * z).sqrt();
        if z.abs() <= pitch_max.sin() * n {
            (h, z)
        } else {
            (pitch_max.cos() * n, z.signum() * pitch_max.sin() * n)
        }
    }

    #[test]
    fn pure_vertical_clipped_to_pitch_cone() {
        let lim = limits();
        let p = project(Vec3::new(0.0, 0.0, 10.0), None, &lim);
        let ratio = p.velocity.z / p.velocity.norm();
        assert_relative_eq!(ratio, 45f64.to_radians().sin(), max_relative = 1e-12);
        assert!(p.degenerate, "no azimuth available without a hint");
        // Matches the scalar construction with speed preserved.
        let (h, z) = pitch_repair_2d(0.0, 10.0, lim.pitch_max);
        assert_relative_eq!(p.velocity.horizontal_norm(), h, max_relative = 1e-12);
        assert_relative_eq!(p.velocity.z, z, max_relative = 1e-12);
    }

    #[test]
    fn pitch_repair_matches_scalar_oracle() {
        let lim = limits();
        let mut rng = crate::rng::rng_stream(7, "kinematics/pitch-oracle");
        for _ in 0..500 {
            let v = Vec3::new(
                rng.gen_range(-30.0..30.0),
                rng.gen_range(-30.0..30.0),
                rng.gen_range(-30.0..30.0),
            );
            if v.norm() < 1e-6 {
                continue;
            }
            let p = project(v, None, &lim);
            let (h_exp, z_exp) = pitch_repair_2d(v.horizontal_norm(), v.z, lim.pitch_max);
            // Radial speed rescale preserves the (h, z) proportions.
            let n = (h_exp * h_exp + z_exp * z_exp).sqrt();
            let scale = (n.clamp(lim.speed_min, lim.speed_max)) / n;
            assert_relative_eq!(p.velocity.horizontal_norm(), h_exp * scale, max_relative = 1e-9);
            assert_relative_eq!(p.velocity.z, z_exp * scale, max_relative = 1e-9);
            // Azimuth preserved whenever the input had one.
            if v.horizontal_norm() > 1e-9 {
                let cross = v.x * p.velocity.y - v.y * p.velocity.x;
                assert!(cross.abs() < 1e-9 * v.norm() * p.velocity.norm());
                assert!(v.x * p.velocity.x + v.y * p.velocity.y >= 0.0);
            }
        }
    }

    #[test]
    fn zero_vector_uses_hint_or_unit_x() {
        let lim = limits();
        let hinted = project(Vec3::ZERO, Some(Vec3::new(0.0, 3.0, 0.0)), &lim);
        assert!(!hinted.degenerate);
        assert_relative_eq!(hinted.velocity.y, 2.0, max_relative = 1e-12);
        let bare = project(Vec3::ZERO, None, &lim);
        assert!(bare.degenerate);
        assert_eq!(bare.velocity, Vec3::UNIT_X * 2.0);
    }

    #[test]
    fn feasible_velocity_unchanged_and_projection_idempotent() {
        let lim = limits();
        let v = Vec3::new(10.0, 5.0, 3.0);
        assert!(is_feasible(v, &lim));
        let p = project(v, None, &lim);
        assert_eq!(p.velocity, v);
        let mut rng = crate::rng::rng_stream(11, "kinematics/idempotence");
        for _ in 0..1000 {
            let v = Vec3::new(
                rng.gen_range(-80.0..80.0),
                rng.gen_range(-80.0..80.0),
                rng.gen_range(-80.0..80.0),
            );
            let once = project(v, None, &lim).velocity;
            let twice = project(once, None, &lim).velocity;
            assert_eq!(once, twice, "projection must be idempotent for {v:?}");
        }
    }

    #[test]
    fn half_steps_match_full_step_when_unconstrained() {
        let lim = limits();
        let state = UavState {
            position: Vec3::new(3.0, -2.0, 10.0),
            velocity: Vec3::new(12.0, 4.0, 1.0),
            slot: 0,
        };
        let a = clamp_accel(Vec3::new(1.0, -0.5, 0.3), &lim);
        let full = step(&state, &a, 0.1, &lim);
        let half = step(&step(&state, &a, 0.05, &lim), &a, 0.05, &lim);
        assert_relative_eq!(full.position.x, half.position.x, epsilon = 1e-9);
        assert_relative_eq!(full.position.y, half.position.y, epsilon = 1e-9);
        assert_relative_eq!(full.position.z, half.position.z, epsilon = 1e-9);
    }

    #[test]
    fn finishing_distance_examples() {
        assert_eq!(finishing_distance(Vec3::new(3.0, 4.0, 0.0), Vec3::ZERO), 5.0);
        let q = Vec3::new(7.0, -1.0, 2.0);
        assert_eq!(finishing_distance(q, q), 0.0);
        let d = finishing_distance(Vec3::new(-200.0, -100.0, 5.0), Vec3::new(100.0, 60.0, 50.0));
        // sqrt(300^2 + 160^2 + 45^2)
        assert_relative_eq!(d, 117_625f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(d, 342.9650, max_relative = 1e-5);
    }

    #[test]
    fn initial_velocity_points_at_goal_at_min_speed() {
        let lim = limits();
        let v = initial_velocity(Vec3::ZERO, Vec3::new(0.0, 10.0, 0.0), &lim);
        assert_relative_eq!(v.y, 2.0, max_relative = 1e-12);
        let fallback = initial_velocity(Vec3::ZERO, Vec3::ZERO, &lim);
        assert_eq!(fallback, Vec3::UNIT_X * 2.0);
    }

    proptest! {
        #[test]
        fn stepped_velocity_always_feasible(
            vx in -60f64..60.0, vy in -60f64..60.0, vz in -60f64..60.0,
            ax in -10f64..10.0, ay in -10f64..10.0, az in -10f64..10.0,
        ) {
            let lim = limits();
            let state = UavState {
                position: Vec3::ZERO,
                velocity: Vec3::new(vx, vy, vz),
                slot: 0,
            };
            let a = clamp_accel(Vec3::new(ax, ay, az), &lim);
            prop_assert!(a.vector().x.abs() <= lim.accel_max);
            prop_assert!(a.vector().y.abs() <= lim.accel_max);
            prop_assert!(a.vector().z.abs() <= lim.accel_max);
            let next = step(&state, &a, 0.1, &lim);
            prop_assert!(is_feasible(next.velocity, &lim));
        }
    }
}
