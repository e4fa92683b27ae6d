//! Simulator and reinforcement-learning toolkit for RIS-assisted
//! anti-jamming trajectory planning of a UAV.
//!
//! The crate models a ground base station serving a fixed-wing UAV in the
//! presence of a terrestrial jammer, with a reconfigurable intelligent
//! surface (RIS) reflecting both signals. It provides:
//!
//! - physics models: discrete-time UAV kinematics with acceleration, speed and
//!   pitch constraints ([`kinematics`]), Rician fading channels with
//!   rectangular-array steering vectors ([`channel`]), and SINR/rate link
//!   budgets under a configurable RIS phase vector ([`link`]);
//! - learning: a self-contained MLP stack with analytic backpropagation and an
//!   adaptive-moment optimizer ([`mlp`]), experience replay ([`replay`]), and
//!   DDPG/TD3 learners ([`agents`]);
//! - baselines: no-RIS operation and a perfect-CSI Dinkelbach phase optimizer
//!   with a brute-force grid verifier ([`baseline`]);
//! - an episodic environment tying it all together ([`env`]) and an experiment
//!   harness with training, evaluation, sweeps, and CSV/JSON/SVG export
//!   ([`harness`]).
//!
//! Inner loops that are data-parallel (evaluation rollouts, batch gradients,
//! phase-grid search, Monte Carlo statistics) run on rayon when the default
//! `parallel` feature is enabled and fall back to sequential iteration
//! otherwise; results are identical either way.

pub mod agents;
pub mod baseline;
pub mod channel;
pub mod config;
pub mod env;
pub mod harness;
pub mod kinematics;
pub mod link;
pub mod mlp;
pub mod parallel;
pub mod replay;
pub mod rng;
pub mod vec3;

pub use config::Config;
pub use vec3::Vec3;
