//! Stochastic multi-timescale predictive-coding network with
//! prediction-error-minimization (PEM) inference.
//!
//! - [`numerics`]: seeded random streams, correlation statistics, finite-difference oracle
//! - [`model`]: the two-layer leaky-integrator network, its loss, BPTT and training
//! - [`inference`]: sliding-window PEM and closed-loop action generation
//! - [`gestures`]: synthetic 6-DoF leader/follower gesture corpus and its CSV format
//! - [`experiments`]: the imitation benchmark grid and the two-agent interaction loop
//!
//! The numerical core is generic over [`Real`] (`f32`/`f64`); the aliases
//! below fix the precision used by the experiment drivers.

pub mod experiments;
pub mod gestures;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod numerics;
pub mod scalar;

pub use scalar::Real;

pub type Parameters = model::Parameters<f64>;
pub type LatentPosterior = model::LatentPosterior<f64>;
pub type LossBreakdown = model::LossBreakdown<f64>;
pub type Sequence = model::Sequence<f64>;
pub type Checkpoint = model::Checkpoint<f64>;
pub type AgentState = inference::AgentState<f64>;
pub type StepOutput = model::StepOutput<f64>;

pub type Parameters32 = model::Parameters<f32>;
pub type AgentState32 = inference::AgentState<f32>;
