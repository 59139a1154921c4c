//! Learning machinery: multilayer perceptrons with hand-written backprop,
//! Adam, a state-independent-variance Gaussian policy, observation
//! normalization, rollout collection over a vector of environments, GAE and
//! the clipped-surrogate PPO update.

pub mod adam;
pub mod env;
pub mod gae;
pub mod nn;
pub mod normalizer;
pub mod policy;
pub mod ppo;
pub mod toy;

pub use env::{Collector, Environment, Status, Step};
pub use nn::Mlp;
pub use normalizer::Normalizer;
pub use policy::{ActorCritic, GaussianPolicy};
pub use ppo::{PpoConfig, PpoStats};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("environment {index} failed: {message}")]
    Env { index: usize, message: String },
    #[error("invalid configuration `{field}`: {message}")]
    Config { field: &'static str, message: String },
}
