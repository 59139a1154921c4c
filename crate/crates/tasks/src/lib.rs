//! Task layer for a quadruped with a manipulator tail: reward terms,
//! curricula, the PD action path, the three task environments, training
//! with checkpoints, and the evaluation protocols.

pub mod checkpoint;
pub mod control;
pub mod curriculum;
pub mod envs;
pub mod evaluate;
pub mod experiment;
pub mod rewards;
pub mod trainer;

use thiserror::Error;

use manitail_core::config::ConfigError;
use manitail_core::dynamics::DynamicsError;
use manitail_core::models::ModelError;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("action has {got} entries, expected {expected}")]
    Action { expected: usize, got: usize },
    #[error("invalid environment config: {0}")]
    Config(String),
    #[error("simulation fault in {task} at t = {time:.4} s: {message}")]
    Fault { task: &'static str, time: f64, message: String },
}

/// Error classes surfaced to the command line.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("runtime: {0}")]
    Runtime(String),
}

impl RunError {
    /// Machine-readable class name.
    pub fn class(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Checkpoint(_) => "checkpoint",
            RunError::Runtime(_) => "runtime",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Checkpoint(_) => 3,
            RunError::Runtime(_) => 4,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

impl From<TaskError> for RunError {
    fn from(e: TaskError) -> Self {
        match e {
            TaskError::Config(m) => RunError::Config(m),
            other => RunError::Runtime(other.to_string()),
        }
    }
}

impl From<manitail_rl::RlError> for RunError {
    fn from(e: manitail_rl::RlError) -> Self {
        match e {
            manitail_rl::RlError::Config { .. } => RunError::Config(e.to_string()),
            other => RunError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Runtime(e.to_string())
    }
}
