//! Experiment configuration: one file fully determines a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use manitail_core::config::{self, ConfigError};
use manitail_core::models::RobotVariant;
use manitail_rl::PpoConfig;

use crate::curriculum::{CurriculumConfig, Stage};
use crate::envs::{EnvConfig, Task};
use crate::rewards::RewardCoefficients;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    /// Iteration budget; the task default when absent.
    pub iterations: Option<u64>,
    pub n_envs: usize,
    /// Control steps collected per environment per iteration.
    pub horizon: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    /// Initial action standard deviation.
    pub init_std: f64,
    /// Iterations between checkpoint writes.
    pub checkpoint_interval: u64,
    /// Checkpoint whose policy initializes this run (required for turning
    /// stage 2).
    pub init_checkpoint: Option<PathBuf>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            iterations: None,
            n_envs: 256,
            horizon: 100,
            actor_hidden: vec![512, 256, 128],
            critic_hidden: vec![512, 256, 128],
            init_std: 0.8,
            checkpoint_interval: 100,
            init_checkpoint: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Episodes of the random-drop protocol.
    pub episodes: usize,
    /// Seed of the evaluation environment, independent of training.
    pub seed: u64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self { episodes: 50, seed: 1_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub task: Task,
    #[serde(default = "default_robot")]
    pub robot: RobotVariant,
    /// Curriculum stage; turning only.
    #[serde(default)]
    pub stage: Option<Stage>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub ppo: PpoConfig,
    #[serde(default)]
    pub curriculum: CurriculumConfig,
    #[serde(default)]
    pub rewards: RewardCoefficients,
    #[serde(default)]
    pub env: EnvConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_robot() -> RobotVariant {
    RobotVariant::ViperX300S
}

fn default_output() -> PathBuf {
    PathBuf::from("runs/experiment")
}

impl ExperimentConfig {
    pub fn new(task: Task, robot: RobotVariant) -> Self {
        Self {
            name: default_name(),
            task,
            robot,
            stage: None,
            seed: 0,
            output_dir: default_output(),
            training: TrainingConfig::default(),
            ppo: PpoConfig::default(),
            curriculum: CurriculumConfig::default(),
            rewards: RewardCoefficients::default(),
            env: EnvConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }

    /// Loads a file with includes, applies dotted `key=value` overrides and
    /// validates the result.
    pub fn load(path: &Path, overrides: &[(String, toml::Value)]) -> Result<Self, ConfigError> {
        let mut table = config::load_tree(path)?;
        for (key, value) in overrides {
            config::set_dotted(&mut table, key, value.clone())?;
        }
        let cfg: Self = config::from_table(table)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let table = config::parse_str(text).map_err(|m| ConfigError::invalid("<root>", m))?;
        let cfg: Self = config::from_table(table)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        config::to_string(self)
    }

    pub fn stage(&self) -> Stage {
        self.stage.unwrap_or(Stage::One)
    }

    /// Iteration budget, defaulting per task and stage.
    pub fn iterations(&self) -> u64 {
        self.training.iterations.unwrap_or(match (self.task, self.stage()) {
            (Task::Turning, Stage::One) => 2000,
            (Task::Turning, Stage::Two) => 5000,
            (Task::Reorientation, _) => 3000,
            (Task::Balancing, _) => 3000,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.training;
        if t.n_envs == 0 {
            return Err(ConfigError::invalid("training.n_envs", "must be positive"));
        }
        if t.horizon == 0 {
            return Err(ConfigError::invalid("training.horizon", "must be positive"));
        }
        if t.actor_hidden.contains(&0) || t.critic_hidden.contains(&0) {
            return Err(ConfigError::invalid("training.actor_hidden", "layer sizes must be positive"));
        }
        if !(t.init_std > 0.0 && t.init_std.is_finite()) {
            return Err(ConfigError::invalid("training.init_std", "must be positive"));
        }
        if t.checkpoint_interval == 0 {
            return Err(ConfigError::invalid("training.checkpoint_interval", "must be positive"));
        }
        if self.training.iterations == Some(0) {
            return Err(ConfigError::invalid("training.iterations", "must be positive"));
        }
        if self.evaluation.episodes == 0 {
            return Err(ConfigError::invalid("evaluation.episodes", "must be positive"));
        }
        if self.stage.is_some() && self.task != Task::Turning {
            return Err(ConfigError::invalid("stage", "only the turning task has stages"));
        }
        if self.task == Task::Turning && self.stage() == Stage::Two && t.init_checkpoint.is_none() {
            return Err(ConfigError::invalid(
                "training.init_checkpoint",
                "turning stage two starts from a stage-one checkpoint",
            ));
        }
        if self.env.aerial_only && self.task != Task::Reorientation {
            return Err(ConfigError::invalid("env.aerial_only", "only applies to the reorientation task"));
        }
        self.ppo.validate().map_err(|e| match e {
            manitail_rl::RlError::Config { field, message } => ConfigError::invalid(format!("ppo.{field}"), message),
            other => ConfigError::invalid("ppo", other.to_string()),
        })?;
        self.rewards.validate().map_err(|e| match e {
            crate::rewards::RewardError::Invalid { field, message } => {
                ConfigError::invalid(format!("rewards.{field}"), message)
            }
            other => ConfigError::invalid("rewards", other.to_string()),
        })?;
        self.env.validate().map_err(|m| ConfigError::invalid(format!("env.{}", m.split(' ').next().unwrap_or("")), m))?;
        Ok(())
    }
}
