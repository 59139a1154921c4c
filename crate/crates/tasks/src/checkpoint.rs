//! Versioned JSON checkpoints holding the networks, normalizer statistics,
//! optimizer state, curriculum state and the experiment config.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use manitail_rl::ppo::Ppo;
use manitail_rl::ActorCritic;

use crate::curriculum::CurriculumState;
use crate::experiment::ExperimentConfig;
use crate::RunError;

pub const FORMAT: &str = "manitail-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    /// Completed training iterations.
    pub iteration: u64,
    pub config: ExperimentConfig,
    pub curriculum: CurriculumState,
    pub model: ActorCritic,
    pub ppo: Ppo,
}

impl Checkpoint {
    pub fn new(
        iteration: u64,
        config: ExperimentConfig,
        curriculum: CurriculumState,
        model: ActorCritic,
        ppo: Ppo,
    ) -> Self {
        Self { format: FORMAT.into(), version: VERSION, iteration, config, curriculum, model, ppo }
    }

    /// Writes through a temporary file so a crash never leaves a truncated
    /// checkpoint behind.
    pub fn save(&self, path: &Path) -> Result<(), RunError> {
        let text = serde_json::to_string(self).map_err(|e| RunError::Checkpoint(e.to_string()))?;
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, text)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path)
            .map_err(|e| RunError::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            RunError::Checkpoint(m) => RunError::Checkpoint(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, RunError> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| RunError::Checkpoint(format!("not a checkpoint: {e}")))?;
        if header.format != FORMAT {
            return Err(RunError::Checkpoint(format!("unknown format `{}`", header.format)));
        }
        if header.version != VERSION {
            return Err(RunError::Checkpoint(format!(
                "version {} is not supported (expected {VERSION})",
                header.version
            )));
        }
        let ck: Self = serde_json::from_str(text).map_err(|e| RunError::Checkpoint(e.to_string()))?;
        if ck.model.obs_dim() == 0 || ck.model.action_dim() == 0 {
            return Err(RunError::Checkpoint("empty model".into()));
        }
        Ok(ck)
    }
}
