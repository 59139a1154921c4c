//! Collect-update training loop with curriculum advancement, the iteration
//! CSV and periodic checkpoints.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use manitail_core::models::Robot;
use manitail_rl::env::CollectStats;
use manitail_rl::ppo::Ppo;
use manitail_rl::{ActorCritic, Collector, Environment, PpoStats};

use crate::checkpoint::Checkpoint;
use crate::curriculum::{CurriculumState, Stage};
use crate::envs::{CurriculumSnapshot, QuadrupedEnv, Task, TERM_NAMES};
use crate::experiment::ExperimentConfig;
use crate::RunError;

pub const ITERATIONS_CSV: &str = "iterations.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

/// Fixed leading columns of the iteration CSV; the reward-term means follow.
pub const ITERATION_COLUMNS: [&str; 18] = [
    "iteration",
    "stage",
    "reward_step",
    "velocity_cmd",
    "command_range",
    "mean_reward",
    "mean_return",
    "mean_length",
    "episodes",
    "terminated",
    "truncated",
    "policy_loss",
    "value_loss",
    "entropy",
    "kl",
    "clip_fraction",
    "learning_rate",
    "action_std",
];

pub fn iteration_header() -> Vec<String> {
    ITERATION_COLUMNS.iter().chain(TERM_NAMES.iter()).map(|s| s.to_string()).collect()
}

pub fn snapshot(c: &CurriculumState) -> CurriculumSnapshot {
    CurriculumSnapshot { stage: c.stage, velocity: c.velocity, command_range: c.command_range }
}

/// Seed of environment `index` in a run seeded with `seed`.
pub fn env_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(index as u64)
}

pub fn build_env(cfg: &ExperimentConfig, seed: u64) -> Result<QuadrupedEnv, RunError> {
    let robot = Robot::new(cfg.robot).map_err(|e| RunError::Config(e.to_string()))?;
    Ok(QuadrupedEnv::new(cfg.task, robot, cfg.env.clone(), cfg.rewards.clone(), seed)?)
}

pub fn new_model(cfg: &ExperimentConfig, env: &QuadrupedEnv) -> ActorCritic {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    ActorCritic::new(
        env.observation_dim(),
        env.action_dim(),
        &cfg.training.actor_hidden,
        &cfg.training.critic_hidden,
        cfg.training.init_std,
        &mut rng,
    )
}

/// One row of the iteration CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: u64,
    pub curriculum: CurriculumState,
    pub collect: CollectStats,
    pub update: PpoStats,
    pub action_std: f64,
}

impl IterationRecord {
    pub fn fields(&self) -> Vec<String> {
        let c = &self.curriculum;
        let s = &self.collect;
        let u = &self.update;
        let stage = match c.stage {
            Stage::One => "one",
            Stage::Two => "two",
        };
        let mut row = vec![
            self.iteration.to_string(),
            stage.to_string(),
            c.reward_step.to_string(),
            c.velocity.to_string(),
            c.command_range.to_string(),
            s.mean_reward.to_string(),
            s.mean_return.to_string(),
            s.mean_length.to_string(),
            s.episodes.to_string(),
            s.terminated.to_string(),
            s.truncated.to_string(),
            u.policy_loss.to_string(),
            u.value_loss.to_string(),
            u.entropy.to_string(),
            u.kl.to_string(),
            u.clip_fraction.to_string(),
            u.learning_rate.to_string(),
            self.action_std.to_string(),
        ];
        row.extend(s.term_means.iter().map(|v| v.to_string()));
        row
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub iterations: u64,
    pub last_mean_reward: f64,
}

/// Initial model, optimizer and curriculum, honoring `init_checkpoint`.
fn initial_state(
    cfg: &ExperimentConfig,
    env: &QuadrupedEnv,
) -> Result<(ActorCritic, Ppo, CurriculumState), RunError> {
    let curriculum = CurriculumState::new(cfg.stage(), &cfg.curriculum);
    let model = match &cfg.training.init_checkpoint {
        Some(path) => {
            let ck = Checkpoint::load(path)?;
            if ck.config.task != cfg.task || ck.config.robot != cfg.robot {
                return Err(RunError::Checkpoint(format!(
                    "{} was trained for {} / {}, not {} / {}",
                    path.display(),
                    ck.config.task.as_str(),
                    ck.config.robot,
                    cfg.task.as_str(),
                    cfg.robot
                )));
            }
            if cfg.task == Task::Turning && cfg.stage() == Stage::Two && ck.config.stage() != Stage::One {
                return Err(RunError::Checkpoint(format!("{} is not a stage-one checkpoint", path.display())));
            }
            if ck.model.obs_dim() != env.observation_dim() || ck.model.action_dim() != env.action_dim() {
                return Err(RunError::Checkpoint("checkpoint dimensions do not match the environment".into()));
            }
            ck.model
        }
        None => new_model(cfg, env),
    };
    let ppo = Ppo::new(cfg.ppo.clone(), &model)?;
    Ok((model, ppo, curriculum))
}

/// Trains according to `cfg`, writing the iteration CSV and checkpoints into
/// `out_dir`. `on_iteration` sees every record as it is written.
pub fn train(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    mut on_iteration: impl FnMut(&IterationRecord),
) -> Result<TrainOutcome, RunError> {
    cfg.validate()?;
    let mut envs = (0..cfg.training.n_envs)
        .map(|i| build_env(cfg, env_seed(cfg.seed, i)))
        .collect::<Result<Vec<_>, _>>()?;
    let (mut model, mut ppo, mut curriculum) = initial_state(cfg, &envs[0])?;
    for e in &mut envs {
        e.set_curriculum(snapshot(&curriculum));
    }
    let mut collector = Collector::new(envs, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));

    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("config.cfg"), cfg.to_toml_string()?)?;
    let mut csv = csv::Writer::from_writer(File::create(out_dir.join(ITERATIONS_CSV))?);
    csv.write_record(iteration_header())?;
    let checkpoint = out_dir.join(CHECKPOINT_FILE);
    let total = cfg.iterations();
    let mut last_mean_reward = f64::NAN;

    for it in 0..total {
        for e in collector.envs_mut() {
            e.set_curriculum(snapshot(&curriculum));
        }
        let (buf, stats) = collector.collect(&mut model, cfg.training.horizon, true)?;
        let update = ppo.update(&mut model, &buf, &mut rng).map_err(|e| {
            RunError::Runtime(format!("update failed at iteration {it}: {e}; last good checkpoint kept"))
        })?;
        if !stats.mean_reward.is_finite() {
            return Err(RunError::Runtime(format!("non-finite reward at iteration {it}; last good checkpoint kept")));
        }
        curriculum.advance(stats.mean_reward);
        last_mean_reward = stats.mean_reward;
        let action_std =
            model.actor.log_std.iter().map(|l| l.exp()).sum::<f64>() / model.actor.log_std.len().max(1) as f64;
        let record = IterationRecord { iteration: it + 1, curriculum: curriculum.clone(), collect: stats, update, action_std };
        csv.write_record(record.fields())?;
        csv.flush()?;
        on_iteration(&record);
        if (it + 1) % cfg.training.checkpoint_interval == 0 || it + 1 == total {
            Checkpoint::new(it + 1, cfg.clone(), curriculum.clone(), model.clone(), ppo.clone()).save(&checkpoint)?;
        }
    }
    Ok(TrainOutcome { checkpoint, iterations: total, last_mean_reward })
}
