//! Small seeded training runs for determinism checks.

use std::fs;
use std::path::Path;

use manitail_core::models::RobotVariant;
use manitail_tasks::checkpoint::Checkpoint;
use manitail_tasks::envs::Task;
use manitail_tasks::evaluate::random_drops;
use manitail_tasks::experiment::ExperimentConfig;
use manitail_tasks::trainer::{train, CHECKPOINT_FILE, ITERATIONS_CSV};

/// A reorientation run small enough for a unit test.
pub fn tiny_config(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Task::Reorientation, RobotVariant::WidowX250S);
    cfg.seed = seed;
    cfg.training.iterations = Some(3);
    cfg.training.n_envs = 4;
    cfg.training.horizon = 16;
    cfg.training.actor_hidden = vec![16, 16];
    cfg.training.critic_hidden = vec![16, 16];
    cfg.training.checkpoint_interval = 2;
    cfg.ppo.minibatches = 2;
    cfg.ppo.epochs = 2;
    cfg.evaluation.episodes = 3;
    cfg
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeterminismReport {
    pub csv_identical: bool,
    pub rows: usize,
    pub eval_identical: bool,
    pub curriculum_matches_log: bool,
}

/// Trains `cfg` twice into sibling directories of `root`, then evaluates the
/// in-memory and reloaded checkpoint models on the same drops.
pub fn determinism(cfg: &ExperimentConfig, root: &Path) -> DeterminismReport {
    let a = root.join("a");
    let b = root.join("b");
    train(cfg, &a, |_| {}).unwrap();
    train(cfg, &b, |_| {}).unwrap();
    let csv_a = fs::read_to_string(a.join(ITERATIONS_CSV)).unwrap();
    let csv_b = fs::read_to_string(b.join(ITERATIONS_CSV)).unwrap();

    let ck = Checkpoint::load(&a.join(CHECKPOINT_FILE)).unwrap();
    let text = serde_json::to_string(&ck).unwrap();
    let reloaded = Checkpoint::from_json(&text).unwrap();
    let episodes = cfg.evaluation.episodes;
    let first = random_drops(cfg, &ck.model, episodes, cfg.evaluation.seed).unwrap();
    let second = random_drops(cfg, &reloaded.model, episodes, cfg.evaluation.seed).unwrap();

    let mut reader = csv::Reader::from_reader(csv_a.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let last = reader.records().last().unwrap().unwrap();
    let col = |name: &str| last.get(headers.iter().position(|h| h == name).unwrap()).unwrap().to_string();
    let c = &ck.curriculum;
    let curriculum_matches_log = col("iteration") == ck.iteration.to_string()
        && col("reward_step") == c.reward_step.to_string()
        && col("velocity_cmd") == c.velocity.to_string()
        && col("command_range") == c.command_range.to_string();

    DeterminismReport {
        csv_identical: csv_a == csv_b,
        rows: csv_a.lines().count().saturating_sub(1),
        eval_identical: first == second && reloaded == ck,
        curriculum_matches_log,
    }
}
