//! Iteration-driven (stage 1) and reward-driven (stage 2) command curricula.

use serde::{Deserialize, Serialize};

/// Stage-1 command velocity after `iteration` iterations (m/s).
pub fn stage1_velocity(iteration: u64) -> f64 {
    1.0 + 1.5 / (1.0 + (-0.008 * (iteration as f64 - 500.0)).exp())
}

/// Stage-2 command velocity after `reward_step` successful iterations (m/s).
pub fn stage2_velocity(reward_step: u64) -> f64 {
    1.77 + 2.73 / (1.0 + (-0.01 * (reward_step as f64 - 100.0)).exp())
}

/// Width, in control steps, of the turn-onset sampling window.
pub fn command_range(reward_step: u64) -> u64 {
    1 + reward_step.min(300)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    One,
    Two,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumConfig {
    /// Mean iteration reward that must be strictly exceeded to advance the
    /// reward step.
    pub threshold: f64,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self { threshold: 4.75 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub stage: Stage,
    pub iteration: u64,
    pub reward_step: u64,
    pub threshold: f64,
    /// Current command velocity bound (m/s).
    pub velocity: f64,
    pub command_range: u64,
}

impl CurriculumState {
    pub fn new(stage: Stage, config: &CurriculumConfig) -> Self {
        let mut s = Self { stage, iteration: 0, reward_step: 0, threshold: config.threshold, velocity: 0.0, command_range: 0 };
        s.recompute();
        s
    }

    fn recompute(&mut self) {
        self.velocity = match self.stage {
            Stage::One => stage1_velocity(self.iteration),
            Stage::Two => stage2_velocity(self.reward_step),
        };
        self.command_range = command_range(self.reward_step);
    }

    /// Records one finished iteration with its mean per-step reward.
    pub fn advance(&mut self, mean_iteration_reward: f64) {
        self.iteration += 1;
        if mean_iteration_reward > self.threshold {
            self.reward_step += 1;
        }
        self.recompute();
    }
}
