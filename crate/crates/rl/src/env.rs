//! Environment interface and rollout collection over a vector of
//! environments.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::policy::ActorCritic;
use crate::RlError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Running,
    /// Episode ended by a rule; no value is bootstrapped past this step.
    Terminated,
    /// Episode hit its time limit; the value of the final observation is
    /// bootstrapped.
    Truncated,
}

impl Status {
    pub fn is_done(self) -> bool {
        self != Status::Running
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    /// Observation after the step (the final one when the episode ended).
    pub observation: Vec<f64>,
    pub reward: f64,
    pub status: Status,
    /// Environment-defined reason code for the status; 0 when running.
    pub tag: u8,
    /// Named reward components, in the order of `Environment::term_names`.
    pub terms: Vec<f64>,
}

pub trait Environment: Send {
    type Error: std::error::Error + Send + Sync + 'static;

    fn observation_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn term_names(&self) -> Vec<&'static str> {
        Vec::new()
    }
    /// Starts a new episode, drawing randomness from the environment's own
    /// seeded generator.
    fn reset(&mut self) -> Result<Vec<f64>, Self::Error>;
    fn step(&mut self, action: &[f64]) -> Result<Step, Self::Error>;
}

/// Transitions stored step-major: sample `t * n_envs + e`.
#[derive(Clone, Debug, PartialEq)]
pub struct RolloutBuffer {
    pub n_envs: usize,
    pub horizon: usize,
    /// Normalized observations, one column per sample.
    pub observations: DMatrix<f64>,
    pub actions: DMatrix<f64>,
    pub means: DMatrix<f64>,
    pub log_std: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub status: Vec<Status>,
    pub tags: Vec<u8>,
    /// Value of the final observation for truncated samples, else 0.
    pub bootstrap: Vec<f64>,
    /// Value of the observation after the last step, per environment.
    pub last_values: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Summary of the episodes and rewards seen during one collection.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CollectStats {
    pub mean_reward: f64,
    pub episodes: usize,
    pub mean_return: f64,
    pub mean_length: f64,
    pub terminated: usize,
    pub truncated: usize,
    /// Per-step mean of each named reward component.
    pub term_means: Vec<f64>,
}

/// Owns the environments, their current observations and per-environment
/// action-noise generators, so collection is independent of scheduling.
pub struct Collector<E: Environment> {
    envs: Vec<E>,
    obs: Vec<Vec<f64>>,
    rngs: Vec<ChaCha8Rng>,
    returns: Vec<f64>,
    lengths: Vec<usize>,
}

impl<E: Environment> Collector<E> {
    pub fn new(mut envs: Vec<E>, seed: u64) -> Result<Self, RlError> {
        let obs = envs
            .iter_mut()
            .enumerate()
            .map(|(index, e)| e.reset().map_err(|err| RlError::Env { index, message: err.to_string() }))
            .collect::<Result<Vec<_>, _>>()?;
        let n = envs.len();
        let rngs = (0..n).map(|i| ChaCha8Rng::seed_from_u64(seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(i as u64 + 1)))).collect();
        Ok(Self { envs, obs, rngs, returns: vec![0.0; n], lengths: vec![0; n] })
    }

    pub fn envs(&self) -> &[E] {
        &self.envs
    }

    pub fn envs_mut(&mut self) -> &mut [E] {
        &mut self.envs
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    /// Resets every environment.
    pub fn reset_all(&mut self) -> Result<(), RlError> {
        for (index, e) in self.envs.iter_mut().enumerate() {
            self.obs[index] = e.reset().map_err(|err| RlError::Env { index, message: err.to_string() })?;
            self.returns[index] = 0.0;
            self.lengths[index] = 0;
        }
        Ok(())
    }

    /// Runs `horizon` steps in every environment with actions sampled from
    /// the policy. When `update_normalizer` is set, the observation
    /// statistics absorb everything seen, after the buffer is filled.
    pub fn collect(
        &mut self,
        ac: &mut ActorCritic,
        horizon: usize,
        update_normalizer: bool,
    ) -> Result<(RolloutBuffer, CollectStats), RlError> {
        let n = self.envs.len();
        let total = n * horizon;
        let obs_dim = ac.obs_dim();
        let act_dim = ac.action_dim();
        let n_terms = self.envs.first().map_or(0, |e| e.term_names().len());
        let mut buf = RolloutBuffer {
            n_envs: n,
            horizon,
            observations: DMatrix::zeros(obs_dim, total),
            actions: DMatrix::zeros(act_dim, total),
            means: DMatrix::zeros(act_dim, total),
            log_std: ac.actor.log_std.clone(),
            log_probs: vec![0.0; total],
            rewards: vec![0.0; total],
            values: vec![0.0; total],
            status: vec![Status::Running; total],
            tags: vec![0; total],
            bootstrap: vec![0.0; total],
            last_values: vec![0.0; n],
        };
        let mut stats = CollectStats { term_means: vec![0.0; n_terms], ..Default::default() };
        let mut seen: Vec<Vec<f64>> = Vec::with_capacity(if update_normalizer { total } else { 0 });
        let mut return_sum = 0.0;
        let mut length_sum = 0.0;

        for t in 0..horizon {
            let x = ac.normalized_batch(&self.obs)?;
            let means = ac.actor.mean.forward(&x)?;
            let values = ac.critic.forward(&x)?;
            let mut actions = Vec::with_capacity(n);
            for e in 0..n {
                let mean: Vec<f64> = means.column(e).iter().copied().collect();
                let (a, lp) = ac.actor.sample(&mean, &mut self.rngs[e]);
                let idx = t * n + e;
                buf.observations.column_mut(idx).copy_from(&x.column(e));
                buf.means.column_mut(idx).copy_from(&means.column(e));
                buf.actions.column_mut(idx).copy_from_slice(&a);
                buf.log_probs[idx] = lp;
                buf.values[idx] = values[(0, e)];
                actions.push(a);
            }
            if update_normalizer {
                seen.extend(self.obs.iter().cloned());
            }
            let results: Vec<Result<Step, E::Error>> =
                self.envs.par_iter_mut().zip(actions.par_iter()).map(|(env, a)| env.step(a)).collect();
            let mut truncated_obs = Vec::new();
            let mut truncated_idx = Vec::new();
            for (e, r) in results.into_iter().enumerate() {
                let step = r.map_err(|err| RlError::Env { index: e, message: err.to_string() })?;
                if !step.reward.is_finite() {
                    return Err(RlError::NonFinite("reward"));
                }
                let idx = t * n + e;
                buf.rewards[idx] = step.reward;
                buf.status[idx] = step.status;
                buf.tags[idx] = step.tag;
                for (acc, v) in stats.term_means.iter_mut().zip(&step.terms) {
                    *acc += v;
                }
                self.returns[e] += step.reward;
                self.lengths[e] += 1;
                match step.status {
                    Status::Running => self.obs[e] = step.observation,
                    status => {
                        if status == Status::Truncated {
                            truncated_obs.push(step.observation);
                            truncated_idx.push(idx);
                            stats.truncated += 1;
                        } else {
                            stats.terminated += 1;
                        }
                        stats.episodes += 1;
                        return_sum += self.returns[e];
                        length_sum += self.lengths[e] as f64;
                        self.returns[e] = 0.0;
                        self.lengths[e] = 0;
                        self.obs[e] = self.envs[e]
                            .reset()
                            .map_err(|err| RlError::Env { index: e, message: err.to_string() })?;
                    }
                }
            }
            if !truncated_obs.is_empty() {
                let v = ac.critic.forward(&ac.normalized_batch(&truncated_obs)?)?;
                for (k, idx) in truncated_idx.into_iter().enumerate() {
                    buf.bootstrap[idx] = v[(0, k)];
                }
            }
        }
        let last = ac.critic.forward(&ac.normalized_batch(&self.obs)?)?;
        for e in 0..n {
            buf.last_values[e] = last[(0, e)];
        }
        if update_normalizer {
            ac.normalizer.update(seen.iter().map(|o| o.as_slice()));
        }
        if total > 0 {
            stats.mean_reward = buf.rewards.iter().sum::<f64>() / total as f64;
            for v in &mut stats.term_means {
                *v /= total as f64;
            }
        }
        if stats.episodes > 0 {
            stats.mean_return = return_sum / stats.episodes as f64;
            stats.mean_length = length_sum / stats.episodes as f64;
        }
        Ok((buf, stats))
    }
}
