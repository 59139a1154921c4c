//! Clipped-surrogate PPO update with adaptive learning rate.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adam::Adam;
use crate::env::RolloutBuffer;
use crate::gae::{compute_gae, normalize};
use crate::nn::{Mlp, MlpCache};
use crate::policy::{ActorCritic, GaussianPolicy};
use crate::RlError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub clip: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub learning_rate: f64,
    /// Halve the learning rate when the mean KL exceeds `kl_high`, double it
    /// below `kl_low`.
    pub adaptive_lr: bool,
    pub kl_low: f64,
    pub kl_high: f64,
    pub lr_min: f64,
    pub lr_max: f64,
    pub epochs: usize,
    pub minibatches: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip: 0.2,
            gamma: 0.99,
            lambda: 0.95,
            learning_rate: 3e-4,
            adaptive_lr: true,
            kl_low: 0.004,
            kl_high: 0.02,
            lr_min: 1e-5,
            lr_max: 1e-2,
            epochs: 4,
            minibatches: 4,
            value_coef: 1.0,
            entropy_coef: 0.0,
            max_grad_norm: 1.0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |field: &'static str, message: &str| Err(RlError::Config { field, message: message.into() });
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad("clip", "must lie in (0, 1)");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma", "must lie in (0, 1]");
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad("lambda", "must lie in (0, 1]");
        }
        if !(self.learning_rate > 0.0) || !(self.lr_min > 0.0) || !(self.lr_max >= self.lr_min) {
            return bad("learning_rate", "learning rates must be positive and lr_min <= lr_max");
        }
        if !(self.kl_low > 0.0 && self.kl_low < self.kl_high) {
            return bad("kl_low", "need 0 < kl_low < kl_high");
        }
        if self.epochs == 0 || self.minibatches == 0 {
            return bad("epochs", "epochs and minibatches must be at least 1");
        }
        if !(self.value_coef >= 0.0) || !(self.entropy_coef >= 0.0) || !(self.max_grad_norm > 0.0) {
            return bad("value_coef", "loss weights must be non-negative and the gradient cap positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub kl: f64,
    pub clip_fraction: f64,
    pub learning_rate: f64,
}

/// Samples of one minibatch, gathered from a rollout buffer.
#[derive(Clone, Debug)]
pub struct Minibatch {
    pub observations: DMatrix<f64>,
    pub actions: DMatrix<f64>,
    pub old_means: DMatrix<f64>,
    pub old_log_std: Vec<f64>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Minibatch {
    pub fn gather(buf: &RolloutBuffer, idx: &[usize], advantages: &[f64], returns: &[f64]) -> Self {
        let pick = |m: &DMatrix<f64>| DMatrix::from_fn(m.nrows(), idx.len(), |r, c| m[(r, idx[c])]);
        Self {
            observations: pick(&buf.observations),
            actions: pick(&buf.actions),
            old_means: pick(&buf.means),
            old_log_std: buf.log_std.clone(),
            old_log_probs: idx.iter().map(|&i| buf.log_probs[i]).collect(),
            advantages: idx.iter().map(|&i| advantages[i]).collect(),
            returns: idx.iter().map(|&i| returns[i]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.advantages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.advantages.is_empty()
    }
}

/// Actor loss and its gradient with respect to the mean-network parameters
/// and the log standard deviations.
#[derive(Clone, Debug)]
pub struct ActorGradient {
    pub loss: f64,
    pub mean_grad: Vec<f64>,
    pub log_std_grad: Vec<f64>,
    pub kl: f64,
    pub clip_fraction: f64,
    pub entropy: f64,
}

/// `-mean(min(r A, clip(r) A)) - entropy_coef * H` and its gradient.
pub fn actor_loss_and_grad(
    actor: &GaussianPolicy,
    mb: &Minibatch,
    clip: f64,
    entropy_coef: f64,
) -> Result<ActorGradient, RlError> {
    let mut cache = MlpCache::default();
    let means = actor.mean.forward_cached(&mb.observations, &mut cache)?;
    let n = mb.len() as f64;
    let d = actor.action_dim();
    let std: Vec<f64> = actor.log_std.iter().map(|l| l.exp()).collect();
    let mut grad_means = DMatrix::zeros(d, mb.len());
    let mut log_std_grad = vec![0.0; d];
    let mut loss = 0.0;
    let mut clipped = 0.0;
    let mut kl = 0.0;
    for i in 0..mb.len() {
        let mean: Vec<f64> = means.column(i).iter().copied().collect();
        let action: Vec<f64> = mb.actions.column(i).iter().copied().collect();
        let lp = actor.log_prob(&mean, &action);
        let ratio = (lp - mb.old_log_probs[i]).exp();
        let a = mb.advantages[i];
        let unclipped = ratio * a;
        let bounded = ratio.clamp(1.0 - clip, 1.0 + clip) * a;
        loss -= unclipped.min(bounded) / n;
        let active = !((a >= 0.0 && ratio > 1.0 + clip) || (a < 0.0 && ratio < 1.0 - clip));
        if !active {
            clipped += 1.0;
        }
        let g = if active { -ratio * a / n } else { 0.0 };
        for j in 0..d {
            let z = (action[j] - mean[j]) / std[j];
            grad_means[(j, i)] = g * z / std[j];
            log_std_grad[j] += g * (z * z - 1.0);
            let old_std = mb.old_log_std[j].exp();
            let dm = mb.old_means[(j, i)] - mean[j];
            kl += actor.log_std[j] - mb.old_log_std[j] + (old_std * old_std + dm * dm) / (2.0 * std[j] * std[j]) - 0.5;
        }
    }
    let entropy = actor.entropy();
    loss -= entropy_coef * entropy;
    for g in &mut log_std_grad {
        *g -= entropy_coef;
    }
    let mut mean_grad = vec![0.0; actor.mean.num_params()];
    actor.mean.backward(&cache, &grad_means, &mut mean_grad);
    Ok(ActorGradient { loss, mean_grad, log_std_grad, kl: kl / n, clip_fraction: clipped / n, entropy })
}

/// `value_coef * 0.5 * mean((V - R)^2)` and its gradient.
pub fn critic_loss_and_grad(critic: &Mlp, mb: &Minibatch, value_coef: f64) -> Result<(f64, Vec<f64>), RlError> {
    let mut cache = MlpCache::default();
    let v = critic.forward_cached(&mb.observations, &mut cache)?;
    let n = mb.len() as f64;
    let mut grad_out = DMatrix::zeros(1, mb.len());
    let mut loss = 0.0;
    for i in 0..mb.len() {
        let e = v[(0, i)] - mb.returns[i];
        loss += 0.5 * e * e / n;
        grad_out[(0, i)] = value_coef * e / n;
    }
    let mut grad = vec![0.0; critic.num_params()];
    critic.backward(&cache, &grad_out, &mut grad);
    Ok((value_coef * loss, grad))
}

/// Optimizer state for the actor mean network, the log standard deviations
/// and the critic, plus the current learning rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ppo {
    pub config: PpoConfig,
    pub learning_rate: f64,
    actor_adam: Adam,
    std_adam: Adam,
    critic_adam: Adam,
}

impl Ppo {
    pub fn new(config: PpoConfig, ac: &ActorCritic) -> Result<Self, RlError> {
        config.validate()?;
        Ok(Self {
            learning_rate: config.learning_rate,
            actor_adam: Adam::new(ac.actor.mean.num_params()),
            std_adam: Adam::new(ac.actor.action_dim()),
            critic_adam: Adam::new(ac.critic.num_params()),
            config,
        })
    }

    /// Runs the configured epochs of minibatch updates on `buf`. A non-finite
    /// loss restores the parameters held before the call.
    pub fn update(&mut self, ac: &mut ActorCritic, buf: &RolloutBuffer, rng: &mut impl Rng) -> Result<PpoStats, RlError> {
        let cfg = self.config.clone();
        let (mut adv, returns) = compute_gae(buf, cfg.gamma, cfg.lambda);
        normalize(&mut adv);
        let backup = (ac.clone(), self.clone());
        let result = self.run_epochs(ac, buf, &adv, &returns, rng);
        if result.is_err() {
            *ac = backup.0;
            *self = backup.1;
        }
        result
    }

    fn run_epochs(
        &mut self,
        ac: &mut ActorCritic,
        buf: &RolloutBuffer,
        adv: &[f64],
        returns: &[f64],
        rng: &mut impl Rng,
    ) -> Result<PpoStats, RlError> {
        let cfg = self.config.clone();
        let total = buf.len();
        let mb_size = total.div_ceil(cfg.minibatches).max(1);
        let mut order: Vec<usize> = (0..total).collect();
        let mut stats = PpoStats::default();
        let mut count = 0.0;
        for _ in 0..cfg.epochs {
            order.shuffle(rng);
            for chunk in order.chunks(mb_size) {
                let mb = Minibatch::gather(buf, chunk, adv, returns);
                let ag = actor_loss_and_grad(&ac.actor, &mb, cfg.clip, cfg.entropy_coef)?;
                let (vloss, mut cgrad) = critic_loss_and_grad(&ac.critic, &mb, cfg.value_coef)?;
                if !ag.loss.is_finite() || !vloss.is_finite() || !ag.kl.is_finite() {
                    return Err(RlError::NonFinite("ppo loss"));
                }
                if cfg.adaptive_lr {
                    if ag.kl > cfg.kl_high {
                        self.learning_rate = (self.learning_rate / 2.0).max(cfg.lr_min);
                    } else if ag.kl < cfg.kl_low && ag.kl > 0.0 {
                        self.learning_rate = (self.learning_rate * 2.0).min(cfg.lr_max);
                    }
                }
                let mut mgrad = ag.mean_grad;
                let mut sgrad = ag.log_std_grad;
                let norm = mgrad.iter().chain(&sgrad).chain(&cgrad).map(|g| g * g).sum::<f64>().sqrt();
                if !norm.is_finite() {
                    return Err(RlError::NonFinite("gradient"));
                }
                if norm > cfg.max_grad_norm {
                    let s = cfg.max_grad_norm / norm;
                    mgrad.iter_mut().chain(sgrad.iter_mut()).chain(cgrad.iter_mut()).for_each(|g| *g *= s);
                }
                let lr = self.learning_rate;
                self.actor_adam.step(ac.actor.mean.params_mut(), &mgrad, lr);
                self.std_adam.step(&mut ac.actor.log_std, &sgrad, lr);
                self.critic_adam.step(ac.critic.params_mut(), &cgrad, lr);
                stats.policy_loss += ag.loss;
                stats.value_loss += vloss;
                stats.entropy += ag.entropy;
                stats.kl += ag.kl;
                stats.clip_fraction += ag.clip_fraction;
                count += 1.0;
            }
        }
        if count > 0.0 {
            stats.policy_loss /= count;
            stats.value_loss /= count;
            stats.entropy /= count;
            stats.kl /= count;
            stats.clip_fraction /= count;
        }
        stats.learning_rate = self.learning_rate;
        if ac.actor.mean.params().iter().chain(&ac.actor.log_std).chain(ac.critic.params()).any(|p| !p.is_finite()) {
            return Err(RlError::NonFinite("parameters"));
        }
        Ok(stats)
    }
}
