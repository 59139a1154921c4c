//! Gaussian policy with a state-independent standard deviation, and the
//! actor-critic pair trained by PPO.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::nn::Mlp;
use crate::normalizer::Normalizer;
use crate::RlError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPolicy {
    pub mean: Mlp,
    pub log_std: Vec<f64>,
}

impl GaussianPolicy {
    pub fn new(sizes: &[usize], init_std: f64, rng: &mut impl Rng) -> Self {
        let mean = Mlp::new(sizes, 0.01, rng);
        let log_std = vec![init_std.ln(); mean.output_dim()];
        Self { mean, log_std }
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    /// Log-density of `action` under `N(mean, diag(exp(log_std))^2)`.
    pub fn log_prob(&self, mean: &[f64], action: &[f64]) -> f64 {
        gaussian_log_prob(mean, &self.log_std, action)
    }

    /// Draws an action around `mean`; returns it with its log-probability.
    pub fn sample(&self, mean: &[f64], rng: &mut impl Rng) -> (Vec<f64>, f64) {
        let action: Vec<f64> = mean
            .iter()
            .zip(&self.log_std)
            .map(|(m, ls)| m + ls.exp() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let logp = self.log_prob(mean, &action);
        (action, logp)
    }

    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|ls| ls + 0.5 * (2.0 * PI * std::f64::consts::E).ln()).sum()
    }
}

pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    let mut lp = 0.0;
    for i in 0..mean.len() {
        let z = (action[i] - mean[i]) / log_std[i].exp();
        lp += -0.5 * z * z - log_std[i] - 0.5 * (2.0 * PI).ln();
    }
    lp
}

/// Actor, critic and the observation normalizer shared by both.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub actor: GaussianPolicy,
    pub critic: Mlp,
    pub normalizer: Normalizer,
}

impl ActorCritic {
    pub fn new(
        obs_dim: usize,
        act_dim: usize,
        actor_hidden: &[usize],
        critic_hidden: &[usize],
        init_std: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let sizes = |hidden: &[usize], out: usize| {
            let mut s = vec![obs_dim];
            s.extend_from_slice(hidden);
            s.push(out);
            s
        };
        let actor = GaussianPolicy::new(&sizes(actor_hidden, act_dim), init_std, rng);
        let critic = Mlp::new(&sizes(critic_hidden, 1), 1.0, rng);
        Self { actor, critic, normalizer: Normalizer::new(obs_dim) }
    }

    pub fn obs_dim(&self) -> usize {
        self.normalizer.dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.action_dim()
    }

    /// Normalizes raw observations into a column-per-sample matrix.
    pub fn normalized_batch(&self, raw: &[Vec<f64>]) -> Result<DMatrix<f64>, RlError> {
        let d = self.obs_dim();
        let mut m = DMatrix::zeros(d, raw.len());
        for (j, o) in raw.iter().enumerate() {
            if o.len() != d {
                return Err(RlError::Dimension { expected: d, got: o.len() });
            }
            let mut col = vec![0.0; d];
            self.normalizer.normalize_into(o, &mut col);
            m.column_mut(j).copy_from_slice(&col);
        }
        Ok(m)
    }

    /// Deterministic (mean) action for one raw observation.
    pub fn act_deterministic(&self, raw: &[f64]) -> Result<Vec<f64>, RlError> {
        let x = self.normalized_batch(&[raw.to_vec()])?;
        Ok(self.actor.mean.forward(&x)?.column(0).iter().copied().collect())
    }

    pub fn value(&self, raw: &[f64]) -> Result<f64, RlError> {
        let x = self.normalized_batch(&[raw.to_vec()])?;
        Ok(self.critic.forward(&x)?[(0, 0)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn log_prob_at_mean_is_normalizer() {
        let p = GaussianPolicy { mean: Mlp::from_params(&[1, 2], vec![0.0; 4]).unwrap(), log_std: vec![0.8f64.ln(); 2] };
        let lp = p.log_prob(&[0.3, -0.2], &[0.3, -0.2]);
        let expected = -2.0 * (0.8f64.ln() + 0.5 * (2.0 * PI).ln());
        assert!((lp - expected).abs() < 1e-14);
    }

    #[test]
    fn same_seed_same_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = GaussianPolicy::new(&[2, 4, 3], 0.8, &mut rng);
        let a = p.sample(&[0.0; 3], &mut ChaCha8Rng::seed_from_u64(9));
        let b = p.sample(&[0.0; 3], &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn entropy_matches_closed_form() {
        let p = GaussianPolicy { mean: Mlp::from_params(&[1, 1], vec![0.0; 2]).unwrap(), log_std: vec![0.0] };
        assert!((p.entropy() - 0.5 * (2.0 * PI * std::f64::consts::E).ln()).abs() < 1e-14);
    }
}
