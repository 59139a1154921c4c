//! Shared PPO oracles, also used by the acceptance suite.

#![allow(dead_code)]

use manitail_rl::ppo::{actor_loss_and_grad, Minibatch};
use manitail_rl::ActorCritic;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_minibatch(ac: &ActorCritic, rng: &mut ChaCha8Rng, n: usize) -> Minibatch {
    let obs_dim = ac.obs_dim();
    let d = ac.action_dim();
    let observations = DMatrix::from_fn(obs_dim, n, |_, _| rng.random_range(-1.0..1.0));
    let means = ac.actor.mean.forward(&observations).unwrap();
    let old_log_std: Vec<f64> = ac.actor.log_std.iter().map(|l| l + rng.random_range(-0.05..0.05)).collect();
    let actions = DMatrix::from_fn(d, n, |r, c| means[(r, c)] + rng.random_range(-1.0..1.0));
    // old policy slightly different from the current one so ratios spread around 1
    let old_means = DMatrix::from_fn(d, n, |r, c| means[(r, c)] + rng.random_range(-0.1..0.1));
    let old_log_probs = (0..n)
        .map(|c| {
            let m: Vec<f64> = old_means.column(c).iter().copied().collect();
            let a: Vec<f64> = actions.column(c).iter().copied().collect();
            manitail_rl::policy::gaussian_log_prob(&m, &old_log_std, &a)
        })
        .collect();
    Minibatch {
        observations,
        actions,
        old_means,
        old_log_std,
        old_log_probs,
        advantages: (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
        returns: (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
    }
}

/// Largest relative error of the analytic gradient against central
/// differences, over every parameter with a non-negligible gradient.
pub fn surrogate_gradient_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ac = ActorCritic::new(5, 3, &[16, 8], &[16, 8], 0.8, &mut rng);
    let mb = random_minibatch(&ac, &mut rng, 32);
    let (clip, ent) = (0.2, 0.01);
    let g = actor_loss_and_grad(&ac.actor, &mb, clip, ent).unwrap();
    let loss = |a: &manitail_rl::GaussianPolicy| actor_loss_and_grad(a, &mb, clip, ent).unwrap().loss;
    let analytic: Vec<f64> = g.mean_grad.iter().chain(&g.log_std_grad).copied().collect();
    let scale = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    let h = 1e-6;
    for k in 0..analytic.len() {
        let mut plus = ac.actor.clone();
        let mut minus = ac.actor.clone();
        let np = ac.actor.mean.num_params();
        if k < np {
            plus.mean.params_mut()[k] += h;
            minus.mean.params_mut()[k] -= h;
        } else {
            plus.log_std[k - np] += h;
            minus.log_std[k - np] -= h;
        }
        let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
        let err = (fd - analytic[k]).abs() / analytic[k].abs().max(1e-3 * scale);
        worst = worst.max(err);
    }
    worst
}

