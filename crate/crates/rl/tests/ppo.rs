mod support;

use support::{random_minibatch, surrogate_gradient_error};
use manitail_rl::env::{Collector, RolloutBuffer, Status};
use manitail_rl::gae::compute_gae;
use manitail_rl::ppo::{actor_loss_and_grad, critic_loss_and_grad, Ppo, PpoConfig};
use manitail_rl::toy::{train_velocity_tracking, VelocityTrackingEnv};
use manitail_rl::{ActorCritic, Environment, Step};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn buffer(n_envs: usize, horizon: usize, rewards: Vec<f64>, values: Vec<f64>, status: Vec<Status>) -> RolloutBuffer {
    let total = n_envs * horizon;
    RolloutBuffer {
        n_envs,
        horizon,
        observations: DMatrix::zeros(1, total),
        actions: DMatrix::zeros(1, total),
        means: DMatrix::zeros(1, total),
        log_std: vec![0.0],
        log_probs: vec![0.0; total],
        rewards,
        values,
        status,
        tags: vec![0; total],
        bootstrap: vec![0.0; total],
        last_values: vec![0.0; n_envs],
    }
}

#[test]
fn gae_with_zero_discount_is_one_step_advantage() {
    let rewards = vec![1.0, 2.0, 3.0];
    let values = vec![0.5, 0.25, 4.0];
    let buf = buffer(1, 3, rewards.clone(), values.clone(), vec![Status::Running; 3]);
    let (adv, ret) = compute_gae(&buf, 0.0, 0.7);
    for i in 0..3 {
        assert!((adv[i] - (rewards[i] - values[i])).abs() < 1e-15);
        assert!((ret[i] - rewards[i]).abs() < 1e-15);
    }
}

#[test]
fn gae_long_horizon_constant_reward_approaches_geometric_sum() {
    let h = 3000;
    let buf = buffer(1, h, vec![1.0; h], vec![0.0; h], vec![Status::Running; h]);
    let (adv, _) = compute_gae(&buf, 0.99, 1.0);
    assert!((adv[0] - 100.0).abs() < 1e-9);
}

#[test]
fn gae_does_not_cross_episode_boundaries() {
    let mut status = vec![Status::Running; 4];
    status[1] = Status::Terminated;
    let mut buf = buffer(1, 4, vec![1.0, 1.0, 5.0, 5.0], vec![0.0, 0.0, 0.0, 0.0], status);
    let (adv, _) = compute_gae(&buf, 0.9, 0.9);
    assert!((adv[1] - 1.0).abs() < 1e-15);
    assert!((adv[0] - (1.0 + 0.81 * 1.0)).abs() < 1e-15);
    buf.status[1] = Status::Truncated;
    buf.bootstrap[1] = 10.0;
    let (adv, _) = compute_gae(&buf, 0.9, 0.9);
    assert!((adv[1] - (1.0 + 9.0)).abs() < 1e-12);
}

#[test]
fn gae_separates_parallel_environments() {
    // two envs interleaved step-major: env 0 gets reward 1, env 1 reward 0
    let buf = buffer(2, 2, vec![1.0, 0.0, 1.0, 0.0], vec![0.0; 4], vec![Status::Running; 4]);
    let (adv, _) = compute_gae(&buf, 0.5, 1.0);
    assert!((adv[0] - 1.5).abs() < 1e-15);
    assert_eq!(adv[1], 0.0);
    assert_eq!(adv[3], 0.0);
}

#[test]
fn surrogate_gradient_matches_finite_differences() {
    for seed in 0..3 {
        let err = surrogate_gradient_error(seed);
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}

#[test]
fn value_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ac = ActorCritic::new(4, 2, &[8], &[8, 8], 0.8, &mut rng);
    let mb = random_minibatch(&ac, &mut rng, 16);
    let (_, grad) = critic_loss_and_grad(&ac.critic, &mb, 0.5).unwrap();
    for k in (0..ac.critic.num_params()).step_by(3) {
        let mut p = ac.critic.clone();
        p.params_mut()[k] += 1e-6;
        let mut m = ac.critic.clone();
        m.params_mut()[k] -= 1e-6;
        let fd = (critic_loss_and_grad(&p, &mb, 0.5).unwrap().0 - critic_loss_and_grad(&m, &mb, 0.5).unwrap().0) / 2e-6;
        assert!((fd - grad[k]).abs() < 1e-6 * (1.0 + fd.abs()));
    }
}

#[test]
fn clipped_samples_contribute_no_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ac = ActorCritic::new(2, 1, &[4], &[4], 0.8, &mut rng);
    let mut mb = random_minibatch(&ac, &mut rng, 1);
    mb.advantages[0] = 1.0;
    // make the current policy far more likely than the old one: ratio > 1 + clip
    mb.old_log_probs[0] = ac.actor.log_prob(
        &ac.actor.mean.forward(&mb.observations).unwrap().column(0).iter().copied().collect::<Vec<_>>(),
        &mb.actions.column(0).iter().copied().collect::<Vec<_>>(),
    ) - 1.0;
    let g = actor_loss_and_grad(&ac.actor, &mb, 0.2, 0.0).unwrap();
    assert_eq!(g.clip_fraction, 1.0);
    assert!(g.mean_grad.iter().chain(&g.log_std_grad).all(|v| *v == 0.0));
}

#[test]
fn unit_ratio_gives_vanilla_policy_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let ac = ActorCritic::new(3, 2, &[6], &[6], 0.8, &mut rng);
    let mut mb = random_minibatch(&ac, &mut rng, 8);
    let means = ac.actor.mean.forward(&mb.observations).unwrap();
    mb.old_means = means.clone();
    mb.old_log_std = ac.actor.log_std.clone();
    for c in 0..8 {
        let m: Vec<f64> = means.column(c).iter().copied().collect();
        let a: Vec<f64> = mb.actions.column(c).iter().copied().collect();
        mb.old_log_probs[c] = ac.actor.log_prob(&m, &a);
    }
    let g = actor_loss_and_grad(&ac.actor, &mb, 0.2, 0.0).unwrap();
    assert_eq!(g.clip_fraction, 0.0);
    assert!(g.kl.abs() < 1e-15);
    // d/dlogσ of -mean(A logp) at ratio 1
    for j in 0..2 {
        let s = ac.actor.log_std[j].exp();
        let expected: f64 = (0..8)
            .map(|c| {
                let z = (mb.actions[(j, c)] - means[(j, c)]) / s;
                -mb.advantages[c] * (z * z - 1.0) / 8.0
            })
            .sum();
        assert!((g.log_std_grad[j] - expected).abs() < 1e-12);
    }
}

/// Single-step bandit: reward peaks at action 0.7.
struct Bandit {
    rng: ChaCha8Rng,
}

impl Environment for Bandit {
    type Error = std::convert::Infallible;
    fn observation_dim(&self) -> usize {
        1
    }
    fn action_dim(&self) -> usize {
        1
    }
    fn reset(&mut self) -> Result<Vec<f64>, Self::Error> {
        let _ = self.rng.random::<u8>();
        Ok(vec![1.0])
    }
    fn step(&mut self, action: &[f64]) -> Result<Step, Self::Error> {
        let reward = -(action[0] - 0.7).powi(2);
        Ok(Step { observation: vec![1.0], reward, status: Status::Terminated, tag: 1, terms: vec![] })
    }
}

#[test]
fn bandit_mean_moves_toward_optimum() {
    // brute-force oracle: the best action on a fine grid
    let best = (0..=2000).map(|i| -1.0 + i as f64 * 1e-3).max_by(|a, b| (-(a - 0.7f64).powi(2)).total_cmp(&-(b - 0.7f64).powi(2))).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ac = ActorCritic::new(1, 1, &[8], &[8], 0.8, &mut rng);
    let cfg = PpoConfig { learning_rate: 3e-3, adaptive_lr: false, ..PpoConfig::default() };
    let mut ppo = Ppo::new(cfg, &ac).unwrap();
    let envs = (0..32).map(|i| Bandit { rng: ChaCha8Rng::seed_from_u64(i) }).collect();
    let mut collector = Collector::new(envs, 0).unwrap();
    let start = (ac.act_deterministic(&[1.0]).unwrap()[0] - best).abs();
    for _ in 0..100 {
        let (buf, _) = collector.collect(&mut ac, 4, false).unwrap();
        ppo.update(&mut ac, &buf, &mut rng).unwrap();
    }
    let end = (ac.act_deterministic(&[1.0]).unwrap()[0] - best).abs();
    assert!(end < 0.1 && end < 0.25 * start, "{start} -> {end}");
}

#[test]
fn collection_is_deterministic_and_auto_resets() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut ac = ActorCritic::new(2, 1, &[8], &[8], 0.8, &mut rng);
        let envs = (0..3).map(VelocityTrackingEnv::new).collect();
        let mut c = Collector::new(envs, 17).unwrap();
        let (buf, stats) = c.collect(&mut ac, 120, true).unwrap();
        (buf, stats.episodes, ac.normalizer.clone())
    };
    let (a, episodes, na) = run();
    let (b, _, nb) = run();
    assert_eq!(a, b);
    assert_eq!(na, nb);
    // 50-step episodes: each env finished two within 120 steps
    assert_eq!(episodes, 6);
    assert_eq!(a.status.iter().filter(|s| **s == Status::Truncated).count(), 6);
}

#[test]
fn single_step_buffer() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut ac = ActorCritic::new(2, 1, &[4], &[4], 0.8, &mut rng);
    let mut c = Collector::new(vec![VelocityTrackingEnv::new(1)], 1).unwrap();
    let (buf, _) = c.collect(&mut ac, 1, false).unwrap();
    assert_eq!(buf.len(), 1);
}

#[test]
fn update_rejects_non_finite_rewards_and_restores() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut ac = ActorCritic::new(2, 1, &[4], &[4], 0.8, &mut rng);
    let mut c = Collector::new(vec![VelocityTrackingEnv::new(1)], 1).unwrap();
    let (mut buf, _) = c.collect(&mut ac, 8, false).unwrap();
    buf.rewards[3] = f64::NAN;
    let mut ppo = Ppo::new(PpoConfig::default(), &ac).unwrap();
    let before = ac.clone();
    assert!(ppo.update(&mut ac, &buf, &mut rng).is_err());
    assert_eq!(ac, before);
}

#[test]
fn toy_velocity_tracking_improves() {
    let curve = train_velocity_tracking(0, 200).unwrap();
    let start = curve[0];
    let end = curve[curve.len() - 10..].iter().sum::<f64>() / 10.0;
    assert!(end >= 1.5 * start, "{start} -> {end}");
}

#[test]
fn invalid_config_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ac = ActorCritic::new(2, 1, &[4], &[4], 0.8, &mut rng);
    assert!(Ppo::new(PpoConfig { clip: 1.5, ..PpoConfig::default() }, &ac).is_err());
    assert!(Ppo::new(PpoConfig { gamma: 0.0, ..PpoConfig::default() }, &ac).is_err());
}
