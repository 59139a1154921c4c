//! One-dimensional velocity tracking: a damped point mass pushed by the
//! action must reach and hold a target velocity drawn per episode.

use std::convert::Infallible;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{Environment, Status, Step};

#[derive(Clone, Debug)]
pub struct VelocityTrackingEnv {
    rng: ChaCha8Rng,
    velocity: f64,
    target: f64,
    t: usize,
    pub episode_len: usize,
    pub dt: f64,
}

impl VelocityTrackingEnv {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), velocity: 0.0, target: 0.0, t: 0, episode_len: 50, dt: 0.05 }
    }

    fn observation(&self) -> Vec<f64> {
        vec![self.velocity, self.target]
    }
}

impl Environment for VelocityTrackingEnv {
    type Error = Infallible;

    fn observation_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn term_names(&self) -> Vec<&'static str> {
        vec!["tracking"]
    }

    fn reset(&mut self) -> Result<Vec<f64>, Infallible> {
        let sign = if self.rng.random::<bool>() { 1.0 } else { -1.0 };
        self.target = sign * self.rng.random_range(0.5..1.5);
        self.velocity = 0.0;
        self.t = 0;
        Ok(self.observation())
    }

    fn step(&mut self, action: &[f64]) -> Result<Step, Infallible> {
        let force = action[0].clamp(-5.0, 5.0);
        self.velocity += self.dt * (4.0 * force - 1.0 * self.velocity);
        self.t += 1;
        let err = self.velocity - self.target;
        let reward = (-4.0 * err * err).exp();
        let status = if self.t >= self.episode_len { Status::Truncated } else { Status::Running };
        Ok(Step { observation: self.observation(), reward, status, tag: 0, terms: vec![reward] })
    }
}

/// Trains a small actor-critic on the velocity-tracking task and returns the
/// mean episode return of every iteration.
pub fn train_velocity_tracking(seed: u64, iterations: usize) -> Result<Vec<f64>, crate::RlError> {
    use crate::env::Collector;
    use crate::policy::ActorCritic;
    use crate::ppo::{Ppo, PpoConfig};

    let n_envs = 16;
    let envs = (0..n_envs).map(|i| VelocityTrackingEnv::new(seed.wrapping_mul(1000) + i as u64)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ac = ActorCritic::new(2, 1, &[32, 32], &[32, 32], 0.8, &mut rng);
    let mut ppo = Ppo::new(PpoConfig::default(), &ac)?;
    let mut collector = Collector::new(envs, seed)?;
    let mut curve = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let (buf, stats) = collector.collect(&mut ac, 50, true)?;
        ppo.update(&mut ac, &buf, &mut rng)?;
        curve.push(stats.mean_return);
    }
    Ok(curve)
}
