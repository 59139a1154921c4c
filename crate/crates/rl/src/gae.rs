//! Generalized advantage estimation.

use crate::env::{RolloutBuffer, Status};

/// Returns `(advantages, value targets)`. Terminated steps do not bootstrap;
/// truncated steps bootstrap from the stored final-observation value; no
/// recursion crosses an episode boundary.
pub fn compute_gae(buf: &RolloutBuffer, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = buf.n_envs;
    let mut adv = vec![0.0; buf.len()];
    for e in 0..n {
        let mut running = 0.0;
        for t in (0..buf.horizon).rev() {
            let idx = t * n + e;
            let (next_value, carry) = match buf.status[idx] {
                Status::Running => {
                    let v = if t + 1 < buf.horizon { buf.values[idx + n] } else { buf.last_values[e] };
                    (v, true)
                }
                Status::Terminated => (0.0, false),
                Status::Truncated => (buf.bootstrap[idx], false),
            };
            let delta = buf.rewards[idx] + gamma * next_value - buf.values[idx];
            running = delta + if carry { gamma * lambda * running } else { 0.0 };
            adv[idx] = running;
        }
    }
    let returns = adv.iter().zip(&buf.values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// Shifts and scales to zero mean and unit variance.
pub fn normalize(values: &mut [f64]) {
    if values.len() < 2 {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    for v in values.iter_mut() {
        *v = (*v - mean) / std;
    }
}
