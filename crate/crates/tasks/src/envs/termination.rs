//! Episode termination rules on squared norms and body-ground contact.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerminationRules {
    pub body_collision: bool,
    /// Limit on `||q_des_t - q_des_{t-1}||^2`.
    pub smoothness: f64,
    /// Limit on `||tau||^2`.
    pub torque: f64,
    /// Limit on `||p_t - p_nominal||^2`.
    pub deviation: f64,
    /// Reward of the terminating step.
    pub penalty: f64,
}

impl Default for TerminationRules {
    fn default() -> Self {
        Self { body_collision: true, smoothness: 2.0, torque: 180.0, deviation: 5.0, penalty: -10.0 }
    }
}

impl TerminationRules {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("smoothness", self.smoothness), ("torque", self.torque), ("deviation", self.deviation)] {
            if !(v > 0.0) {
                return Err(format!("termination.{name} must be positive"));
            }
        }
        if !self.penalty.is_finite() {
            return Err("termination.penalty must be finite".into());
        }
        Ok(())
    }
}

/// Why an episode ended. The numeric codes are the `tag` column of the logs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    Collision = 1,
    Smoothness = 2,
    Torque = 3,
    Deviation = 4,
    TimeLimit = 5,
    /// The aerial phase ended (aerial-only episodes); not a rule violation.
    Landed = 6,
}

impl EndReason {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            1 => EndReason::Collision,
            2 => EndReason::Smoothness,
            3 => EndReason::Torque,
            4 => EndReason::Deviation,
            5 => EndReason::TimeLimit,
            6 => EndReason::Landed,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EndReason::Collision => "collision",
            EndReason::Smoothness => "smoothness",
            EndReason::Torque => "torque",
            EndReason::Deviation => "deviation",
            EndReason::TimeLimit => "time_limit",
            EndReason::Landed => "landed",
        }
    }

    /// True for rule violations, which carry the penalty.
    pub fn is_violation(self) -> bool {
        matches!(self, EndReason::Collision | EndReason::Smoothness | EndReason::Torque | EndReason::Deviation)
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// First violated rule, checked in the order collision, smoothness, torque,
/// deviation. Every limit is exclusive: a norm equal to its limit passes.
pub fn check_termination(
    rules: &TerminationRules,
    body_contact: bool,
    tau: &[f64],
    q_des: &[f64],
    q_des_prev: &[f64],
    p: &[f64],
    p_nominal: &[f64],
) -> Option<EndReason> {
    if rules.body_collision && body_contact {
        return Some(EndReason::Collision);
    }
    if squared_distance(q_des, q_des_prev) > rules.smoothness {
        return Some(EndReason::Smoothness);
    }
    if tau.iter().map(|t| t * t).sum::<f64>() > rules.torque {
        return Some(EndReason::Torque);
    }
    if squared_distance(p, p_nominal) > rules.deviation {
        return Some(EndReason::Deviation);
    }
    None
}
