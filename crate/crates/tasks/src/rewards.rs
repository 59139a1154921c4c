//! Reward terms for the three tasks and their composition
//! `total = r_pos * exp(reward_factor * r_neg)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use manitail_core::math::{planar_angle_between, Vec3};

/// Swing or stance durations at or above this disable the airtime term (s).
pub const AIRTIME_CAP: f64 = 0.25;
/// Floor inside the airtime term (s).
pub const AIRTIME_FLOOR: f64 = 0.2;

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("`{what}` has {got} entries, expected {expected}")]
    Size { what: &'static str, expected: usize, got: usize },
    #[error("invalid reward coefficient `{field}`: {message}")]
    Invalid { field: String, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneralCoefficients {
    pub k_p: f64,
    pub k_pdot: f64,
    pub k_tau: f64,
    pub k_s: f64,
}

impl Default for GeneralCoefficients {
    fn default() -> Self {
        Self { k_p: -4.0, k_pdot: -0.005, k_tau: -0.002, k_s: -4.0 }
    }
}

/// One column of the turning table (run or turn section).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurningCoefficients {
    pub k_v: f64,
    pub k_phi: f64,
    pub k_w: f64,
    pub k_air: f64,
    pub k_cl: f64,
    pub k_base: f64,
    pub k_ori: f64,
    pub k_arm: f64,
}

impl TurningCoefficients {
    pub fn run() -> Self {
        Self { k_v: 2.0, k_phi: 4.5, k_w: 0.0, k_air: 0.5, k_cl: -50.0, k_base: -10.0, k_ori: -100.0, k_arm: -15.0 }
    }

    pub fn turn() -> Self {
        Self { k_v: 2.0, k_phi: 4.5, k_w: 3.0, k_air: 0.5, k_cl: -50.0, k_base: -10.0, k_ori: 0.0, k_arm: 0.0 }
    }
}

/// One column of the reorientation table (air or ground region).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReorientCoefficients {
    pub k_ori: f64,
    pub k_v: f64,
    pub k_h: f64,
    pub k_cl: f64,
    pub k_arm: f64,
    /// Optional yaw-rate objective; zero disables it.
    #[serde(default)]
    pub k_w: f64,
}

impl ReorientCoefficients {
    pub fn air() -> Self {
        Self { k_ori: 5.0, k_v: 0.0, k_h: 0.0, k_cl: 0.0, k_arm: 0.0, k_w: 0.0 }
    }

    pub fn ground() -> Self {
        Self { k_ori: 5.0, k_v: 2.5, k_h: 5.0, k_cl: -100.0, k_arm: -150.0, k_w: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardCoefficients {
    pub reward_factor: f64,
    /// Swing-foot clearance target (m).
    pub foot_clearance: f64,
    pub general: GeneralCoefficients,
    pub run: TurningCoefficients,
    pub turn: TurningCoefficients,
    pub air: ReorientCoefficients,
    pub ground: ReorientCoefficients,
}

impl Default for RewardCoefficients {
    fn default() -> Self {
        Self {
            reward_factor: 0.02,
            foot_clearance: 0.09,
            general: GeneralCoefficients::default(),
            run: TurningCoefficients::run(),
            turn: TurningCoefficients::turn(),
            air: ReorientCoefficients::air(),
            ground: ReorientCoefficients::ground(),
        }
    }
}

impl RewardCoefficients {
    /// Constraint coefficients must be non-positive and objective
    /// coefficients non-negative.
    pub fn validate(&self) -> Result<(), RewardError> {
        let bad = |field: String, message: &str| Err(RewardError::Invalid { field, message: message.into() });
        if !(self.reward_factor > 0.0) {
            return bad("reward_factor".into(), "must be positive");
        }
        if !(self.foot_clearance >= 0.0) {
            return bad("foot_clearance".into(), "must be non-negative");
        }
        let g = &self.general;
        for (name, k) in [("k_p", g.k_p), ("k_pdot", g.k_pdot), ("k_tau", g.k_tau), ("k_s", g.k_s)] {
            if !(k <= 0.0) {
                return bad(format!("general.{name}"), "constraint coefficient must be <= 0");
            }
        }
        for (col, c) in [("run", &self.run), ("turn", &self.turn)] {
            for (name, k) in [("k_v", c.k_v), ("k_phi", c.k_phi), ("k_w", c.k_w), ("k_air", c.k_air)] {
                if !(k >= 0.0) {
                    return bad(format!("{col}.{name}"), "objective coefficient must be >= 0");
                }
            }
            for (name, k) in [("k_cl", c.k_cl), ("k_base", c.k_base), ("k_ori", c.k_ori), ("k_arm", c.k_arm)] {
                if !(k <= 0.0) {
                    return bad(format!("{col}.{name}"), "constraint coefficient must be <= 0");
                }
            }
        }
        for (col, c) in [("air", &self.air), ("ground", &self.ground)] {
            for (name, k) in [("k_ori", c.k_ori), ("k_v", c.k_v), ("k_h", c.k_h), ("k_w", c.k_w)] {
                if !(k >= 0.0) {
                    return bad(format!("{col}.{name}"), "objective coefficient must be >= 0");
                }
            }
            for (name, k) in [("k_cl", c.k_cl), ("k_arm", c.k_arm)] {
                if !(k <= 0.0) {
                    return bad(format!("{col}.{name}"), "constraint coefficient must be <= 0");
                }
            }
        }
        Ok(())
    }
}

/// Every named term; unused terms stay zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub p: f64,
    pub pdot: f64,
    pub tau: f64,
    pub s: f64,
    pub v: f64,
    pub phi: f64,
    pub w: f64,
    pub air: f64,
    pub cl: f64,
    pub base: f64,
    pub ori: f64,
    pub arm: f64,
    pub h: f64,
    pub r_pos: f64,
    pub r_neg: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub const TERM_NAMES: [&'static str; 13] =
        ["r_p", "r_pdot", "r_tau", "r_s", "r_v", "r_phi", "r_w", "r_air", "r_cl", "r_base", "r_ori", "r_arm", "r_h"];

    pub fn terms(&self) -> [f64; 13] {
        [
            self.p, self.pdot, self.tau, self.s, self.v, self.phi, self.w, self.air, self.cl, self.base, self.ori,
            self.arm, self.h,
        ]
    }

    /// Recomputes the total from the stored sums.
    pub fn recomputed_total(&self, reward_factor: f64) -> f64 {
        compose_total(self.r_pos, self.r_neg, reward_factor)
    }
}

pub fn compose_total(r_pos: f64, r_neg: f64, reward_factor: f64) -> f64 {
    r_pos * (reward_factor * r_neg).exp()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn squared_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

fn check(what: &'static str, v: &[f64], expected: usize) -> Result<(), RewardError> {
    if v.len() != expected {
        return Err(RewardError::Size { what, expected, got: v.len() });
    }
    Ok(())
}

/// Joint-space constraint terms `(r_p, r_pdot, r_tau, r_s)`.
pub fn general_constraint_reward(
    k: &GeneralCoefficients,
    p: &[f64],
    p_nominal: &[f64],
    pdot: &[f64],
    tau: &[f64],
    q_des: &[f64],
    q_des_prev: &[f64],
) -> Result<[f64; 4], RewardError> {
    let n = p.len();
    check("p_nominal", p_nominal, n)?;
    check("pdot", pdot, n)?;
    check("tau", tau, n)?;
    check("q_des", q_des, n)?;
    check("q_des_prev", q_des_prev, n)?;
    Ok([
        k.k_p * squared_distance(p, p_nominal),
        k.k_pdot * squared_norm(pdot),
        k.k_tau * squared_norm(tau),
        k.k_s * squared_distance(q_des, q_des_prev),
    ])
}

/// Per-foot airtime term: `k_air * max(T_s, T_a, 0.2)` while both durations
/// are below the cap, else 0.
pub fn airtime_term(k_air: f64, t_stance: f64, t_air: f64) -> f64 {
    let t_max = t_stance.max(t_air);
    if t_max < AIRTIME_CAP {
        k_air * t_max.max(AIRTIME_FLOOR)
    } else {
        0.0
    }
}

/// Per-foot state used by the foot terms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FootState {
    /// Foot height above the ground (m).
    pub height: f64,
    pub in_contact: bool,
    pub t_stance: f64,
    pub t_air: f64,
}

/// Quantities read by the turning and balancing rewards.
#[derive(Clone, Debug, PartialEq)]
pub struct TurningInputs<'a> {
    /// Base linear velocity in the body frame.
    pub velocity_body: Vec3,
    /// Commanded body-frame velocity `(V_x, V_y)`.
    pub command_velocity: [f64; 2],
    /// Commanded heading as a world-frame direction.
    pub command_heading: Vec3,
    /// Body x and z axes in the world frame.
    pub body_x: Vec3,
    pub body_z: Vec3,
    /// Yaw rate about world z (rad/s).
    pub yaw_rate: f64,
    /// Sign of the remaining heading error toward the command (+1 or -1).
    pub turn_sign: f64,
    /// World-frame vertical base velocity.
    pub vertical_velocity: f64,
    pub feet: &'a [FootState],
    pub arm: &'a [f64],
    pub arm_nominal: &'a [f64],
}

/// Angle between world z and body z (rad).
pub fn tilt_angle(body_z: &Vec3) -> f64 {
    body_z.normalize().z.clamp(-1.0, 1.0).acos()
}

/// Task terms of the turning table for one section column, written into
/// `out`. Objective terms are `v, phi, w, air`; constraints `cl, base, ori,
/// arm`.
pub fn turning_terms(c: &TurningCoefficients, foot_clearance: f64, x: &TurningInputs, out: &mut RewardBreakdown) {
    let dvx = x.command_velocity[0] - x.velocity_body.x;
    let dvy = x.command_velocity[1] - x.velocity_body.y;
    out.v = c.k_v * (-(dvx * dvx) - dvy * dvy).exp();
    out.phi = c.k_phi * (-2.5 * planar_angle_between(&x.command_heading, &x.body_x)).exp();
    let w_tilde = x.yaw_rate * x.turn_sign;
    out.w = c.k_w * (3.0 - 12.0 * (-0.5 * w_tilde).exp());
    out.air = x.feet.iter().map(|f| airtime_term(c.k_air, f.t_stance, f.t_air)).sum();
    out.cl = x
        .feet
        .iter()
        .filter(|f| !f.in_contact)
        .map(|f| c.k_cl * (f.height - foot_clearance).powi(2))
        .sum();
    out.base = c.k_base * x.vertical_velocity * x.vertical_velocity;
    out.ori = c.k_ori * tilt_angle(&x.body_z).powi(2);
    out.arm = c.k_arm * squared_distance(x.arm, x.arm_nominal);
    out.h = 0.0;
}

/// Quantities read by the reorientation reward.
#[derive(Clone, Debug, PartialEq)]
pub struct ReorientInputs<'a> {
    pub body_z: Vec3,
    /// Body-frame planar velocity `(V_x, V_y)` and its command.
    pub velocity_xy: [f64; 2],
    pub command_velocity: [f64; 2],
    pub height: f64,
    pub nominal_height: f64,
    pub yaw_rate: f64,
    pub feet: &'a [FootState],
    pub arm: &'a [f64],
    pub arm_nominal: &'a [f64],
}

/// Task terms of the reorientation table for one region column. Objective
/// terms are `ori, v, h` (plus the optional `w`); constraints `cl, arm`.
pub fn reorient_terms(c: &ReorientCoefficients, foot_clearance: f64, x: &ReorientInputs, out: &mut RewardBreakdown) {
    let angle = tilt_angle(&x.body_z);
    out.ori = c.k_ori * (-2.5 * angle * angle).exp();
    let dvx = x.command_velocity[0] - x.velocity_xy[0];
    let dvy = x.command_velocity[1] - x.velocity_xy[1];
    out.v = c.k_v * (-5.0 * (dvx * dvx + dvy * dvy)).exp();
    out.h = c.k_h * (-10.0 * (x.nominal_height - x.height).abs()).exp();
    out.w = if c.k_w > 0.0 { c.k_w * (3.0 - 12.0 * (-0.5 * x.yaw_rate.abs()).exp()) } else { 0.0 };
    out.cl = x
        .feet
        .iter()
        .filter(|f| !f.in_contact)
        .map(|f| c.k_cl * (f.height - foot_clearance).powi(2))
        .sum();
    out.arm = c.k_arm * squared_distance(x.arm, x.arm_nominal);
    out.phi = 0.0;
    out.air = 0.0;
    out.base = 0.0;
}

/// Fills the general terms, sums the groups and composes the total.
/// `reorient` selects which terms count as objectives.
pub fn finish(out: &mut RewardBreakdown, general: [f64; 4], reward_factor: f64, reorient: bool) {
    out.p = general[0];
    out.pdot = general[1];
    out.tau = general[2];
    out.s = general[3];
    let gen = out.p + out.pdot + out.tau + out.s;
    if reorient {
        out.r_pos = out.ori + out.v + out.h + out.w;
        out.r_neg = gen + out.cl + out.arm;
    } else {
        out.r_pos = out.v + out.phi + out.w + out.air;
        out.r_neg = gen + out.cl + out.base + out.ori + out.arm;
    }
    out.total = compose_total(out.r_pos, out.r_neg, reward_factor);
}

/// Per-foot stance and swing timers.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FootContactTracker {
    pub t_stance: Vec<f64>,
    pub t_air: Vec<f64>,
    pub contact: Vec<bool>,
    /// Duration of the last completed swing, frozen at touchdown.
    pub last_air: Vec<f64>,
    /// Duration of the last completed stance, frozen at liftoff.
    pub last_stance: Vec<f64>,
}

impl FootContactTracker {
    pub fn new(feet: usize) -> Self {
        Self {
            t_stance: vec![0.0; feet],
            t_air: vec![0.0; feet],
            contact: vec![false; feet],
            last_air: vec![0.0; feet],
            last_stance: vec![0.0; feet],
        }
    }

    /// Starts every foot in the given contact state with zero durations.
    pub fn reset(&mut self, contact: &[bool]) {
        let n = contact.len();
        *self = Self::new(n);
        self.contact.copy_from_slice(contact);
    }

    pub fn update(&mut self, contact: &[bool], dt: f64) {
        assert!(dt > 0.0, "tracker step must be positive");
        assert_eq!(contact.len(), self.contact.len());
        for i in 0..contact.len() {
            if contact[i] {
                if !self.contact[i] {
                    self.last_air[i] = self.t_air[i];
                    self.t_air[i] = 0.0;
                }
                self.t_stance[i] += dt;
            } else {
                if self.contact[i] {
                    self.last_stance[i] = self.t_stance[i];
                    self.t_stance[i] = 0.0;
                }
                self.t_air[i] += dt;
            }
            self.contact[i] = contact[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracker_accumulates_and_freezes() {
        let mut t = FootContactTracker::new(1);
        t.reset(&[true]);
        for _ in 0..30 {
            t.update(&[true], 0.01);
        }
        assert!((t.t_stance[0] - 0.3).abs() < 1e-12);
        for _ in 0..5 {
            t.update(&[false], 0.01);
        }
        assert!((t.last_stance[0] - 0.3).abs() < 1e-12);
        t.update(&[true], 0.01);
        assert!((t.last_air[0] - 0.05).abs() < 1e-12);
        assert_eq!(t.t_air[0], 0.0);
    }

    #[test]
    fn alternating_contact_keeps_durations_short() {
        let mut t = FootContactTracker::new(2);
        for k in 0..50 {
            let c = k % 2 == 0;
            t.update(&[c, !c], 0.01);
            for f in 0..2 {
                assert!(t.t_stance[f] <= 0.01 + 1e-15 && t.t_air[f] <= 0.01 + 1e-15);
            }
        }
    }

    #[test]
    fn default_coefficients_validate() {
        RewardCoefficients::default().validate().unwrap();
        let mut c = RewardCoefficients::default();
        c.turn.k_cl = 1.0;
        assert!(matches!(c.validate(), Err(RewardError::Invalid { field, .. }) if field == "turn.k_cl"));
    }
}
