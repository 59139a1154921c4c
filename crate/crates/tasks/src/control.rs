//! Action scaling, the joint PD law and observation assembly.

use serde::{Deserialize, Serialize};

use manitail_core::dynamics::JointLimits;
use manitail_core::math::{signed_planar_angle, Vec3};
use manitail_core::SimState;

/// Action factor mapping policy outputs to joint offsets (rad).
pub const ACTION_SCALE: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdGains {
    pub kp: f64,
    pub kd: f64,
}

impl Default for PdGains {
    fn default() -> Self {
        Self { kp: 17.0, kd: 0.4 }
    }
}

/// `q_des = q_nominal + scale * a`, clamped to the joint limits.
pub fn scale_action(action: &[f64], nominal: &[f64], scale: f64, limits: &[JointLimits], out: &mut [f64]) {
    assert!(action.len() == nominal.len() && nominal.len() == limits.len() && out.len() == limits.len());
    for i in 0..out.len() {
        out[i] = (nominal[i] + scale * action[i]).clamp(limits[i].lower, limits[i].upper);
    }
}

/// `tau = kp (q_des - p) - kd pdot`, clamped to each joint's effort limit.
pub fn pd_torque(q_des: &[f64], p: &[f64], pdot: &[f64], gains: &PdGains, limits: &[JointLimits], out: &mut [f64]) {
    assert!(q_des.len() == p.len() && p.len() == pdot.len() && pdot.len() == limits.len() && out.len() == limits.len());
    for i in 0..out.len() {
        let e = limits[i].effort;
        out[i] = (gains.kp * (q_des[i] - p[i]) - gains.kd * pdot[i]).clamp(-e, e);
    }
}

/// Command part of the observation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CommandObservation {
    pub vx: f64,
    pub vy: f64,
    /// Commanded world heading (rad).
    pub heading: f64,
}

/// Offsets of each segment in the observation vector for `n` joints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObservationLayout {
    pub joints: usize,
    pub with_command: bool,
}

impl ObservationLayout {
    pub const BASE_DIM: usize = 12;
    pub const COMMAND_DIM: usize = 4;

    pub fn len(&self) -> usize {
        4 * self.joints + Self::BASE_DIM + if self.with_command { Self::COMMAND_DIM } else { 0 }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn positions(&self) -> usize {
        0
    }
    pub fn velocities(&self) -> usize {
        self.joints
    }
    pub fn history1(&self) -> usize {
        2 * self.joints
    }
    pub fn history2(&self) -> usize {
        3 * self.joints
    }
    pub fn angular_velocity(&self) -> usize {
        4 * self.joints
    }
    pub fn linear_velocity(&self) -> usize {
        4 * self.joints + 3
    }
    pub fn body_x(&self) -> usize {
        4 * self.joints + 6
    }
    pub fn body_z(&self) -> usize {
        4 * self.joints + 9
    }
    pub fn command(&self) -> Option<usize> {
        self.with_command.then_some(4 * self.joints + 12)
    }

    /// Assembles `[p, pdot, p_{t-1}, p_{t-2}, w_body, v_body, x_axis, z_axis,
    /// (vx, vy, sin, cos of heading error)]`.
    pub fn build(
        &self,
        state: &SimState,
        history: [&[f64]; 2],
        command: Option<&CommandObservation>,
        out: &mut Vec<f64>,
    ) {
        let n = self.joints;
        assert_eq!(state.joint_positions.len(), n);
        assert_eq!(command.is_some(), self.with_command);
        out.clear();
        out.extend_from_slice(&state.joint_positions);
        out.extend_from_slice(&state.joint_velocities);
        out.extend_from_slice(history[0]);
        out.extend_from_slice(history[1]);
        out.extend_from_slice(state.base_angular_velocity.as_slice());
        out.extend_from_slice(state.base_linear_velocity_body().as_slice());
        let r = state.base_orientation.to_rotation_matrix();
        out.extend(r.column(0).iter());
        out.extend(r.column(2).iter());
        if let Some(c) = command {
            let x = r.column(0).into_owned();
            let target = Vec3::new(c.heading.cos(), c.heading.sin(), 0.0);
            let err = signed_planar_angle(&x, &target);
            out.extend_from_slice(&[c.vx, c.vy, err.sin(), err.cos()]);
        }
        debug_assert_eq!(out.len(), self.len());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use manitail_core::UnitQuaternion;

    fn limits(n: usize) -> Vec<JointLimits> {
        vec![JointLimits { lower: -1.0, upper: 1.0, effort: 17.0 }; n]
    }

    #[test]
    fn action_scaling() {
        let mut q = [0.0; 3];
        scale_action(&[0.0, 1.0, 100.0], &[0.1, 0.2, 0.3], ACTION_SCALE, &limits(3), &mut q);
        assert_eq!(q[0], 0.1);
        assert!((q[1] - 0.5).abs() < 1e-15);
        assert_eq!(q[2], 1.0);
    }

    #[test]
    fn pd_law() {
        let g = PdGains::default();
        let mut t = [0.0; 3];
        pd_torque(&[0.0, 0.1, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &g, &limits(3), &mut t);
        assert_eq!(t[0], 0.0);
        assert!((t[1] - 1.7).abs() < 1e-12);
        assert!((t[2] + 0.4).abs() < 1e-15);
        pd_torque(&[5.0], &[0.0], &[0.0], &g, &limits(1), &mut t[..1]);
        assert_eq!(t[0], 17.0);
    }

    #[test]
    fn yawed_velocity_swaps_axes() {
        let mut s = SimState::zeros(2);
        s.base_orientation = UnitQuaternion::from_axis_angle(&Vec3::z(), std::f64::consts::FRAC_PI_2);
        s.base_linear_velocity = Vec3::new(1.0, 0.0, 0.0);
        let layout = ObservationLayout { joints: 2, with_command: true };
        let mut out = Vec::new();
        let h = [0.0; 2];
        layout.build(&s, [&h, &h], Some(&CommandObservation { vx: 1.0, vy: 0.0, heading: std::f64::consts::PI }), &mut out);
        assert_eq!(out.len(), 4 * 2 + 16);
        let v = layout.linear_velocity();
        assert!(out[v].abs() < 1e-12 && (out[v + 1] + 1.0).abs() < 1e-12);
        let c = layout.command().unwrap();
        assert!((out[c + 2] - 1.0).abs() < 1e-12 && out[c + 3].abs() < 1e-12);
    }

    #[test]
    fn reorientation_layout_has_no_command() {
        let layout = ObservationLayout { joints: 18, with_command: false };
        assert_eq!(layout.len(), 84);
        assert_eq!(layout.command(), None);
    }
}
