use nalgebra::DVector;

use super::{DynamicsError, KinematicTree};
use crate::math::{UnitQuaternion, Vec3};

/// Full mechanical state of a floating-base tree.
///
/// Base linear velocity is the world-frame velocity of the base frame origin;
/// base angular velocity is expressed in the base (body) frame. The
/// generalized velocity vector is laid out as `[v_world, w_body, qdot]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub base_position: Vec3,
    pub base_orientation: UnitQuaternion,
    pub base_linear_velocity: Vec3,
    pub base_angular_velocity: Vec3,
    pub joint_positions: Vec<f64>,
    pub joint_velocities: Vec<f64>,
    pub time: f64,
}

impl SimState {
    pub fn zeros(num_joints: usize) -> Self {
        Self {
            base_position: Vec3::zeros(),
            base_orientation: UnitQuaternion::identity(),
            base_linear_velocity: Vec3::zeros(),
            base_angular_velocity: Vec3::zeros(),
            joint_positions: vec![0.0; num_joints],
            joint_velocities: vec![0.0; num_joints],
            time: 0.0,
        }
    }

    pub fn check(&self, tree: &KinematicTree) -> Result<(), DynamicsError> {
        let n = tree.num_joints();
        if self.joint_positions.len() != n || self.joint_velocities.len() != n {
            return Err(DynamicsError::DimensionMismatch {
                expected: n,
                got: self.joint_positions.len().max(self.joint_velocities.len()),
            });
        }
        Ok(())
    }

    pub fn velocity_vector(&self, tree: &KinematicTree) -> DVector<f64> {
        let mut v = DVector::zeros(tree.num_velocities());
        let b = tree.base_dofs();
        if b == 6 {
            v.fixed_rows_mut::<3>(0).copy_from(&self.base_linear_velocity);
            v.fixed_rows_mut::<3>(3).copy_from(&self.base_angular_velocity);
        }
        for (i, qd) in self.joint_velocities.iter().enumerate() {
            v[b + i] = *qd;
        }
        v
    }

    pub fn set_velocity_vector(&mut self, tree: &KinematicTree, v: &DVector<f64>) {
        let b = tree.base_dofs();
        if b == 6 {
            self.base_linear_velocity = v.fixed_rows::<3>(0).into_owned();
            self.base_angular_velocity = v.fixed_rows::<3>(3).into_owned();
        }
        for (i, qd) in self.joint_velocities.iter_mut().enumerate() {
            *qd = v[b + i];
        }
    }

    /// Base angular velocity in the world frame.
    pub fn base_angular_velocity_world(&self) -> Vec3 {
        self.base_orientation.rotate(&self.base_angular_velocity)
    }

    /// Base linear velocity in the base frame.
    pub fn base_linear_velocity_body(&self) -> Vec3 {
        self.base_orientation.conjugate().rotate(&self.base_linear_velocity)
    }

    pub fn is_finite(&self) -> bool {
        self.base_position.iter().all(|v| v.is_finite())
            && [self.base_orientation.w, self.base_orientation.x, self.base_orientation.y, self.base_orientation.z]
                .iter()
                .all(|v| v.is_finite())
            && self.base_linear_velocity.iter().all(|v| v.is_finite())
            && self.base_angular_velocity.iter().all(|v| v.is_finite())
            && self.joint_positions.iter().all(|v| v.is_finite())
            && self.joint_velocities.iter().all(|v| v.is_finite())
    }
}
