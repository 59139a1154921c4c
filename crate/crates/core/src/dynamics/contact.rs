//! Penalty contact between point feet and the ground plane `z = 0`.

use serde::{Deserialize, Serialize};

use super::rigid_body::{LinkFrames, RigidBodyCache};
use super::{DynamicsError, KinematicTree, MarkerKind, SimState};
use crate::math::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactParams {
    /// Normal stiffness (N/m).
    pub stiffness: f64,
    /// Normal damping (N s/m).
    pub damping: f64,
    pub friction: f64,
    /// Below this sliding speed friction grows linearly from zero (m/s).
    pub regularization_velocity: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self { stiffness: 5000.0, damping: 100.0, friction: 0.8, regularization_velocity: 0.05 }
    }
}

impl ContactParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let ok = [self.stiffness, self.damping, self.friction, self.regularization_velocity]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(DynamicsError::InvalidTree("contact parameters must all be strictly positive".into()))
        }
    }

    /// Ground reaction on a point at `position` moving with `velocity`.
    pub fn point_force(&self, position: &Vec3, velocity: &Vec3) -> Vec3 {
        if position.z >= 0.0 {
            return Vec3::zeros();
        }
        let normal = (-self.stiffness * position.z - self.damping * velocity.z).max(0.0);
        if normal == 0.0 {
            return Vec3::zeros();
        }
        let tangential = Vec3::new(velocity.x, velocity.y, 0.0);
        let speed = tangential.norm();
        let friction = tangential * (-self.friction * normal / speed.max(self.regularization_velocity));
        Vec3::new(friction.x, friction.y, normal)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FootContact {
    pub link: usize,
    pub position: Vec3,
    pub velocity: Vec3,
    pub force: Vec3,
}

impl FootContact {
    pub fn in_contact(&self) -> bool {
        self.position.z < 0.0
    }
}

/// Contact state of every foot marker, in marker order.
pub fn foot_contacts(tree: &KinematicTree, cache: &RigidBodyCache, params: &ContactParams) -> Vec<FootContact> {
    let mut out = Vec::with_capacity(4);
    foot_contacts_into(tree, cache, params, &mut out);
    out
}

pub fn foot_contacts_into(
    tree: &KinematicTree,
    cache: &RigidBodyCache,
    params: &ContactParams,
    out: &mut Vec<FootContact>,
) {
    out.clear();
    for m in tree.feet() {
        let position = cache.frames.marker_position(m);
        let velocity = cache.point_velocity(m.link, &position);
        out.push(FootContact { link: m.link, position, velocity, force: params.point_force(&position, &velocity) });
    }
}

pub fn contact_forces(
    tree: &KinematicTree,
    state: &SimState,
    params: &ContactParams,
) -> Result<Vec<FootContact>, DynamicsError> {
    let cache = RigidBodyCache::from_state(tree, state)?;
    Ok(foot_contacts(tree, &cache, params))
}

/// True when any collision box corner or collision marker is below the ground.
pub fn body_ground_collision(tree: &KinematicTree, frames: &LinkFrames) -> bool {
    let boxes = tree
        .collision_boxes()
        .iter()
        .any(|b| b.corners().iter().any(|c| frames.point(b.link, c).z < 0.0));
    boxes
        || tree
            .markers()
            .iter()
            .filter(|m| m.kind == MarkerKind::Collision)
            .any(|m| frames.marker_position(m).z < 0.0)
}
