use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix6, Vector6};

use super::contact::{foot_contacts_into, ContactParams, FootContact};
use super::rigid_body::RigidBodyCache;
use super::spatial::{BodyInertia, SpatialVector};
use super::{DynamicsError, KinematicTree, SimState};
use crate::math::{skew, Mat3, Vec3};

pub const STANDARD_GRAVITY: f64 = 9.81;

pub fn gravity_vector() -> Vec3 {
    Vec3::new(0.0, 0.0, -STANDARD_GRAVITY)
}

/// A world-frame force applied at a point fixed in a link.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExternalForce {
    pub link: usize,
    /// Application point in the link frame.
    pub offset: Vec3,
    /// Force in the world frame (N).
    pub force: Vec3,
}

/// Fixed-step semi-implicit Euler simulator with reusable work buffers.
///
/// For a floating base, the base velocity is corrected after the position
/// update so linear momentum and angular momentum about the centre of mass
/// equal their values at the start of the step plus the external impulse
/// (gravity, contacts, applied forces).
#[derive(Clone, Debug)]
pub struct Simulator {
    tree: Arc<KinematicTree>,
    pub contact: Option<ContactParams>,
    pub gravity: Vec3,
    pub momentum_projection: bool,
    cache: RigidBodyCache,
    /// Centroidal momentum at the start of the step (angular about the COM).
    momentum: SpatialVector,
    /// External wrench about the COM at the start of the step.
    wrench: SpatialVector,
    mass: DMatrix<f64>,
    rhs: DVector<f64>,
    velocity: DVector<f64>,
    feet: Vec<FootContact>,
}

impl Simulator {
    pub fn new(tree: Arc<KinematicTree>, contact: Option<ContactParams>, gravity: Vec3) -> Self {
        let n = tree.num_velocities();
        let cache = RigidBodyCache::new(&tree);
        Self {
            tree,
            contact,
            gravity,
            momentum_projection: true,
            cache,
            momentum: SpatialVector::zeros(),
            wrench: SpatialVector::zeros(),
            mass: DMatrix::zeros(n, n),
            rhs: DVector::zeros(n),
            velocity: DVector::zeros(n),
            feet: Vec::with_capacity(4),
        }
    }

    pub fn tree(&self) -> &Arc<KinematicTree> {
        &self.tree
    }

    /// Foot contacts evaluated at the start of the last step.
    pub fn last_contacts(&self) -> &[FootContact] {
        &self.feet
    }

    /// Generalized acceleration at the given state.
    pub fn acceleration(
        &mut self,
        state: &SimState,
        torques: &[f64],
        external: &[ExternalForce],
    ) -> Result<DVector<f64>, DynamicsError> {
        let tree = Arc::clone(&self.tree);
        if torques.len() != tree.num_joints() {
            return Err(DynamicsError::DimensionMismatch { expected: tree.num_joints(), got: torques.len() });
        }
        self.cache.update(&tree, state)?;
        let com = self.cache.center_of_mass();
        self.momentum = about_point(&self.cache.spatial_momentum(), &com);
        self.wrench = SpatialVector::new(Vec3::zeros(), self.gravity * tree.total_mass());
        self.cache.mass_matrix_into(&tree, &mut self.mass);
        self.cache.bias_into(&tree, state, &self.gravity, &mut self.rhs);
        self.rhs.neg_mut();
        let b = tree.base_dofs();
        for (j, t) in torques.iter().enumerate() {
            self.rhs[b + j] += t;
        }
        for e in external {
            let p = self.cache.frames.point(e.link, &e.offset);
            let w = SpatialVector::force_at(&p, &e.force);
            self.wrench += SpatialVector::force_at(&(p - com), &e.force);
            self.cache.add_wrench(&tree, e.link, &w, &mut self.rhs);
        }
        self.feet.clear();
        if let Some(params) = &self.contact {
            foot_contacts_into(&tree, &self.cache, params, &mut self.feet);
            for f in &self.feet {
                if f.force != Vec3::zeros() {
                    let w = SpatialVector::force_at(&f.position, &f.force);
                    self.wrench += SpatialVector::force_at(&(f.position - com), &f.force);
                    self.cache.add_wrench(&tree, f.link, &w, &mut self.rhs);
                }
            }
        }
        let chol = self.mass.clone().cholesky().ok_or(DynamicsError::SingularMassMatrix)?;
        Ok(chol.solve(&self.rhs))
    }

    /// Advances `state` by `dt`: velocities first, then positions.
    pub fn step(
        &mut self,
        state: &mut SimState,
        torques: &[f64],
        external: &[ExternalForce],
        dt: f64,
    ) -> Result<(), DynamicsError> {
        if !(dt > 0.0) {
            return Err(DynamicsError::InvalidTimeStep(dt));
        }
        let accel = self.acceleration(state, torques, external)?;
        let tree = Arc::clone(&self.tree);
        self.velocity.copy_from(&state.velocity_vector(&tree));
        self.velocity.axpy(dt, &accel, 1.0);
        state.set_velocity_vector(&tree, &self.velocity);
        if tree.is_floating() {
            state.base_position += state.base_linear_velocity * dt;
            state.base_orientation = state.base_orientation.integrate(&state.base_angular_velocity, dt);
        }
        for (q, qd) in state.joint_positions.iter_mut().zip(&state.joint_velocities) {
            *q += qd * dt;
        }
        if tree.is_floating() && self.momentum_projection {
            let target = self.momentum + self.wrench * dt;
            self.project_momentum(state, &target)?;
        }
        state.time += dt;
        if !state.is_finite() {
            return Err(DynamicsError::NonFinite { time: state.time });
        }
        Ok(())
    }
}

impl Simulator {
    /// Shifts the base velocity so the centroidal momentum equals `target`;
    /// joint velocities are untouched.
    fn project_momentum(&mut self, state: &mut SimState, target: &SpatialVector) -> Result<(), DynamicsError> {
        let tree = Arc::clone(&self.tree);
        self.cache.update(&tree, state)?;
        let com = self.cache.center_of_mass();
        let d = *target - about_point(&self.cache.spatial_momentum(), &com);
        let dh = SpatialVector::new(d.angular + com.cross(&d.linear), d.linear);
        let mut total = BodyInertia::default();
        for i in &self.cache.inertias {
            total += *i;
        }
        let c = skew(&total.first_moment);
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&total.rotational);
        m.fixed_view_mut::<3, 3>(0, 3).copy_from(&c);
        m.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-c));
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&(Mat3::identity() * total.mass));
        let rhs = Vector6::new(dh.angular.x, dh.angular.y, dh.angular.z, dh.linear.x, dh.linear.y, dh.linear.z);
        let dv = m.cholesky().ok_or(DynamicsError::SingularMassMatrix)?.solve(&rhs);
        let dw = Vec3::new(dv[0], dv[1], dv[2]);
        let dlin = Vec3::new(dv[3], dv[4], dv[5]);
        let p0 = self.cache.frames.positions[0];
        let r0 = self.cache.frames.rotations[0];
        state.base_linear_velocity += dlin + dw.cross(&p0);
        state.base_angular_velocity += r0.transpose() * dw;
        Ok(())
    }
}

/// Re-expresses a spatial momentum about the world origin about `point`.
fn about_point(h: &SpatialVector, point: &Vec3) -> SpatialVector {
    SpatialVector::new(h.angular - point.cross(&h.linear), h.linear)
}

/// One integration step as a pure function.
pub fn step(
    tree: &Arc<KinematicTree>,
    state: &SimState,
    torques: &[f64],
    external: &[ExternalForce],
    contact: Option<&ContactParams>,
    dt: f64,
) -> Result<SimState, DynamicsError> {
    let mut sim = Simulator::new(Arc::clone(tree), contact.copied(), gravity_vector());
    let mut next = state.clone();
    sim.step(&mut next, torques, external, dt)?;
    Ok(next)
}
