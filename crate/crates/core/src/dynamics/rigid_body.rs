//! Kinematics, mass matrix (composite rigid body), bias forces (recursive
//! Newton-Euler) and momentum for a [`KinematicTree`].
//!
//! Everything is computed in world coordinates with spatial vectors taken at
//! the world origin, so no per-link coordinate transforms are needed during
//! the recursions.

use nalgebra::{DMatrix, DVector};

use super::spatial::{BodyInertia, SpatialVector};
use super::{DynamicsError, JointKind, KinematicTree, Marker, SimState};
use crate::math::{skew, Mat3, Vec3};

/// World-frame pose of every link frame.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkFrames {
    pub rotations: Vec<Mat3>,
    pub positions: Vec<Vec3>,
}

impl LinkFrames {
    fn with_len(n: usize) -> Self {
        Self { rotations: vec![Mat3::identity(); n], positions: vec![Vec3::zeros(); n] }
    }

    /// World position of a point given in a link frame.
    pub fn point(&self, link: usize, offset: &Vec3) -> Vec3 {
        self.positions[link] + self.rotations[link] * offset
    }

    pub fn marker_position(&self, marker: &Marker) -> Vec3 {
        self.point(marker.link, &marker.offset)
    }
}

#[inline]
fn axis_rotation(axis: &Vec3, angle: f64) -> Mat3 {
    let k = skew(axis);
    let (s, c) = angle.sin_cos();
    Mat3::identity() + k * s + k * k * (1.0 - c)
}

fn fill_frames(tree: &KinematicTree, state: &SimState, frames: &mut LinkFrames, axes: Option<&mut Vec<Vec3>>) {
    let links = tree.links();
    let root = &links[0];
    if tree.is_floating() {
        frames.rotations[0] = state.base_orientation.to_rotation_matrix();
        frames.positions[0] = state.base_position;
    } else {
        frames.rotations[0] = *tree.joint_rotation(0);
        frames.positions[0] = root.origin;
    }
    let mut axes = axes;
    for (i, link) in links.iter().enumerate().skip(1) {
        let p = link.parent.expect("validated tree");
        let joint_frame = frames.rotations[p] * tree.joint_rotation(i);
        frames.positions[i] = frames.positions[p] + frames.rotations[p] * link.origin;
        let JointKind::Revolute { axis } = link.joint else { unreachable!("validated tree") };
        let j = tree.velocity_index(i).expect("revolute") - tree.base_dofs();
        frames.rotations[i] = joint_frame * axis_rotation(&axis, state.joint_positions[j]);
        if let Some(a) = axes.as_deref_mut() {
            a[i] = joint_frame * axis;
        }
    }
}

pub fn forward_kinematics(tree: &KinematicTree, state: &SimState) -> Result<LinkFrames, DynamicsError> {
    state.check(tree)?;
    let mut frames = LinkFrames::with_len(tree.links().len());
    fill_frames(tree, state, &mut frames, None);
    Ok(frames)
}

/// Per-state quantities shared by all the dynamics algorithms. Reusing one
/// cache across steps avoids reallocation in the simulation loop.
#[derive(Clone, Debug)]
pub struct RigidBodyCache {
    pub frames: LinkFrames,
    /// World-frame joint axis per link (unused for the root).
    pub axes: Vec<Vec3>,
    /// World COM per link.
    pub coms: Vec<Vec3>,
    /// Spatial inertia about the world origin per link.
    pub inertias: Vec<BodyInertia>,
    /// Motion subspace column per generalized velocity.
    pub subspace: Vec<SpatialVector>,
    /// Spatial velocity per link.
    pub velocities: Vec<SpatialVector>,
    composite: Vec<BodyInertia>,
    accel: Vec<SpatialVector>,
    force: Vec<SpatialVector>,
    base_bias_accel: SpatialVector,
}

impl RigidBodyCache {
    pub fn new(tree: &KinematicTree) -> Self {
        let n = tree.links().len();
        Self {
            frames: LinkFrames::with_len(n),
            axes: vec![Vec3::zeros(); n],
            coms: vec![Vec3::zeros(); n],
            inertias: vec![BodyInertia::default(); n],
            subspace: vec![SpatialVector::zeros(); tree.num_velocities()],
            velocities: vec![SpatialVector::zeros(); n],
            composite: vec![BodyInertia::default(); n],
            accel: vec![SpatialVector::zeros(); n],
            force: vec![SpatialVector::zeros(); n],
            base_bias_accel: SpatialVector::zeros(),
        }
    }

    pub fn from_state(tree: &KinematicTree, state: &SimState) -> Result<Self, DynamicsError> {
        let mut c = Self::new(tree);
        c.update(tree, state)?;
        Ok(c)
    }

    pub fn update(&mut self, tree: &KinematicTree, state: &SimState) -> Result<(), DynamicsError> {
        state.check(tree)?;
        fill_frames(tree, state, &mut self.frames, Some(&mut self.axes));
        let links = tree.links();
        for (i, link) in links.iter().enumerate() {
            let r = &self.frames.rotations[i];
            let com = self.frames.point(i, &link.inertia.com);
            let inertia_world = r * link.inertia.inertia * r.transpose();
            self.coms[i] = com;
            self.inertias[i] = BodyInertia::from_com(link.inertia.mass, &com, &inertia_world);
        }

        let b = tree.base_dofs();
        if b == 6 {
            let r0 = self.frames.rotations[0];
            let p0 = self.frames.positions[0];
            for k in 0..3 {
                self.subspace[k] = SpatialVector::new(Vec3::zeros(), Vec3::ith(k, 1.0));
                let a = r0.column(k).into_owned();
                self.subspace[3 + k] = SpatialVector::new(a, p0.cross(&a));
            }
            let w = r0 * state.base_angular_velocity;
            let v = state.base_linear_velocity;
            self.velocities[0] = SpatialVector::new(w, v - w.cross(&p0));
            self.base_bias_accel = SpatialVector::new(Vec3::zeros(), -w.cross(&v));
        } else {
            self.velocities[0] = SpatialVector::zeros();
            self.base_bias_accel = SpatialVector::zeros();
        }
        for (i, link) in links.iter().enumerate().skip(1) {
            let p = link.parent.expect("validated tree");
            let k = tree.velocity_index(i).expect("revolute");
            let a = self.axes[i];
            let s = SpatialVector::new(a, self.frames.positions[i].cross(&a));
            self.subspace[k] = s;
            self.velocities[i] = self.velocities[p] + s * state.joint_velocities[k - b];
        }
        Ok(())
    }

    /// Joint-space inertia matrix via composite rigid bodies.
    pub fn mass_matrix_into(&mut self, tree: &KinematicTree, m: &mut DMatrix<f64>) {
        let n = tree.num_velocities();
        m.resize_mut(n, n, 0.0);
        m.fill(0.0);
        self.composite.copy_from_slice(&self.inertias);
        for i in (1..self.composite.len()).rev() {
            let p = tree.links()[i].parent.expect("validated tree");
            let c = self.composite[i];
            self.composite[p] += c;
        }
        let b = tree.base_dofs();
        for k in 0..b {
            let f = self.composite[0].apply(&self.subspace[k]);
            for j in 0..b {
                m[(j, k)] = self.subspace[j].dot(&f);
            }
        }
        for i in 1..self.composite.len() {
            let k = tree.velocity_index(i).expect("revolute");
            let f = self.composite[i].apply(&self.subspace[k]);
            for &j in tree.support(i) {
                let v = self.subspace[j].dot(&f);
                m[(j, k)] = v;
                m[(k, j)] = v;
            }
        }
    }

    /// `C(q, qd) qd + g(q)` for a world gravity vector.
    pub fn bias_into(&mut self, tree: &KinematicTree, state: &SimState, gravity: &Vec3, out: &mut DVector<f64>) {
        let n = tree.num_velocities();
        out.resize_vertically_mut(n, 0.0);
        let b = tree.base_dofs();
        let links = tree.links();
        // Gravity enters as a fictitious upward acceleration of the root.
        let root_accel = self.base_bias_accel + SpatialVector::new(Vec3::zeros(), -gravity);
        for i in 0..links.len() {
            let v = self.velocities[i];
            let a = if i == 0 {
                root_accel
            } else {
                let p = links[i].parent.expect("validated tree");
                let k = tree.velocity_index(i).expect("revolute");
                self.accel[p] + v.cross_motion(&self.subspace[k]) * state.joint_velocities[k - b]
            };
            self.accel[i] = a;
            let inertia = &self.inertias[i];
            self.force[i] = inertia.apply(&a) + v.cross_force(&inertia.apply(&v));
        }
        for i in (1..links.len()).rev() {
            let p = links[i].parent.expect("validated tree");
            let f = self.force[i];
            self.force[p] += f;
        }
        for k in 0..b {
            out[k] = self.subspace[k].dot(&self.force[0]);
        }
        for i in 1..links.len() {
            let k = tree.velocity_index(i).expect("revolute");
            out[k] = self.subspace[k].dot(&self.force[i]);
        }
    }

    /// Adds the generalized force `J^T w` of a world wrench acting on `link`.
    pub fn add_wrench(&self, tree: &KinematicTree, link: usize, wrench: &SpatialVector, out: &mut DVector<f64>) {
        for &k in tree.support(link) {
            out[k] += self.subspace[k].dot(wrench);
        }
    }

    /// World velocity of a point rigidly attached to `link`.
    pub fn point_velocity(&self, link: usize, world_point: &Vec3) -> Vec3 {
        self.velocities[link].point_velocity(world_point)
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.velocities.iter().zip(&self.inertias).map(|(v, i)| 0.5 * v.dot(&i.apply(v))).sum()
    }

    /// Potential energy for a world gravity vector.
    pub fn potential_energy(&self, tree: &KinematicTree, gravity: &Vec3) -> f64 {
        tree.links().iter().zip(&self.coms).map(|(l, c)| -l.inertia.mass * gravity.dot(c)).sum()
    }

    /// Total spatial momentum about the world origin.
    pub fn spatial_momentum(&self) -> SpatialVector {
        let mut h = SpatialVector::zeros();
        for (v, i) in self.velocities.iter().zip(&self.inertias) {
            h += i.apply(v);
        }
        h
    }

    pub fn center_of_mass(&self) -> Vec3 {
        let mut m = 0.0;
        let mut c = Vec3::zeros();
        for i in &self.inertias {
            m += i.mass;
            c += i.first_moment;
        }
        if m > 0.0 {
            c / m
        } else {
            Vec3::zeros()
        }
    }
}

pub fn mass_matrix(tree: &KinematicTree, state: &SimState) -> Result<DMatrix<f64>, DynamicsError> {
    let mut cache = RigidBodyCache::from_state(tree, state)?;
    let mut m = DMatrix::zeros(0, 0);
    cache.mass_matrix_into(tree, &mut m);
    Ok(m)
}

pub fn bias_forces(tree: &KinematicTree, state: &SimState, gravity: &Vec3) -> Result<DVector<f64>, DynamicsError> {
    let mut cache = RigidBodyCache::from_state(tree, state)?;
    let mut out = DVector::zeros(0);
    cache.bias_into(tree, state, gravity, &mut out);
    Ok(out)
}

/// Linear momentum and angular momentum about the instantaneous COM, world frame.
pub fn com_momentum(tree: &KinematicTree, state: &SimState) -> Result<(Vec3, Vec3), DynamicsError> {
    let cache = RigidBodyCache::from_state(tree, state)?;
    let h = cache.spatial_momentum();
    let c = cache.center_of_mass();
    Ok((h.linear, h.angular - c.cross(&h.linear)))
}

pub fn kinetic_energy(tree: &KinematicTree, state: &SimState) -> Result<f64, DynamicsError> {
    Ok(RigidBodyCache::from_state(tree, state)?.kinetic_energy())
}
