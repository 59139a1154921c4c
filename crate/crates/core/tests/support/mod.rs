//! Independent oracles for the dynamics tests. Everything here is built from
//! forward kinematics alone, never from the mass-matrix or Newton-Euler code.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use manitail_core::dynamics::{
    com_momentum, forward_kinematics, gravity_vector, JointKind, KinematicTree, Link, SimState, Simulator,
};
use manitail_core::math::{Mat3, SpatialInertia, UnitQuaternion, Vec3};
use manitail_core::models::{Robot, RobotVariant};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Moves the configuration along the generalized velocity `nu` for time `h`
/// (base linear velocity in world, angular velocity in body frame).
pub fn displace(tree: &KinematicTree, state: &SimState, nu: &DVector<f64>, h: f64) -> SimState {
    let mut s = state.clone();
    let b = tree.base_dofs();
    if b == 6 {
        s.base_position += Vec3::new(nu[0], nu[1], nu[2]) * h;
        let w = Vec3::new(nu[3], nu[4], nu[5]);
        s.base_orientation = s.base_orientation * UnitQuaternion::exp(&(w * h));
    }
    for j in 0..tree.num_joints() {
        s.joint_positions[j] += nu[b + j] * h;
    }
    s
}

fn vee_log(r: &Mat3) -> Vec3 {
    let q = UnitQuaternion::from_rotation_matrix(r);
    let v = Vec3::new(q.x, q.y, q.z);
    let s = v.norm();
    if s < 1e-300 {
        return Vec3::zeros();
    }
    v * (2.0 * s.atan2(q.w) / s)
}

/// Kinetic energy from central differences of link poses.
pub fn kinetic_energy_fd(tree: &KinematicTree, state: &SimState, nu: &DVector<f64>) -> f64 {
    let eps = 1e-5;
    let plus = forward_kinematics(tree, &displace(tree, state, nu, eps)).unwrap();
    let minus = forward_kinematics(tree, &displace(tree, state, nu, -eps)).unwrap();
    let mid = forward_kinematics(tree, state).unwrap();
    let mut t = 0.0;
    for (i, link) in tree.links().iter().enumerate() {
        let c_plus = plus.point(i, &link.inertia.com);
        let c_minus = minus.point(i, &link.inertia.com);
        let v = (c_plus - c_minus) / (2.0 * eps);
        let w = vee_log(&(plus.rotations[i] * minus.rotations[i].transpose())) / (2.0 * eps);
        let r = mid.rotations[i];
        let inertia_world = r * link.inertia.inertia * r.transpose();
        t += 0.5 * link.inertia.mass * v.dot(&v) + 0.5 * w.dot(&(inertia_world * w));
    }
    t
}

/// Mass matrix by polarization of the kinetic energy, `M_ij = T(e_i + e_j) - T(e_i) - T(e_j)`.
pub fn mass_matrix_fd(tree: &KinematicTree, state: &SimState) -> DMatrix<f64> {
    let n = tree.num_velocities();
    let unit = |i: usize| {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        e
    };
    let diag: Vec<f64> = (0..n).map(|i| kinetic_energy_fd(tree, state, &unit(i))).collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 2.0 * diag[i];
        for j in 0..i {
            let tij = kinetic_energy_fd(tree, state, &(unit(i) + unit(j)));
            m[(i, j)] = tij - diag[i] - diag[j];
            m[(j, i)] = m[(i, j)];
        }
    }
    m
}

pub fn random_unit_quaternion(rng: &mut impl Rng) -> UnitQuaternion {
    let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    UnitQuaternion::from_axis_angle(&(axis + Vec3::new(1e-3, 0.0, 0.0)), rng.random_range(-3.0..3.0))
}

/// Random pose and velocity within a few units of everything.
pub fn random_state(tree: &KinematicTree, rng: &mut impl Rng) -> SimState {
    let n = tree.num_joints();
    let mut s = SimState::zeros(n);
    s.base_position = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.5..2.0));
    s.base_orientation = random_unit_quaternion(rng);
    s.base_linear_velocity = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    s.base_angular_velocity = Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    for j in 0..n {
        s.joint_positions[j] = rng.random_range(-1.5..1.5);
        s.joint_velocities[j] = rng.random_range(-2.0..2.0);
    }
    s
}

/// Small-angle period of a simple pendulum.
pub fn pendulum_period(length: f64, g: f64) -> f64 {
    2.0 * std::f64::consts::PI * (length / g).sqrt()
}

/// Point mass on a massless rod, hinged about y at a fixed root.
pub fn pendulum(length: f64, mass: f64) -> KinematicTree {
    let link = |name: &str, parent: Option<usize>, joint: JointKind, inertia: SpatialInertia| Link {
        name: name.into(),
        parent,
        joint,
        origin: Vec3::zeros(),
        rpy: Vec3::zeros(),
        inertia,
        limits: None,
    };
    KinematicTree::new(
        "pendulum",
        vec![
            link("root", None, JointKind::Fixed, SpatialInertia::zero()),
            link(
                "bob",
                Some(0),
                JointKind::Revolute { axis: Vec3::y() },
                SpatialInertia::point_mass(mass, Vec3::new(0.0, 0.0, -length)),
            ),
        ],
        vec![],
        vec![],
    )
    .unwrap()
}

/// Simulated period from successive downward zero crossings over 5 s.
pub fn measured_pendulum_period(length: f64, amplitude: f64, dt: f64) -> f64 {
    let tree = Arc::new(pendulum(length, 1.0));
    let mut sim = Simulator::new(Arc::clone(&tree), None, gravity_vector());
    let mut s = SimState::zeros(1);
    s.joint_positions[0] = amplitude;
    let mut crossings = Vec::new();
    let mut prev = s.joint_positions[0];
    for _ in 0..(5.0 / dt).round() as usize {
        sim.step(&mut s, &[0.0], &[], dt).unwrap();
        let q = s.joint_positions[0];
        if prev > 0.0 && q <= 0.0 {
            let frac = prev / (prev - q);
            crossings.push(s.time - dt + frac * dt);
        }
        prev = q;
    }
    (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64
}

/// Relative drift of angular momentum about the COM over one second of
/// airborne motion under smooth random internal torques.
pub fn airborne_drift(dt: f64, projection: bool) -> f64 {
    let robot = Robot::new(RobotVariant::ViperX300S).unwrap();
    let tree = &robot.tree;
    let limits = robot.joint_limits();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let amp: Vec<f64> = limits.iter().map(|l| 0.3 * l.effort * rng.random_range(0.2..1.0)).collect();
    let freq: Vec<f64> = (0..18).map(|_| rng.random_range(0.5..2.0)).collect();
    let phase: Vec<f64> = (0..18).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let mut s = robot.nominal_state();
    s.base_position.z = 20.0;
    s.base_angular_velocity = Vec3::new(0.3, 1.0, 0.2);
    let mut sim = Simulator::new(Arc::clone(tree), None, gravity_vector());
    sim.momentum_projection = projection;
    let (_, l0) = com_momentum(tree, &s).unwrap();
    let steps = (1.0 / dt).round() as usize;
    let mut tau = vec![0.0; 18];
    for k in 0..steps {
        let t = k as f64 * dt;
        for j in 0..18 {
            tau[j] = amp[j] * (2.0 * PI * freq[j] * t + phase[j]).sin() - 0.4 * s.joint_velocities[j];
        }
        sim.step(&mut s, &tau, &[], dt).unwrap();
    }
    let (_, l1) = com_momentum(tree, &s).unwrap();
    (l1 - l0).norm() / l0.norm()
}

