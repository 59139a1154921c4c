//! Floating-base kinematic-tree dynamics with penalty ground contact.

mod contact;
mod integrator;
mod rigid_body;
pub mod spatial;
mod state;
mod tree;

pub use contact::{body_ground_collision, contact_forces, foot_contacts, ContactParams, FootContact};
pub use integrator::{gravity_vector, step, ExternalForce, Simulator, STANDARD_GRAVITY};
pub use rigid_body::{
    bias_forces, com_momentum, forward_kinematics, kinetic_energy, mass_matrix, LinkFrames, RigidBodyCache,
};
pub use state::SimState;
pub use tree::{
    BoxEntry, CollisionBox, JointKind, JointLimits, JointType, KinematicTree, Link, LinkEntry, Marker, MarkerEntry,
    MarkerKind, TreeFile,
};

use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("state has {got} joint entries, tree expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid kinematic tree: {0}")]
    InvalidTree(String),
    #[error("mass matrix is not positive definite")]
    SingularMassMatrix,
    #[error("time step must be positive, got {0}")]
    InvalidTimeStep(f64),
    #[error("state became non-finite at t = {time}")]
    NonFinite { time: f64 },
    #[error(transparent)]
    Config(#[from] ConfigError),
}
