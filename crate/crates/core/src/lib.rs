//! Physics substrate for a quadruped carrying a serial manipulator used as a
//! tail: rotation and inertia math, floating-base multibody dynamics with
//! penalty contacts, and the robot variants (no tail, WidowX250S, ViperX300S).

pub mod config;
pub mod dynamics;
pub mod math;
pub mod models;

pub use dynamics::{KinematicTree, SimState, Simulator};
pub use math::{SpatialInertia, UnitQuaternion, Vec3};
