//! Plücker spatial vectors expressed at the world origin.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::math::{Mat3, Vec3};

/// A spatial motion or force vector, `(angular, linear)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpatialVector {
    pub angular: Vec3,
    pub linear: Vec3,
}

impl SpatialVector {
    pub const fn new(angular: Vec3, linear: Vec3) -> Self {
        Self { angular, linear }
    }

    pub fn zeros() -> Self {
        Self::default()
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> f64 {
        self.angular.dot(&o.angular) + self.linear.dot(&o.linear)
    }

    /// Motion cross product `self x m`.
    #[inline]
    pub fn cross_motion(&self, m: &Self) -> Self {
        Self {
            angular: self.angular.cross(&m.angular),
            linear: self.angular.cross(&m.linear) + self.linear.cross(&m.angular),
        }
    }

    /// Force cross product `self x* f`.
    #[inline]
    pub fn cross_force(&self, f: &Self) -> Self {
        Self {
            angular: self.angular.cross(&f.angular) + self.linear.cross(&f.linear),
            linear: self.angular.cross(&f.linear),
        }
    }

    /// Wrench of a force applied at a world point.
    pub fn force_at(point: &Vec3, force: &Vec3) -> Self {
        Self { angular: point.cross(force), linear: *force }
    }

    /// Linear velocity of the world point `p` for this spatial motion.
    #[inline]
    pub fn point_velocity(&self, p: &Vec3) -> Vec3 {
        self.linear + self.angular.cross(p)
    }
}

impl Add for SpatialVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { angular: self.angular + o.angular, linear: self.linear + o.linear }
    }
}

impl Sub for SpatialVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { angular: self.angular - o.angular, linear: self.linear - o.linear }
    }
}

impl AddAssign for SpatialVector {
    fn add_assign(&mut self, o: Self) {
        self.angular += o.angular;
        self.linear += o.linear;
    }
}

impl Neg for SpatialVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self { angular: -self.angular, linear: -self.linear }
    }
}

impl Mul<f64> for SpatialVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self { angular: self.angular * s, linear: self.linear * s }
    }
}

/// Rigid-body inertia about the world origin: mass, first moment `h = m c`
/// and rotational inertia about the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodyInertia {
    pub mass: f64,
    pub first_moment: Vec3,
    pub rotational: Mat3,
}

impl Default for BodyInertia {
    fn default() -> Self {
        Self { mass: 0.0, first_moment: Vec3::zeros(), rotational: Mat3::zeros() }
    }
}

impl BodyInertia {
    /// From world-frame COM position and world-frame inertia about the COM.
    pub fn from_com(mass: f64, com: &Vec3, inertia_com: &Mat3) -> Self {
        let c = com;
        let rotational = inertia_com + (Mat3::identity() * c.dot(c) - c * c.transpose()) * mass;
        Self { mass, first_moment: c * mass, rotational }
    }

    /// Spatial momentum `I v`.
    #[inline]
    pub fn apply(&self, v: &SpatialVector) -> SpatialVector {
        SpatialVector {
            angular: self.rotational * v.angular + self.first_moment.cross(&v.linear),
            linear: v.linear * self.mass - self.first_moment.cross(&v.angular),
        }
    }
}

impl AddAssign for BodyInertia {
    fn add_assign(&mut self, o: Self) {
        self.mass += o.mass;
        self.first_moment += o.first_moment;
        self.rotational += o.rotational;
    }
}
