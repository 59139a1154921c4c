//! Rotation, quaternion and rigid-body inertia arithmetic.
//!
//! Quaternions are stored explicitly (`w, x, y, z`, Hamilton convention) and
//! always map body-frame vectors into the world frame. Rotation matrices are
//! derived on demand.

use std::ops::Mul;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance used when checking that caller-supplied directions are unit length.
pub const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MathError {
    #[error("expected a unit vector, got norm {norm}")]
    NotUnit { norm: f64 },
    #[error("invalid inertia: {0}")]
    InvalidInertia(String),
}

#[inline]
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Geodesic angle between two unit vectors, in `[0, pi]`.
pub fn angle_between(u: &Vec3, v: &Vec3) -> Result<f64, MathError> {
    for w in [u, v] {
        let norm = w.norm();
        if !((norm - 1.0).abs() <= UNIT_TOLERANCE) {
            return Err(MathError::NotUnit { norm });
        }
    }
    Ok(u.dot(v).clamp(-1.0, 1.0).acos())
}

/// Angle between the projections of `u` and `v` onto the world XY plane.
///
/// Used for headings. When either projection degenerates (the vector is
/// vertical) the heading is undefined and `pi / 2` is returned.
pub fn planar_angle_between(u: &Vec3, v: &Vec3) -> f64 {
    let pu = Vec3::new(u.x, u.y, 0.0);
    let pv = Vec3::new(v.x, v.y, 0.0);
    let (nu, nv) = (pu.norm(), pv.norm());
    if nu < 1e-9 || nv < 1e-9 {
        return std::f64::consts::FRAC_PI_2;
    }
    (pu.dot(&pv) / (nu * nv)).clamp(-1.0, 1.0).acos()
}

/// Signed planar angle from `from` to `to` about world +z, in `(-pi, pi]`.
pub fn signed_planar_angle(from: &Vec3, to: &Vec3) -> f64 {
    let cross = from.x * to.y - from.y * to.x;
    let dot = from.x * to.x + from.y * to.y;
    cross.atan2(dot)
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::identity()
    }
}

impl UnitQuaternion {
    pub const fn identity() -> Self {
        Self { w: 1.0, x: 0.0, y: 0.0, z: 0.0 }
    }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 || angle == 0.0 {
            return Self::identity();
        }
        let (s, c) = (0.5 * angle).sin_cos();
        let a = axis / n;
        Self { w: c, x: s * a.x, y: s * a.y, z: s * a.z }.normalized()
    }

    /// Exponential map of a rotation vector (axis scaled by angle).
    pub fn exp(rotation_vector: &Vec3) -> Self {
        let theta = rotation_vector.norm();
        let half = 0.5 * theta;
        // sin(half)/theta, with a series expansion near zero
        let k = if theta < 1e-8 {
            0.5 - theta * theta / 48.0
        } else {
            half.sin() / theta
        };
        Self {
            w: half.cos(),
            x: k * rotation_vector.x,
            y: k * rotation_vector.y,
            z: k * rotation_vector.z,
        }
        .normalized()
    }

    pub fn from_rotation_matrix(m: &Mat3) -> Self {
        let r = nalgebra::Rotation3::from_matrix_unchecked(*m);
        let q = nalgebra::UnitQuaternion::from_rotation_matrix(&r);
        Self { w: q.w, x: q.i, y: q.j, z: q.k }.normalized()
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Renormalizes and canonicalizes to `w >= 0`.
    pub fn normalized(self) -> Self {
        let n = self.norm();
        let s = if self.w < 0.0 { -1.0 / n } else { 1.0 / n };
        Self { w: self.w * s, x: self.x * s, y: self.y * s, z: self.z * s }
    }

    pub fn conjugate(&self) -> Self {
        Self { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn to_rotation_matrix(&self) -> Mat3 {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let (xx, yy, zz) = (x * x, y * y, z * z);
        let (xy, xz, yz) = (x * y, x * z, y * z);
        let (wx, wy, wz) = (w * x, w * y, w * z);
        Mat3::new(
            1.0 - 2.0 * (yy + zz),
            2.0 * (xy - wz),
            2.0 * (xz + wy),
            2.0 * (xy + wz),
            1.0 - 2.0 * (xx + zz),
            2.0 * (yz - wx),
            2.0 * (xz - wy),
            2.0 * (yz + wx),
            1.0 - 2.0 * (xx + yy),
        )
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        let u = Vec3::new(self.x, self.y, self.z);
        let t = 2.0 * u.cross(v);
        v + self.w * t + u.cross(&t)
    }

    /// Rotation angle in `[0, pi]`.
    pub fn angle(&self) -> f64 {
        let q = self.normalized();
        2.0 * Vec3::new(q.x, q.y, q.z).norm().atan2(q.w)
    }

    /// Advances the orientation by a constant body-frame angular velocity
    /// over `dt` seconds: `q * exp(omega * dt)`.
    pub fn integrate(&self, omega_body: &Vec3, dt: f64) -> Self {
        if omega_body.iter().all(|w| *w == 0.0) {
            return *self;
        }
        (*self * Self::exp(&(omega_body * dt))).normalized()
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    fn mul(self, r: UnitQuaternion) -> UnitQuaternion {
        let l = self;
        UnitQuaternion {
            w: l.w * r.w - l.x * r.x - l.y * r.y - l.z * r.z,
            x: l.w * r.x + l.x * r.w + l.y * r.z - l.z * r.y,
            y: l.w * r.y - l.x * r.z + l.y * r.w + l.z * r.x,
            z: l.w * r.z + l.x * r.y - l.y * r.x + l.z * r.w,
        }
    }
}

/// Mass properties of a rigid body: mass, center of mass and rotational
/// inertia about the center of mass, both expressed in the body frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialInertia {
    pub mass: f64,
    pub com: Vec3,
    pub inertia: Mat3,
}

impl SpatialInertia {
    /// Builds and validates. Zero mass is accepted only with zero inertia.
    pub fn new(mass: f64, com: Vec3, inertia: Mat3) -> Result<Self, MathError> {
        let s = Self { mass, com, inertia };
        s.validate()?;
        Ok(s)
    }

    pub fn zero() -> Self {
        Self { mass: 0.0, com: Vec3::zeros(), inertia: Mat3::zeros() }
    }

    pub fn point_mass(mass: f64, at: Vec3) -> Self {
        Self { mass, com: at, inertia: Mat3::zeros() }
    }

    /// Solid box with its center of mass at `com`.
    pub fn solid_box(mass: f64, com: Vec3, size: Vec3) -> Self {
        let (a, b, c) = (size.x * size.x, size.y * size.y, size.z * size.z);
        let k = mass / 12.0;
        Self { mass, com, inertia: Mat3::from_diagonal(&Vec3::new(k * (b + c), k * (a + c), k * (a + b))) }
    }

    /// Thin cylinder of length `length` and radius `radius` along `axis`.
    pub fn rod(mass: f64, com: Vec3, axis: &Vec3, length: f64, radius: f64) -> Self {
        let a = axis.normalize();
        let axial = 0.5 * mass * radius * radius;
        let transverse = mass * (3.0 * radius * radius + length * length) / 12.0;
        let inertia = Mat3::identity() * transverse + (a * a.transpose()) * (axial - transverse);
        Self { mass, com, inertia }
    }

    pub fn validate(&self) -> Result<(), MathError> {
        let bad = |m: &str| Err(MathError::InvalidInertia(m.to_string()));
        if !self.mass.is_finite() || self.mass < 0.0 {
            return bad("mass must be finite and non-negative");
        }
        if !self.com.iter().chain(self.inertia.iter()).all(|v| v.is_finite()) {
            return bad("non-finite entries");
        }
        let scale = self.inertia.abs().max().max(1e-12);
        if (self.inertia - self.inertia.transpose()).abs().max() > 1e-9 * scale {
            return bad("inertia matrix is not symmetric");
        }
        if self.mass == 0.0 {
            return if self.inertia.abs().max() == 0.0 { Ok(()) } else { bad("massless body with inertia") };
        }
        let eig = SymmetricEigen::new(self.inertia).eigenvalues;
        let tol = 1e-9 * scale;
        if eig.iter().any(|l| *l < -tol) {
            return bad("inertia matrix is not positive semi-definite");
        }
        let (a, b, c) = (eig[0], eig[1], eig[2]);
        if a + b < c - tol || a + c < b - tol || b + c < a - tol {
            return bad("principal moments violate the triangle inequality");
        }
        Ok(())
    }

    /// Re-expresses the body in a new frame: `com' = R com + t`, `I' = R I R^T`.
    pub fn transform(&self, rotation: &Mat3, translation: &Vec3) -> Self {
        Self {
            mass: self.mass,
            com: rotation * self.com + translation,
            inertia: rotation * self.inertia * rotation.transpose(),
        }
    }

    /// Rotational inertia about the frame origin (parallel-axis theorem).
    pub fn inertia_about_origin(&self) -> Mat3 {
        let c = self.com;
        self.inertia + (Mat3::identity() * c.dot(&c) - c * c.transpose()) * self.mass
    }

    /// Sum of two bodies expressed in the same frame.
    pub fn combine(&self, other: &Self) -> Self {
        let mass = self.mass + other.mass;
        if mass == 0.0 {
            return Self::zero();
        }
        let com = (self.com * self.mass + other.com * other.mass) / mass;
        let shift = |b: &Self| {
            let d = b.com - com;
            b.inertia + (Mat3::identity() * d.dot(&d) - d * d.transpose()) * b.mass
        };
        Self { mass, com, inertia: shift(self) + shift(other) }
    }
}
