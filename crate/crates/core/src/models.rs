//! Robot variants: a MiniCheetah-class quadruped with no tail, a WidowX250S
//! tail or a ViperX300S tail.
//!
//! Parameter sets live in `configs/robots/*.cfg`; the same files are embedded
//! in the library so the stock variants are always available.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{self, ConfigError};
use crate::dynamics::{
    forward_kinematics, CollisionBox, DynamicsError, JointKind, JointLimits, KinematicTree, Link, Marker,
    MarkerKind, SimState,
};
use crate::math::{Mat3, SpatialInertia, UnitQuaternion, Vec3};

const MINICHEETAH_CFG: &str = include_str!("../../../configs/robots/minicheetah.cfg");
const WIDOWX250S_CFG: &str = include_str!("../../../configs/robots/widowx250s.cfg");
const VIPERX300S_CFG: &str = include_str!("../../../configs/robots/viperx300s.cfg");

pub const LEG_NAMES: [&str; 4] = ["fl", "fr", "rl", "rr"];
pub const LEG_JOINTS: usize = 12;
pub const TAIL_JOINTS: usize = 6;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid robot spec field `{field}`: {message}")]
    InvalidSpec { field: String, message: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

fn invalid(field: &str, message: impl Into<String>) -> ModelError {
    ModelError::InvalidSpec { field: field.to_string(), message: message.into() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseSpec {
    pub mass: f64,
    pub size: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegSpec {
    pub hip_x: f64,
    pub hip_y: f64,
    pub abduction_offset: f64,
    pub thigh_length: f64,
    pub shank_length: f64,
    pub link_radius: f64,
    pub link_masses: [f64; 3],
    pub nominal: [f64; 3],
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    pub effort: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NominalSpec {
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MountSpec {
    pub offset: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadrupedSpec {
    pub name: String,
    pub base: BaseSpec,
    pub legs: LegSpec,
    pub nominal: NominalSpec,
    pub tail_mount: MountSpec,
}

impl QuadrupedSpec {
    pub fn minicheetah() -> Self {
        Self::from_str(MINICHEETAH_CFG).expect("embedded minicheetah.cfg is valid")
    }

    pub fn from_file(path: &Path) -> Result<Self, ModelError> {
        let spec: Self = config::from_table(config::load_tree(path)?)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Nominal leg joint vector (12 values, FL FR RL RR).
    pub fn nominal_joints(&self) -> Vec<f64> {
        (0..4).flat_map(|_| self.legs.nominal).collect()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.base.mass > 0.0) {
            return Err(invalid("base.mass", "must be positive"));
        }
        if self.base.size.iter().any(|s| !(*s > 0.0)) {
            return Err(invalid("base.size", "must be positive"));
        }
        let l = &self.legs;
        for (name, v) in [
            ("legs.thigh_length", l.thigh_length),
            ("legs.shank_length", l.shank_length),
            ("legs.link_radius", l.link_radius),
            ("legs.effort", l.effort),
        ] {
            if !(v > 0.0) {
                return Err(invalid(name, "must be positive"));
            }
        }
        if l.link_masses.iter().any(|m| !(*m > 0.0)) {
            return Err(invalid("legs.link_masses", "must be positive"));
        }
        for k in 0..3 {
            if !(l.lower[k] < l.upper[k]) {
                return Err(invalid("legs.lower", "joint limits are not well ordered"));
            }
            if !(l.lower[k] <= l.nominal[k] && l.nominal[k] <= l.upper[k]) {
                return Err(invalid("legs.nominal", "nominal pose outside joint limits"));
            }
        }
        if !(self.nominal.height > 0.0) {
            return Err(invalid("nominal.height", "standing height must be positive"));
        }
        Ok(())
    }
}

impl FromStr for QuadrupedSpec {
    type Err = ModelError;

    fn from_str(text: &str) -> Result<Self, ModelError> {
        let table = config::parse_str(text).map_err(|m| invalid("<root>", m))?;
        let spec: Self = config::from_table(table)?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn unit(self) -> Vec3 {
        match self {
            Axis::X => Vec3::x(),
            Axis::Y => Vec3::y(),
            Axis::Z => Vec3::z(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec {
    pub name: String,
    /// Total chain length (m).
    pub length: f64,
    /// Total mass (kg).
    pub mass: f64,
    pub link_length_fractions: [f64; 6],
    pub link_mass_fractions: [f64; 6],
    pub tip_mass_fraction: f64,
    pub link_radius: f64,
    pub tip_size: [f64; 3],
    pub axes: [Axis; 6],
    pub nominal: [f64; 6],
    pub lower: [f64; 6],
    pub upper: [f64; 6],
    /// Per-joint actuator torque limit (N·m).
    pub effort: [f64; 6],
}

impl TailSpec {
    pub fn widowx250s() -> Self {
        Self::from_str(WIDOWX250S_CFG).expect("embedded widowx250s.cfg is valid")
    }

    pub fn viperx300s() -> Self {
        Self::from_str(VIPERX300S_CFG).expect("embedded viperx300s.cfg is valid")
    }

    pub fn from_file(path: &Path) -> Result<Self, ModelError> {
        let spec: Self = config::from_table(config::load_tree(path)?)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.length > 0.0) {
            return Err(invalid("length", "must be positive"));
        }
        if !(self.mass > 0.0) {
            return Err(invalid("mass", "must be positive"));
        }
        if !(self.link_radius > 0.0) || self.effort.iter().any(|e| !(*e > 0.0)) {
            return Err(invalid("link_radius", "link radius and effort must be positive"));
        }
        if self.tip_size.iter().any(|s| !(*s > 0.0)) {
            return Err(invalid("tip_size", "must be positive"));
        }
        let lsum: f64 = self.link_length_fractions.iter().sum();
        if (lsum - 1.0).abs() > 1e-9 || self.link_length_fractions.iter().any(|f| !(*f > 0.0)) {
            return Err(invalid("link_length_fractions", "must be positive and sum to 1"));
        }
        let msum: f64 = self.link_mass_fractions.iter().sum::<f64>() + self.tip_mass_fraction;
        if (msum - 1.0).abs() > 1e-9
            || self.link_mass_fractions.iter().any(|f| !(*f > 0.0))
            || self.tip_mass_fraction < 0.0
        {
            return Err(invalid("link_mass_fractions", "link and tip mass fractions must sum to 1"));
        }
        for k in 0..6 {
            if !(self.lower[k] < self.upper[k]) {
                return Err(invalid("lower", "joint limits are not well ordered"));
            }
            if !(self.lower[k] <= self.nominal[k] && self.nominal[k] <= self.upper[k]) {
                return Err(invalid("nominal", "nominal pose outside joint limits"));
            }
        }
        Ok(())
    }
}

impl FromStr for TailSpec {
    type Err = ModelError;

    fn from_str(text: &str) -> Result<Self, ModelError> {
        let table = config::parse_str(text).map_err(|m| invalid("<root>", m))?;
        let spec: Self = config::from_table(table)?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RobotVariant {
    None,
    WidowX250S,
    ViperX300S,
}

impl RobotVariant {
    pub const ALL: [RobotVariant; 3] = [RobotVariant::None, RobotVariant::WidowX250S, RobotVariant::ViperX300S];

    pub fn tail_spec(self) -> Option<TailSpec> {
        match self {
            RobotVariant::None => None,
            RobotVariant::WidowX250S => Some(TailSpec::widowx250s()),
            RobotVariant::ViperX300S => Some(TailSpec::viperx300s()),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RobotVariant::None => "none",
            RobotVariant::WidowX250S => "widowx250s",
            RobotVariant::ViperX300S => "viperx300s",
        }
    }
}

impl fmt::Display for RobotVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RobotVariant {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "none" => Ok(RobotVariant::None),
            "widowx250s" => Ok(RobotVariant::WidowX250S),
            "viperx300s" => Ok(RobotVariant::ViperX300S),
            other => Err(invalid("robot", format!("unknown variant `{other}`"))),
        }
    }
}

fn revolute(
    name: String,
    parent: usize,
    axis: Vec3,
    origin: Vec3,
    inertia: SpatialInertia,
    lower: f64,
    upper: f64,
    effort: f64,
) -> Link {
    Link {
        name,
        parent: Some(parent),
        joint: JointKind::Revolute { axis },
        origin,
        rpy: Vec3::zeros(),
        inertia,
        limits: Some(JointLimits { lower, upper, effort }),
    }
}

/// Builds the kinematic tree: base, four 3-DoF legs (joints 0..12) and, when
/// given, a 6-DoF tail on the rear of the base (joints 12..18).
pub fn build_robot(quad: &QuadrupedSpec, tail: Option<&TailSpec>) -> Result<KinematicTree, ModelError> {
    quad.validate()?;
    if let Some(t) = tail {
        t.validate()?;
    }
    let size = Vec3::from(quad.base.size);
    let mut links = vec![Link {
        name: "base".into(),
        parent: None,
        joint: JointKind::Floating,
        origin: Vec3::zeros(),
        rpy: Vec3::zeros(),
        inertia: SpatialInertia::solid_box(quad.base.mass, Vec3::zeros(), size),
        limits: None,
    }];
    let mut markers = Vec::new();
    let l = &quad.legs;
    let down = -Vec3::z();
    for (k, leg) in LEG_NAMES.iter().enumerate() {
        let sx = if k < 2 { 1.0 } else { -1.0 };
        let sy = if k % 2 == 0 { 1.0 } else { -1.0 };
        let abd = links.len();
        links.push(revolute(
            format!("{leg}_abduction"),
            0,
            Vec3::x(),
            Vec3::new(sx * l.hip_x, sy * l.hip_y, 0.0),
            SpatialInertia::rod(l.link_masses[0], Vec3::new(0.0, sy * 0.5 * l.abduction_offset, 0.0), &Vec3::y(), l.abduction_offset, 0.03),
            l.lower[0],
            l.upper[0],
            l.effort,
        ));
        let thigh = links.len();
        links.push(revolute(
            format!("{leg}_hip"),
            abd,
            Vec3::y(),
            Vec3::new(0.0, sy * l.abduction_offset, 0.0),
            SpatialInertia::rod(l.link_masses[1], down * (0.5 * l.thigh_length), &Vec3::z(), l.thigh_length, l.link_radius),
            l.lower[1],
            l.upper[1],
            l.effort,
        ));
        let shank = links.len();
        links.push(revolute(
            format!("{leg}_knee"),
            thigh,
            Vec3::y(),
            down * l.thigh_length,
            SpatialInertia::rod(l.link_masses[2], down * (0.5 * l.shank_length), &Vec3::z(), l.shank_length, l.link_radius),
            l.lower[2],
            l.upper[2],
            l.effort,
        ));
        markers.push(Marker { name: format!("{leg}_foot"), link: shank, offset: down * l.shank_length, kind: MarkerKind::Foot });
        markers.push(Marker { name: format!("{leg}_knee"), link: shank, offset: Vec3::zeros(), kind: MarkerKind::Collision });
    }
    if let Some(t) = tail {
        let back = -Vec3::x();
        let mut parent = 0;
        let mut origin = Vec3::from(quad.tail_mount.offset);
        for k in 0..6 {
            let len = t.length * t.link_length_fractions[k];
            let mass = t.mass * t.link_mass_fractions[k];
            let mut inertia = SpatialInertia::rod(mass, back * (0.5 * len), &Vec3::x(), len, t.link_radius);
            if k == 5 && t.tip_mass_fraction > 0.0 {
                let tip = SpatialInertia::solid_box(t.mass * t.tip_mass_fraction, back * len, Vec3::from(t.tip_size));
                inertia = inertia.combine(&tip);
            }
            let idx = links.len();
            links.push(revolute(
                format!("tail_{}", k + 1),
                parent,
                t.axes[k].unit(),
                origin,
                inertia,
                t.lower[k],
                t.upper[k],
                t.effort[k],
            ));
            let end_kind = if k == 5 { MarkerKind::TailTip } else { MarkerKind::Collision };
            markers.push(Marker { name: format!("tail_{}_end", k + 1), link: idx, offset: back * len, kind: end_kind });
            if k == 5 {
                markers.push(Marker { name: "tail_tip_collision".into(), link: idx, offset: back * len, kind: MarkerKind::Collision });
            }
            parent = idx;
            origin = back * len;
        }
    }
    let boxes = vec![CollisionBox { link: 0, center: Vec3::zeros(), size }];
    let name = match tail {
        Some(t) => format!("{}+{}", quad.name, t.name),
        None => quad.name.clone(),
    };
    Ok(KinematicTree::new(name, links, markers, boxes)?)
}

/// Standing state: joints at nominal, base at the nominal height, at rest.
pub fn nominal_state(tree: &KinematicTree, quad: &QuadrupedSpec, tail: Option<&TailSpec>) -> SimState {
    let mut s = SimState::zeros(tree.num_joints());
    s.base_position = Vec3::new(0.0, 0.0, quad.nominal.height);
    s.base_orientation = UnitQuaternion::identity();
    let mut q = quad.nominal_joints();
    if let Some(t) = tail {
        q.extend_from_slice(&t.nominal);
    }
    s.joint_positions = q;
    s
}

/// A built robot variant with the data the environments need.
#[derive(Clone, Debug)]
pub struct Robot {
    pub variant: RobotVariant,
    pub quad: QuadrupedSpec,
    pub tail: Option<TailSpec>,
    pub tree: Arc<KinematicTree>,
    pub nominal_joints: Vec<f64>,
}

impl Robot {
    pub fn new(variant: RobotVariant) -> Result<Self, ModelError> {
        Self::from_specs(variant, QuadrupedSpec::minicheetah(), variant.tail_spec())
    }

    pub fn from_specs(variant: RobotVariant, quad: QuadrupedSpec, tail: Option<TailSpec>) -> Result<Self, ModelError> {
        let tree = Arc::new(build_robot(&quad, tail.as_ref())?);
        let nominal_joints = nominal_state(&tree, &quad, tail.as_ref()).joint_positions;
        Ok(Self { variant, quad, tail, tree, nominal_joints })
    }

    pub fn num_joints(&self) -> usize {
        self.tree.num_joints()
    }

    pub fn has_tail(&self) -> bool {
        self.tail.is_some()
    }

    pub fn tail_joints(&self) -> std::ops::Range<usize> {
        if self.has_tail() {
            LEG_JOINTS..LEG_JOINTS + TAIL_JOINTS
        } else {
            LEG_JOINTS..LEG_JOINTS
        }
    }

    pub fn nominal_state(&self) -> SimState {
        nominal_state(&self.tree, &self.quad, self.tail.as_ref())
    }

    pub fn nominal_height(&self) -> f64 {
        self.quad.nominal.height
    }

    /// Lower/upper joint limits and torque limits, per actuated joint.
    pub fn joint_limits(&self) -> Vec<JointLimits> {
        self.tree.joint_limits().into_iter().map(|l| l.expect("all robot joints carry limits")).collect()
    }
}

/// Rotational inertia of the tail links about the mount point, in the base
/// frame, for the robot's nominal pose.
pub fn tail_inertia_about_mount(robot: &Robot) -> Result<Mat3, ModelError> {
    let state = robot.nominal_state();
    let frames = forward_kinematics(&robot.tree, &state)?;
    let base_rot = frames.rotations[0];
    let mount = frames.point(0, &Vec3::from(robot.quad.tail_mount.offset));
    let mut total = Mat3::zeros();
    for (i, link) in robot.tree.links().iter().enumerate() {
        if !link.name.starts_with("tail_") {
            continue;
        }
        // Express each link relative to the mount, axes aligned with the base.
        let rot = base_rot.transpose() * frames.rotations[i];
        let trans = base_rot.transpose() * (frames.positions[i] - mount);
        total += link.inertia.transform(&rot, &trans).inertia_about_origin();
    }
    Ok(total)
}
