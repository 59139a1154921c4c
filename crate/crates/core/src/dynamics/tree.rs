//! Kinematic tree description and its on-disk format.

use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::config::{self, ConfigError};
use crate::math::{Mat3, SpatialInertia, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JointKind {
    /// Unactuated 6-DoF joint to the world. Root only.
    Floating,
    /// Root welded to the world at the link's origin. Root only.
    Fixed,
    Revolute { axis: Vec3 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub lower: f64,
    pub upper: f64,
    /// Actuator torque limit (N m).
    pub effort: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub name: String,
    pub parent: Option<usize>,
    pub joint: JointKind,
    /// Joint frame position in the parent link frame.
    pub origin: Vec3,
    /// Joint frame orientation in the parent link frame (roll, pitch, yaw).
    pub rpy: Vec3,
    pub inertia: SpatialInertia,
    pub limits: Option<JointLimits>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerKind {
    Foot,
    TailTip,
    /// A point that counts as a body collision when it goes below the ground.
    Collision,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Marker {
    pub name: String,
    pub link: usize,
    pub offset: Vec3,
    pub kind: MarkerKind,
}

/// Axis-aligned box in a link frame, used for ground-collision detection only.
#[derive(Clone, Debug, PartialEq)]
pub struct CollisionBox {
    pub link: usize,
    pub center: Vec3,
    pub size: Vec3,
}

impl CollisionBox {
    pub fn corners(&self) -> [Vec3; 8] {
        let h = self.size * 0.5;
        let mut out = [Vec3::zeros(); 8];
        for (i, c) in out.iter_mut().enumerate() {
            let sx = if i & 1 == 0 { -1.0 } else { 1.0 };
            let sy = if i & 2 == 0 { -1.0 } else { 1.0 };
            let sz = if i & 4 == 0 { -1.0 } else { 1.0 };
            *c = self.center + Vec3::new(sx * h.x, sy * h.y, sz * h.z);
        }
        out
    }
}

/// Topologically ordered tree of rigid links with one root joint to the world.
#[derive(Clone, Debug)]
pub struct KinematicTree {
    pub name: String,
    links: Vec<Link>,
    markers: Vec<Marker>,
    collision_boxes: Vec<CollisionBox>,
    rotations: Vec<Mat3>,
    base_dofs: usize,
    joint_links: Vec<usize>,
    velocity_index: Vec<Option<usize>>,
    support: Vec<Vec<usize>>,
}

impl KinematicTree {
    pub fn new(
        name: impl Into<String>,
        links: Vec<Link>,
        markers: Vec<Marker>,
        collision_boxes: Vec<CollisionBox>,
    ) -> Result<Self, DynamicsError> {
        let invalid = |m: String| Err(DynamicsError::InvalidTree(m));
        let Some(root) = links.first() else {
            return invalid("tree has no links".into());
        };
        if root.parent.is_some() || !matches!(root.joint, JointKind::Floating | JointKind::Fixed) {
            return invalid("link 0 must be a floating or fixed root".into());
        }
        let base_dofs = if root.joint == JointKind::Floating { 6 } else { 0 };

        let mut joint_links = Vec::new();
        let mut velocity_index = vec![None; links.len()];
        let mut support: Vec<Vec<usize>> = Vec::with_capacity(links.len());
        for (i, link) in links.iter().enumerate() {
            link.inertia
                .validate()
                .map_err(|e| DynamicsError::InvalidTree(format!("link `{}`: {e}", link.name)))?;
            if i == 0 {
                support.push((0..base_dofs).collect());
                continue;
            }
            let Some(p) = link.parent.filter(|p| *p < i) else {
                return invalid(format!("link `{}` must have a parent listed before it", link.name));
            };
            let JointKind::Revolute { axis } = link.joint else {
                return invalid(format!("link `{}`: only the root may be floating or fixed", link.name));
            };
            if (axis.norm() - 1.0).abs() > 1e-9 {
                return invalid(format!("link `{}`: joint axis is not unit length", link.name));
            }
            if let Some(l) = link.limits {
                if !(l.lower < l.upper) || !(l.effort > 0.0) {
                    return invalid(format!("link `{}`: joint limits are not well ordered", link.name));
                }
            }
            let v = base_dofs + joint_links.len();
            joint_links.push(i);
            velocity_index[i] = Some(v);
            let mut s = support[p].clone();
            s.push(v);
            support.push(s);
        }
        for m in &markers {
            if m.link >= links.len() {
                return invalid(format!("marker `{}` refers to a missing link", m.name));
            }
        }
        for b in &collision_boxes {
            if b.link >= links.len() || b.size.iter().any(|s| !(*s > 0.0)) {
                return invalid("collision box is malformed".into());
            }
        }
        let rotations = links
            .iter()
            .map(|l| *Rotation3::from_euler_angles(l.rpy.x, l.rpy.y, l.rpy.z).matrix())
            .collect();
        Ok(Self {
            name: name.into(),
            links,
            markers,
            collision_boxes,
            rotations,
            base_dofs,
            joint_links,
            velocity_index,
            support,
        })
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn markers(&self) -> &[Marker] {
        &self.markers
    }

    pub fn collision_boxes(&self) -> &[CollisionBox] {
        &self.collision_boxes
    }

    pub fn is_floating(&self) -> bool {
        self.base_dofs == 6
    }

    /// 6 for a floating root, 0 for a fixed one.
    pub fn base_dofs(&self) -> usize {
        self.base_dofs
    }

    /// Number of actuated revolute joints.
    pub fn num_joints(&self) -> usize {
        self.joint_links.len()
    }

    /// Size of the generalized velocity vector.
    pub fn num_velocities(&self) -> usize {
        self.base_dofs + self.joint_links.len()
    }

    /// Link carrying the `j`-th actuated joint.
    pub fn joint_link(&self, j: usize) -> usize {
        self.joint_links[j]
    }

    pub(crate) fn joint_rotation(&self, link: usize) -> &Mat3 {
        &self.rotations[link]
    }

    pub(crate) fn velocity_index(&self, link: usize) -> Option<usize> {
        self.velocity_index[link]
    }

    /// Velocity indices that move `link`, root first.
    pub fn support(&self, link: usize) -> &[usize] {
        &self.support[link]
    }

    pub fn joint_limits(&self) -> Vec<Option<JointLimits>> {
        self.joint_links.iter().map(|l| self.links[*l].limits).collect()
    }

    pub fn joint_names(&self) -> Vec<&str> {
        self.joint_links.iter().map(|l| self.links[*l].name.as_str()).collect()
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    pub fn total_mass(&self) -> f64 {
        self.links.iter().map(|l| l.inertia.mass).sum()
    }

    pub fn feet(&self) -> impl Iterator<Item = &Marker> {
        self.markers.iter().filter(|m| m.kind == MarkerKind::Foot)
    }

    pub fn num_feet(&self) -> usize {
        self.feet().count()
    }

    pub fn is_ancestor_or_self(&self, ancestor: usize, mut link: usize) -> bool {
        loop {
            if link == ancestor {
                return true;
            }
            match self.links[link].parent {
                Some(p) => link = p,
                None => return false,
            }
        }
    }

    pub fn from_config_str(text: &str) -> Result<Self, DynamicsError> {
        let table = config::parse_str(text).map_err(|m| DynamicsError::Config(ConfigError::invalid("<root>", m)))?;
        let file: TreeFile = config::from_table(table)?;
        file.build()
    }

    pub fn to_config_string(&self) -> Result<String, DynamicsError> {
        Ok(config::to_string(&TreeFile::from_tree(self))?)
    }
}

/// On-disk form of a [`KinematicTree`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeFile {
    pub name: String,
    pub links: Vec<LinkEntry>,
    #[serde(default)]
    pub markers: Vec<MarkerEntry>,
    #[serde(default)]
    pub collision_boxes: Vec<BoxEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointType {
    Floating,
    Fixed,
    Revolute,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    pub joint: JointType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<[f64; 3]>,
    #[serde(default)]
    pub origin: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
    pub mass: f64,
    #[serde(default)]
    pub com: [f64; 3],
    /// `[ixx, iyy, izz, ixy, ixz, iyz]` about the center of mass.
    pub inertia: [f64; 6],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<JointLimits>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkerEntry {
    pub name: String,
    pub link: String,
    pub offset: [f64; 3],
    pub kind: MarkerKind,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxEntry {
    pub link: String,
    #[serde(default)]
    pub center: [f64; 3],
    pub size: [f64; 3],
}

fn inertia_matrix(i: &[f64; 6]) -> Mat3 {
    Mat3::new(i[0], i[3], i[4], i[3], i[1], i[5], i[4], i[5], i[2])
}

impl TreeFile {
    pub fn build(&self) -> Result<KinematicTree, DynamicsError> {
        let find = |name: &str, what: &str| {
            self.links
                .iter()
                .position(|l| l.name == name)
                .ok_or_else(|| DynamicsError::InvalidTree(format!("{what} refers to unknown link `{name}`")))
        };
        let mut links = Vec::with_capacity(self.links.len());
        for e in &self.links {
            let parent = e.parent.as_deref().map(|p| find(p, &e.name)).transpose()?;
            let joint = match e.joint {
                JointType::Floating => JointKind::Floating,
                JointType::Fixed => JointKind::Fixed,
                JointType::Revolute => {
                    let a = e.axis.ok_or_else(|| {
                        DynamicsError::InvalidTree(format!("revolute link `{}` needs an axis", e.name))
                    })?;
                    JointKind::Revolute { axis: Vec3::from(a) }
                }
            };
            let inertia = SpatialInertia::new(e.mass, Vec3::from(e.com), inertia_matrix(&e.inertia))
                .map_err(|err| DynamicsError::InvalidTree(format!("link `{}`: {err}", e.name)))?;
            links.push(Link {
                name: e.name.clone(),
                parent,
                joint,
                origin: Vec3::from(e.origin),
                rpy: Vec3::from(e.rpy),
                inertia,
                limits: e.limits,
            });
        }
        let markers = self
            .markers
            .iter()
            .map(|m| {
                Ok(Marker { name: m.name.clone(), link: find(&m.link, &m.name)?, offset: Vec3::from(m.offset), kind: m.kind })
            })
            .collect::<Result<_, DynamicsError>>()?;
        let boxes = self
            .collision_boxes
            .iter()
            .map(|b| Ok(CollisionBox { link: find(&b.link, "collision box")?, center: Vec3::from(b.center), size: Vec3::from(b.size) }))
            .collect::<Result<_, DynamicsError>>()?;
        KinematicTree::new(self.name.clone(), links, markers, boxes)
    }

    pub fn from_tree(tree: &KinematicTree) -> Self {
        let arr = |v: &Vec3| [v.x, v.y, v.z];
        let links = tree
            .links
            .iter()
            .map(|l| {
                let i = &l.inertia.inertia;
                LinkEntry {
                    name: l.name.clone(),
                    parent: l.parent.map(|p| tree.links[p].name.clone()),
                    joint: match l.joint {
                        JointKind::Floating => JointType::Floating,
                        JointKind::Fixed => JointType::Fixed,
                        JointKind::Revolute { .. } => JointType::Revolute,
                    },
                    axis: match l.joint {
                        JointKind::Revolute { axis } => Some(arr(&axis)),
                        _ => None,
                    },
                    origin: arr(&l.origin),
                    rpy: arr(&l.rpy),
                    mass: l.inertia.mass,
                    com: arr(&l.inertia.com),
                    inertia: [i[(0, 0)], i[(1, 1)], i[(2, 2)], i[(0, 1)], i[(0, 2)], i[(1, 2)]],
                    limits: l.limits,
                }
            })
            .collect();
        let markers = tree
            .markers
            .iter()
            .map(|m| MarkerEntry {
                name: m.name.clone(),
                link: tree.links[m.link].name.clone(),
                offset: arr(&m.offset),
                kind: m.kind,
            })
            .collect();
        let collision_boxes = tree
            .collision_boxes
            .iter()
            .map(|b| BoxEntry { link: tree.links[b.link].name.clone(), center: arr(&b.center), size: arr(&b.size) })
            .collect();
        Self { name: tree.name.clone(), links, markers, collision_boxes }
    }
}
