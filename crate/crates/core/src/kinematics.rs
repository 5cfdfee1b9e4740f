//! Kinematic trees, trigonometric and rational forward kinematics.
//!
//! Every movable joint owns one tangent-configuration variable `Var(i)`,
//! where `i` is the joint index: `t = tan(θ/2)` for revolute joints and the
//! displacement itself for prismatic joints. With that substitution a
//! revolute rotation is `R(t) = ((1+t²)I + 2tK + 2t²K²) / (1+t²)`, so link
//! poses are rational with denominators `∏(1+t_i²)`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::polyalg::{Polynomial, Var};
use crate::{Error, Result};

/// Index of the root link.
pub const WORLD: usize = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// Multi-degree-of-freedom joints that expand into revolute/prismatic chains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompositeKind {
    Cylindrical,
    Planar,
    Spherical,
}

/// Rigid transform `x ↦ R x + p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// Roll-pitch-yaw (extrinsic x, y, z) plus translation.
    pub fn from_xyz_rpy(xyz: [f64; 3], rpy: [f64; 3]) -> Self {
        let r = Rotation3::from_euler_angles(rpy[0], rpy[1], rpy[2]);
        Self::new(*r.matrix(), Vector3::from(xyz))
    }

    pub fn then(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn apply(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * x + self.translation
    }

    /// Homogeneous 4×4 form.
    pub fn to_homogeneous(&self) -> nalgebra::Matrix4<f64> {
        let mut m = nalgebra::Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    pub parent: usize,
    pub child: usize,
    /// Pose of the joint frame in the parent link frame.
    pub origin: Pose,
    /// Unit motion axis in the joint frame.
    pub axis: Vector3<f64>,
    pub lower: f64,
    pub upper: f64,
}

impl Joint {
    /// Motion transform at joint value `q`.
    pub fn motion(&self, q: f64) -> Pose {
        match self.kind {
            JointKind::Revolute => {
                let r = Rotation3::from_axis_angle(&Unit::new_normalize(self.axis), q);
                Pose::new(*r.matrix(), Vector3::zeros())
            }
            JointKind::Prismatic => Pose::new(Matrix3::identity(), self.axis * q),
        }
    }

    /// Pose of the child link in the parent link at joint value `q`.
    pub fn transform(&self, q: f64) -> Pose {
        self.origin.then(&self.motion(q))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite()) || self.lower > self.upper {
            return Err(Error::Model(format!(
                "joint `{}` limits [{}, {}] must be finite and ordered",
                self.name, self.lower, self.upper
            )));
        }
        if self.kind == JointKind::Revolute && (self.lower <= -PI || self.upper >= PI) {
            return Err(Error::Model(format!(
                "joint `{}` revolute limits [{}, {}] must lie strictly inside (-pi, pi)",
                self.name, self.lower, self.upper
            )));
        }
        if (self.axis.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Model(format!("joint `{}` axis is not a unit vector", self.name)));
        }
        Ok(())
    }
}

/// `t = tan(θ/2)` for `θ ∈ (−π, π)`.
pub fn stereographic(theta: f64) -> Result<f64> {
    if !(theta.abs() < PI) {
        return Err(Error::AngleDomain(theta));
    }
    Ok((theta / 2.0).tan())
}

pub fn inverse_stereographic(t: f64) -> f64 {
    2.0 * t.atan()
}

/// Joint expansion of a composite joint: kinds and axes in order.
pub fn expand_composite_joint(kind: CompositeKind) -> Vec<(JointKind, Vector3<f64>)> {
    use JointKind::*;
    match kind {
        CompositeKind::Cylindrical => vec![(Revolute, Vector3::z()), (Prismatic, Vector3::z())],
        CompositeKind::Planar => vec![
            (Prismatic, Vector3::x()),
            (Prismatic, Vector3::y()),
            (Revolute, Vector3::z()),
        ],
        CompositeKind::Spherical => vec![
            (Revolute, Vector3::z()),
            (Revolute, -Vector3::y()),
            (Revolute, Vector3::x()),
        ],
    }
}

/// Axis-aligned box `{s | s_l ≤ s ≤ s_u}` of tangent-space joint limits.
#[derive(Clone, Debug, PartialEq)]
pub struct TcLimits {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl TcLimits {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, s: &[f64], tol: f64) -> bool {
        s.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&l, &u))| v >= l - tol && v <= u + tol)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }
}

/// Pose whose entries are rational in the tangent variables with one
/// shared denominator.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalPose {
    pub rotation: [[Polynomial; 3]; 3],
    pub translation: [Polynomial; 3],
    pub den: Polynomial,
}

impl RationalPose {
    pub fn constant(p: &Pose) -> Self {
        Self {
            rotation: std::array::from_fn(|i| {
                std::array::from_fn(|j| Polynomial::constant(p.rotation[(i, j)]))
            }),
            translation: std::array::from_fn(|i| Polynomial::constant(p.translation[i])),
            den: Polynomial::one(),
        }
    }

    pub fn identity() -> Self {
        Self::constant(&Pose::identity())
    }

    /// Motion of `joint` in variable `v`; `reverse` yields the inverse motion.
    fn motion(joint: &Joint, v: Var, reverse: bool) -> Self {
        let sign = if reverse { -1.0 } else { 1.0 };
        match joint.kind {
            JointKind::Revolute => {
                let k = joint.axis.cross_matrix();
                let k2 = k * k;
                let t = Polynomial::var(v);
                let t2 = t.pow(2);
                let den = Polynomial::one().add(&t2);
                let rotation = std::array::from_fn(|i| {
                    std::array::from_fn(|j| {
                        let id = if i == j { den.clone() } else { Polynomial::zero() };
                        id.add(&t.scale(2.0 * sign * k[(i, j)]))
                            .add(&t2.scale(2.0 * k2[(i, j)]))
                    })
                });
                Self {
                    rotation,
                    translation: std::array::from_fn(|_| Polynomial::zero()),
                    den,
                }
            }
            JointKind::Prismatic => {
                let mut out = Self::identity();
                for i in 0..3 {
                    out.translation[i] = Polynomial::var(v).scale(sign * joint.axis[i]);
                }
                out
            }
        }
    }

    /// `self ∘ other`: pose of `other`'s frame composed after `self`.
    pub fn then(&self, other: &RationalPose) -> RationalPose {
        let rotation = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                (0..3).fold(Polynomial::zero(), |acc, k| {
                    acc.add(&self.rotation[i][k].mul(&other.rotation[k][j]))
                })
            })
        });
        let translation = std::array::from_fn(|i| {
            (0..3)
                .fold(Polynomial::zero(), |acc, k| {
                    acc.add(&self.rotation[i][k].mul(&other.translation[k]))
                })
                .add(&self.translation[i].mul(&other.den))
        });
        RationalPose {
            rotation,
            translation,
            den: self.den.mul(&other.den),
        }
    }

    /// Numeric pose at tangent coordinates `s` (indexed by variable id).
    pub fn eval(&self, s: &[f64]) -> Pose {
        let g = self.den.eval_slice(s);
        Pose::new(
            Matrix3::from_fn(|i, j| self.rotation[i][j].eval_slice(s) / g),
            Vector3::from_fn(|i, _| self.translation[i].eval_slice(s) / g),
        )
    }

    /// Numerators `f(s)` of a body-frame point: `R_num·x + p_num`.
    pub fn point_numerator(&self, x: &Vector3<f64>) -> [Polynomial; 3] {
        std::array::from_fn(|i| {
            let mut p = self.translation[i].clone();
            for k in 0..3 {
                if x[k] != 0.0 {
                    p = p.add(&self.rotation[i][k].scale(x[k]));
                }
            }
            p
        })
    }

    pub fn vars(&self) -> std::collections::BTreeSet<Var> {
        let mut out = self.den.vars();
        for row in &self.rotation {
            for e in row {
                out.extend(e.vars());
            }
        }
        for e in &self.translation {
            out.extend(e.vars());
        }
        out
    }
}

/// A tree of links connected by single-DOF joints, rooted at `world`.
#[derive(Clone, Debug, PartialEq)]
pub struct KinematicTree {
    links: Vec<String>,
    joints: Vec<Joint>,
    parent_joint: Vec<Option<usize>>,
}

impl Default for KinematicTree {
    fn default() -> Self {
        Self::new()
    }
}

impl KinematicTree {
    pub fn new() -> Self {
        Self {
            links: vec!["world".to_string()],
            joints: Vec::new(),
            parent_joint: vec![None],
        }
    }

    pub fn links(&self) -> &[String] {
        &self.links
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    /// Number of tangent-space variables.
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn link_index(&self, name: &str) -> Result<usize> {
        self.links
            .iter()
            .position(|l| l == name)
            .ok_or_else(|| Error::UnknownFrame(name.to_string()))
    }

    fn ensure_link(&mut self, name: &str) -> usize {
        match self.links.iter().position(|l| l == name) {
            Some(i) => i,
            None => {
                self.links.push(name.to_string());
                self.parent_joint.push(None);
                self.links.len() - 1
            }
        }
    }

    /// Adds a joint from an existing `parent` link to a new `child` link.
    #[allow(clippy::too_many_arguments)]
    pub fn add_joint(
        &mut self,
        name: &str,
        kind: JointKind,
        parent: &str,
        child: &str,
        origin: Pose,
        axis: Vector3<f64>,
        limits: (f64, f64),
    ) -> Result<usize> {
        let parent = self.link_index(parent)?;
        if self.links.iter().any(|l| l == child) {
            return Err(Error::Model(format!("link `{child}` already has a parent joint")));
        }
        if self.joints.iter().any(|j| j.name == name) {
            return Err(Error::Model(format!("duplicate joint name `{name}`")));
        }
        let axis = if axis.norm() > 0.0 { axis.normalize() } else { axis };
        let joint = Joint {
            name: name.to_string(),
            kind,
            parent,
            child: 0,
            origin,
            axis,
            lower: limits.0,
            upper: limits.1,
        };
        joint.validate()?;
        let child = self.ensure_link(child);
        self.joints.push(Joint { child, ..joint });
        self.parent_joint[child] = Some(self.joints.len() - 1);
        Ok(self.joints.len() - 1)
    }

    /// Adds a composite joint as a chain of single-DOF joints through
    /// intermediate links named `{name}/{k}`. Returns the joint indices.
    pub fn add_composite_joint(
        &mut self,
        name: &str,
        kind: CompositeKind,
        parent: &str,
        child: &str,
        origin: Pose,
        limits: &[(f64, f64)],
    ) -> Result<Vec<usize>> {
        let parts = expand_composite_joint(kind);
        if limits.len() != parts.len() {
            return Err(Error::Model(format!(
                "composite joint `{name}` needs {} limit pairs, found {}",
                parts.len(),
                limits.len()
            )));
        }
        let mut ids = Vec::new();
        let mut prev = parent.to_string();
        for (k, ((jk, axis), lim)) in parts.into_iter().zip(limits).enumerate() {
            let last = k + 1 == limits.len();
            let next = if last { child.to_string() } else { format!("{name}/{k}") };
            let o = if k == 0 { origin } else { Pose::identity() };
            ids.push(self.add_joint(&format!("{name}.{k}"), jk, &prev, &next, o, axis, *lim)?);
            prev = next;
        }
        Ok(ids)
    }

    pub fn var(&self, joint: usize) -> Var {
        Var(joint as u32)
    }

    pub fn tc_limits(&self) -> TcLimits {
        let conv = |j: &Joint, q: f64| match j.kind {
            JointKind::Revolute => (q / 2.0).tan(),
            JointKind::Prismatic => q,
        };
        TcLimits {
            lower: self.joints.iter().map(|j| conv(j, j.lower)).collect(),
            upper: self.joints.iter().map(|j| conv(j, j.upper)).collect(),
        }
    }

    /// Joint values to tangent coordinates.
    pub fn to_tc(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(q.len())?;
        self.joints
            .iter()
            .zip(q)
            .map(|(j, &v)| match j.kind {
                JointKind::Revolute => stereographic(v),
                JointKind::Prismatic => Ok(v),
            })
            .collect()
    }

    /// Tangent coordinates to joint values.
    pub fn from_tc(&self, s: &[f64]) -> Vec<f64> {
        self.joints
            .iter()
            .zip(s)
            .map(|(j, &v)| match j.kind {
                JointKind::Revolute => inverse_stereographic(v),
                JointKind::Prismatic => v,
            })
            .collect()
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dof() {
            return Err(Error::Dimension {
                expected: self.dof(),
                found: n,
            });
        }
        Ok(())
    }

    /// Links from `link` up to the root, inclusive.
    fn ancestors(&self, link: usize) -> Vec<usize> {
        let mut out = vec![link];
        let mut cur = link;
        while let Some(j) = self.parent_joint[cur] {
            cur = self.joints[j].parent;
            out.push(cur);
        }
        out
    }

    /// Link sequence from `a` to `b` through their lowest common ancestor.
    pub fn link_path(&self, a: usize, b: usize) -> Vec<usize> {
        let up_a = self.ancestors(a);
        let up_b = self.ancestors(b);
        let lca = *up_a.iter().find(|l| up_b.contains(l)).expect("tree is connected");
        let mut path: Vec<usize> = up_a.iter().copied().take_while(|&l| l != lca).collect();
        path.push(lca);
        let down: Vec<usize> = up_b.iter().copied().take_while(|&l| l != lca).collect();
        path.extend(down.into_iter().rev());
        path
    }

    /// Joints crossed on the way from `frame` to `link`, with a flag that is
    /// `true` when the joint is crossed child-to-parent.
    fn joint_path(&self, frame: usize, link: usize) -> Vec<(usize, bool)> {
        let path = self.link_path(frame, link);
        path.windows(2)
            .map(|w| match self.parent_joint[w[0]] {
                Some(j) if self.joints[j].parent == w[1] => (j, true),
                _ => (self.parent_joint[w[1]].expect("child has a joint"), false),
            })
            .collect()
    }

    /// Joint indices on the path between two links.
    pub fn joints_between(&self, a: usize, b: usize) -> Vec<usize> {
        self.joint_path(a, b).into_iter().map(|(j, _)| j).collect()
    }

    /// Numeric pose of `link` in `frame` at joint values `q`.
    pub fn trig_fk(&self, q: &[f64], frame: usize, link: usize) -> Result<Pose> {
        self.check_dim(q.len())?;
        self.check_link(frame)?;
        self.check_link(link)?;
        Ok(self.trig_fk_unchecked(q, frame, link))
    }

    pub(crate) fn trig_fk_unchecked(&self, q: &[f64], frame: usize, link: usize) -> Pose {
        let mut pose = Pose::identity();
        for (j, up) in self.joint_path(frame, link) {
            let t = self.joints[j].transform(q[j]);
            pose = pose.then(&if up { t.inverse() } else { t });
        }
        pose
    }

    /// Numeric pose from tangent coordinates.
    pub fn tc_fk(&self, s: &[f64], frame: usize, link: usize) -> Pose {
        self.trig_fk_unchecked(&self.from_tc(s), frame, link)
    }

    /// Rational pose of `link` in `frame`.
    pub fn rational_fk(&self, frame: usize, link: usize) -> Result<RationalPose> {
        self.check_link(frame)?;
        self.check_link(link)?;
        let mut pose = RationalPose::identity();
        for (j, up) in self.joint_path(frame, link) {
            let joint = &self.joints[j];
            let v = self.var(j);
            if up {
                pose = pose
                    .then(&RationalPose::motion(joint, v, true))
                    .then(&RationalPose::constant(&joint.origin.inverse()));
            } else {
                pose = pose
                    .then(&RationalPose::constant(&joint.origin))
                    .then(&RationalPose::motion(joint, v, false));
            }
        }
        Ok(pose)
    }

    fn check_link(&self, l: usize) -> Result<()> {
        if l >= self.links.len() {
            return Err(Error::UnknownFrame(format!("#{l}")));
        }
        Ok(())
    }

    /// Link on the `a`–`b` path that splits its joints most evenly; ties go
    /// to the link nearer `a`.
    pub fn select_expressed_frame(&self, a: usize, b: usize) -> usize {
        let path = self.link_path(a, b);
        let n = path.len() - 1;
        let j = (0..=n).min_by_key(|&j| j.max(n - j)).unwrap_or(0);
        path[j]
    }
}
