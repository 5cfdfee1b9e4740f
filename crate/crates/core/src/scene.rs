use std::fmt;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::certifier::{CertifyOptions, PlaneVars};
use crate::geometry::{gjk, ConvexBody, Shape};
use crate::kinematics::{CompositeKind, JointKind, KinematicTree, Pose, WORLD};
use crate::{Error, Result};

/// A parse or validation problem located in the scene text.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneIssue {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for SceneIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}, {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

/// Robot, bodies and pair exclusions.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub name: String,
    pub tree: KinematicTree,
    pub bodies: Vec<ConvexBody>,
    /// Excluded pairs, by body or link name.
    pub exclusions: Vec<(String, String)>,
    /// Seed configurations in joint space.
    pub seeds: Vec<Vec<f64>>,
    pub options: SceneOptions,
}

/// Certificate settings stored with a scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneOptions {
    pub plane_degree: u32,
    pub basis_degree: u32,
    pub plane_vars: PlaneVars,
    pub escalate: bool,
}

impl Default for SceneOptions {
    fn default() -> Self {
        let c = CertifyOptions::default();
        Self {
            plane_degree: c.plane_degree,
            basis_degree: c.basis_degree,
            plane_vars: c.plane_vars,
            escalate: c.escalate,
        }
    }
}

impl SceneOptions {
    pub fn certify_options(&self) -> CertifyOptions {
        CertifyOptions {
            plane_degree: self.plane_degree,
            basis_degree: self.basis_degree,
            plane_vars: self.plane_vars,
            escalate: self.escalate,
            ..Default::default()
        }
    }
}

impl Scene {
    pub fn new(name: &str, tree: KinematicTree) -> Self {
        Self {
            name: name.to_string(),
            tree,
            bodies: Vec::new(),
            exclusions: Vec::new(),
            seeds: Vec::new(),
            options: SceneOptions::default(),
        }
    }

    pub fn add_body(&mut self, name: &str, link: &str, shape: Shape) -> Result<usize> {
        shape.validate()?;
        if self.bodies.iter().any(|b| b.name == name) {
            return Err(Error::Model(format!("duplicate body name `{name}`")));
        }
        let link = self.tree.link_index(link)?;
        self.bodies.push(ConvexBody {
            name: name.to_string(),
            link,
            shape,
        });
        Ok(self.bodies.len() - 1)
    }

    pub fn exclude(&mut self, a: &str, b: &str) {
        self.exclusions.push((a.to_string(), b.to_string()));
    }

    /// True if the pair of bodies is excluded by name or by link name.
    pub fn is_excluded(&self, a: usize, b: usize) -> bool {
        let names = |i: usize| {
            let body = &self.bodies[i];
            [body.name.as_str(), self.tree.links()[body.link].as_str()]
        };
        let (na, nb) = (names(a), names(b));
        self.exclusions.iter().any(|(x, y)| {
            (na.contains(&x.as_str()) && nb.contains(&y.as_str()))
                || (na.contains(&y.as_str()) && nb.contains(&x.as_str()))
        })
    }

    pub fn dof(&self) -> usize {
        self.tree.dof()
    }

    /// Smallest distance between any two checked bodies at `s`, zero when
    /// some pair intersects. Infinite when there are no pairs.
    pub fn clearance(&self, s: &[f64], pairs: &[(usize, usize)]) -> f64 {
        let posed: Vec<Option<Shape>> = {
            let mut cache = vec![None; self.bodies.len()];
            for &(a, b) in pairs {
                for i in [a, b] {
                    if cache[i].is_none() {
                        cache[i] = Some(self.bodies[i].posed(&self.tree, s, WORLD));
                    }
                }
            }
            cache
        };
        let mut best = f64::INFINITY;
        for &(a, b) in pairs {
            let (Some(sa), Some(sb)) = (&posed[a], &posed[b]) else { continue };
            best = best.min(gjk::distance(sa, sb).distance);
            if best == 0.0 {
                break;
            }
        }
        best
    }

    /// Indices of body pairs on distinct links that are not excluded.
    pub fn checked_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.bodies.len() {
            for b in a + 1..self.bodies.len() {
                if self.bodies[a].link != self.bodies[b].link && !self.is_excluded(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// True if the configuration `s` collides under the GJK oracle.
    pub fn in_collision(&self, s: &[f64]) -> bool {
        self.clearance(s, &self.checked_pairs()) <= 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum JointSpecKind {
    Revolute,
    Prismatic,
    Cylindrical,
    Planar,
    Spherical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum LimitSpec {
    Single([f64; 2]),
    Multi(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointSpec {
    name: String,
    kind: JointSpecKind,
    parent: String,
    child: String,
    /// Joint frame translation in the parent link, meters.
    #[serde(default)]
    xyz: [f64; 3],
    /// Extrinsic roll, pitch, yaw in radians; ignored when `rotation` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rpy: Option<[f64; 3]>,
    /// Row-major rotation matrix of the joint frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rotation: Option<[[f64; 3]; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axis: Option<[f64; 3]>,
    /// Radians for revolute joints, meters for prismatic ones.
    limits: LimitSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct BodySpec {
    name: String,
    link: String,
    #[serde(flatten)]
    shape: Shape,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    name: String,
    #[serde(default)]
    joints: Vec<Spanned<JointSpec>>,
    #[serde(default)]
    bodies: Vec<Spanned<BodySpec>>,
    #[serde(default)]
    exclude: Vec<Spanned<[String; 2]>>,
    #[serde(default)]
    seeds: Vec<Spanned<Vec<f64>>>,
    #[serde(default)]
    options: SceneOptions,
}

#[derive(Serialize)]
struct SceneFile<'a> {
    name: &'a str,
    options: &'a SceneOptions,
    seeds: &'a [Vec<f64>],
    exclude: Vec<[&'a str; 2]>,
    joints: Vec<JointSpec>,
    bodies: Vec<BodySpec>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Reads and validates a scene file.
pub fn parse_scene(path: impl AsRef<Path>) -> Result<Scene> {
    parse_scene_str(&std::fs::read_to_string(path)?)
}

/// Parses scene text, collecting every parse or validation issue.
pub fn parse_scene_str(text: &str) -> Result<Scene> {
    let raw: RawScene = toml::from_str(text).map_err(|e| {
        Error::Scene(vec![SceneIssue {
            line: e.span().map(|r| line_of(text, r.start)),
            field: "toml".into(),
            message: e.message().trim().to_string(),
        }])
    })?;
    let mut issues = Vec::new();
    let mut issue = |span: std::ops::Range<usize>, field: String, message: String| {
        issues.push(SceneIssue { line: Some(line_of(text, span.start)), field, message });
    };
    let mut tree = KinematicTree::new();
    for (i, spanned) in raw.joints.iter().enumerate() {
        let j = spanned.get_ref();
        if tree.link_index(&j.parent).is_err() {
            issue(spanned.span(), format!("joints[{i}].parent"), format!("unknown link `{}`", j.parent));
            continue;
        }
        let rotation = match (j.rotation, j.rpy) {
            (Some(r), _) => Matrix3::from_fn(|a, b| r[a][b]),
            (None, rpy) => Pose::from_xyz_rpy(j.xyz, rpy.unwrap_or_default()).rotation,
        };
        if (rotation.transpose() * rotation - Matrix3::identity()).amax() > 1e-9 || rotation.determinant() < 0.0 {
            issue(spanned.span(), format!("joints[{i}].rotation"), "not a proper rotation".into());
            continue;
        }
        let origin = Pose::new(rotation, Vector3::from(j.xyz));
        let composite = match j.kind {
            JointSpecKind::Revolute | JointSpecKind::Prismatic => None,
            JointSpecKind::Cylindrical => Some(CompositeKind::Cylindrical),
            JointSpecKind::Planar => Some(CompositeKind::Planar),
            JointSpecKind::Spherical => Some(CompositeKind::Spherical),
        };
        let added = match (composite, &j.limits) {
            (None, LimitSpec::Single(l)) => {
                let kind = if j.kind == JointSpecKind::Revolute { JointKind::Revolute } else { JointKind::Prismatic };
                let axis = Vector3::from(j.axis.unwrap_or([0.0, 0.0, 1.0]));
                if axis.norm() < 1e-12 {
                    issue(spanned.span(), format!("joints[{i}].axis"), "axis must be nonzero".into());
                    continue;
                }
                tree.add_joint(&j.name, kind, &j.parent, &j.child, origin, axis, (l[0], l[1])).map(|_| ())
            }
            (Some(kind), LimitSpec::Multi(l)) => {
                let lims: Vec<(f64, f64)> = l.iter().map(|p| (p[0], p[1])).collect();
                tree.add_composite_joint(&j.name, kind, &j.parent, &j.child, origin, &lims).map(|_| ())
            }
            (None, LimitSpec::Multi(_)) => Err(Error::Model("single-axis joint needs one [lower, upper] pair".into())),
            (Some(_), LimitSpec::Single(_)) => Err(Error::Model("composite joint needs a list of limit pairs".into())),
        };
        if let Err(e) = added {
            let msg = e.to_string();
            let field = if msg.contains("limit") { "limits" } else { "name" };
            issue(spanned.span(), format!("joints[{i}].{field}"), msg);
        }
    }
    let mut scene = Scene::new(&raw.name, tree);
    scene.options = raw.options;
    for (i, spanned) in raw.bodies.iter().enumerate() {
        let b = spanned.get_ref();
        if scene.tree.link_index(&b.link).is_err() {
            issue(spanned.span(), format!("bodies[{i}].link"), format!("unknown link `{}`", b.link));
            continue;
        }
        if let Err(e) = scene.add_body(&b.name, &b.link, b.shape.clone()) {
            issue(spanned.span(), format!("bodies[{i}]"), e.to_string());
        }
    }
    for (i, spanned) in raw.exclude.iter().enumerate() {
        for name in spanned.get_ref() {
            let known = scene.bodies.iter().any(|b| &b.name == name) || scene.tree.link_index(name).is_ok();
            if !known {
                issue(spanned.span(), format!("exclude[{i}]"), format!("unknown body or link `{name}`"));
            }
        }
        let [a, b] = spanned.get_ref();
        scene.exclude(a, b);
    }
    for (i, spanned) in raw.seeds.iter().enumerate() {
        let q = spanned.get_ref();
        if q.len() != scene.dof() {
            issue(spanned.span(), format!("seeds[{i}]"), format!("expected {} values, found {}", scene.dof(), q.len()));
            continue;
        }
        let inside = scene.tree.joints().iter().zip(q).all(|(j, &v)| v >= j.lower && v <= j.upper);
        if !inside {
            issue(spanned.span(), format!("seeds[{i}]"), "outside the joint limits".into());
            continue;
        }
        scene.seeds.push(q.clone());
    }
    if issues.is_empty() {
        Ok(scene)
    } else {
        Err(Error::Scene(issues))
    }
}

impl Scene {
    /// Scene text that parses back to an identical model. Composite joints
    /// are written in expanded form.
    pub fn to_toml(&self) -> String {
        let links = self.tree.links();
        let joints = self
            .tree
            .joints()
            .iter()
            .map(|j| {
                let r = j.origin.rotation;
                JointSpec {
                    name: j.name.clone(),
                    kind: match j.kind {
                        JointKind::Revolute => JointSpecKind::Revolute,
                        JointKind::Prismatic => JointSpecKind::Prismatic,
                    },
                    parent: links[j.parent].clone(),
                    child: links[j.child].clone(),
                    xyz: j.origin.translation.into(),
                    rpy: None,
                    rotation: Some([0, 1, 2].map(|a| [0, 1, 2].map(|b| r[(a, b)]))),
                    axis: Some(j.axis.into()),
                    limits: LimitSpec::Single([j.lower, j.upper]),
                }
            })
            .collect();
        let bodies = self
            .bodies
            .iter()
            .map(|b| BodySpec { name: b.name.clone(), link: links[b.link].clone(), shape: b.shape.clone() })
            .collect();
        let file = SceneFile {
            name: &self.name,
            options: &self.options,
            seeds: &self.seeds,
            exclude: self.exclusions.iter().map(|(a, b)| [a.as_str(), b.as_str()]).collect(),
            joints,
            bodies,
        };
        toml::to_string(&file).expect("scene model serializes")
    }
}
