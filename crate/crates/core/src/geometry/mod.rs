//! Convex collision bodies and the conditions attached to them: plane-side
//! conditions parametrized by the tangent configuration, semialgebraic
//! membership, and fixed-configuration separation programs.

mod fixed;
pub mod gjk;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

pub use fixed::{fixed_intersection_point, fixed_separating_plane, FIXED_MARGIN_TOL};

use crate::kinematics::{KinematicTree, Pose, RationalPose};
use crate::polyalg::{Coefficient, Poly, Polynomial, Var};
use crate::soscomp::{min_eigenvalue, LinExpr};
use crate::{Error, Result};

/// Default inflation of sphere, capsule and cylinder radii in plane-side
/// conditions, making the separation strict.
pub const DEFAULT_RADIUS_EPS: f64 = 1e-6;

/// Geometry of a convex body, in the coordinates of some frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    Polytope {
        vertices: Vec<Vector3<f64>>,
    },
    Sphere {
        center: Vector3<f64>,
        radius: f64,
    },
    /// Convex hull of two spheres.
    Capsule {
        p1: Vector3<f64>,
        p2: Vector3<f64>,
        r1: f64,
        r2: f64,
    },
    /// Frustum between two disks perpendicular to `p1 − p2`.
    Cylinder {
        p1: Vector3<f64>,
        p2: Vector3<f64>,
        r1: f64,
        r2: f64,
    },
}

impl Shape {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Shape::Polytope { .. } => "polytope",
            Shape::Sphere { .. } => "sphere",
            Shape::Capsule { .. } => "capsule",
            Shape::Cylinder { .. } => "cylinder",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &Vector3<f64>| v.iter().all(|x| x.is_finite());
        let bad = |m: &str| Err(Error::Model(m.to_string()));
        match self {
            Shape::Polytope { vertices } => {
                if vertices.is_empty() {
                    return bad("polytope needs at least one vertex");
                }
                if !vertices.iter().all(finite) {
                    return bad("non-finite vertex");
                }
            }
            Shape::Sphere { center, radius } => {
                if !finite(center) || !(*radius > 0.0 && radius.is_finite()) {
                    return bad("sphere radius must be positive");
                }
            }
            Shape::Capsule { p1, p2, r1, r2 } | Shape::Cylinder { p1, p2, r1, r2 } => {
                if !(*r1 > 0.0 && *r2 > 0.0 && r1.is_finite() && r2.is_finite()) {
                    return bad("radii must be positive");
                }
                if !finite(p1) || !finite(p2) || (p1 - p2).norm() <= 1e-12 {
                    return bad("endpoints must be distinct");
                }
            }
        }
        Ok(())
    }

    /// The same shape expressed through `pose`.
    pub fn transformed(&self, pose: &Pose) -> Shape {
        match self {
            Shape::Polytope { vertices } => Shape::Polytope {
                vertices: vertices.iter().map(|v| pose.apply(v)).collect(),
            },
            Shape::Sphere { center, radius } => Shape::Sphere {
                center: pose.apply(center),
                radius: *radius,
            },
            Shape::Capsule { p1, p2, r1, r2 } => Shape::Capsule {
                p1: pose.apply(p1),
                p2: pose.apply(p2),
                r1: *r1,
                r2: *r2,
            },
            Shape::Cylinder { p1, p2, r1, r2 } => Shape::Cylinder {
                p1: pose.apply(p1),
                p2: pose.apply(p2),
                r1: *r1,
                r2: *r2,
            },
        }
    }

    /// Minimum of `aᵀx + b` over the shape.
    pub fn min_plane_value(&self, a: &Vector3<f64>, b: f64) -> f64 {
        a.dot(&self.support(&-a)) + b
    }
}

/// A body attached to a link of the kinematic tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexBody {
    pub name: String,
    pub link: usize,
    pub shape: Shape,
}

impl ConvexBody {
    /// Shape in `frame` coordinates at tangent configuration `s`.
    pub fn posed(&self, tree: &KinematicTree, s: &[f64], frame: usize) -> Shape {
        self.shape.transformed(&tree.tc_fk(s, frame, self.link))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Positive => 1.0,
            Side::Negative => -1.0,
        }
    }
}

/// Plane `a(s)ᵀx + b(s) = 0` written in the link frame `frame`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "Poly<C>: Serialize", deserialize = "Poly<C>: Deserialize<'de>"))]
pub struct PlaneParam<C: Coefficient = f64> {
    pub a: [Poly<C>; 3],
    pub b: Poly<C>,
    pub frame: usize,
}

impl<C: Coefficient> PlaneParam<C> {
    fn signed(&self, sign: f64) -> ([Poly<C>; 3], Poly<C>) {
        (
            std::array::from_fn(|i| self.a[i].scale(sign)),
            self.b.scale(sign),
        )
    }
}

impl PlaneParam<f64> {
    pub fn eval(&self, s: &[f64]) -> (Vector3<f64>, f64) {
        (
            Vector3::from_fn(|i, _| self.a[i].eval_slice(s)),
            self.b.eval_slice(s),
        )
    }
}

impl PlaneParam<LinExpr> {
    /// Numeric plane for a decision vector `x`.
    pub fn value(&self, x: &[f64]) -> PlaneParam<f64> {
        PlaneParam {
            a: std::array::from_fn(|i| crate::soscomp::value_of(&self.a[i], x)),
            b: crate::soscomp::value_of(&self.b, x),
            frame: self.frame,
        }
    }
}

/// Requirement on `s ∈ P`: a polynomial `≥ 0` or a symmetric polynomial
/// matrix `⪰ 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum Condition<C: Coefficient = f64> {
    Scalar(Poly<C>),
    Matrix(Vec<Vec<Poly<C>>>),
}

impl Condition<f64> {
    /// Scalar value, or minimum eigenvalue of the matrix, at `s`.
    pub fn eval(&self, s: &[f64]) -> f64 {
        match self {
            Condition::Scalar(p) => p.eval_slice(s),
            Condition::Matrix(m) => {
                let n = m.len();
                min_eigenvalue(&nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j].eval_slice(s)))
            }
        }
    }
}

impl Condition<LinExpr> {
    pub fn value(&self, x: &[f64]) -> Condition<f64> {
        match self {
            Condition::Scalar(p) => Condition::Scalar(crate::soscomp::value_of(p, x)),
            Condition::Matrix(m) => Condition::Matrix(
                m.iter()
                    .map(|r| r.iter().map(|p| crate::soscomp::value_of(p, x)).collect())
                    .collect(),
            ),
        }
    }
}

fn dot<C: Coefficient>(a: &[Poly<C>; 3], f: &[Polynomial; 3]) -> Poly<C> {
    let mut out = a[0].mul_real(&f[0]);
    out.add_assign(&a[1].mul_real(&f[1]));
    out.add_assign(&a[2].mul_real(&f[2]));
    out
}

/// Orthonormal frame whose third column is `n`.
fn frame_with_z(n: &Vector3<f64>) -> Matrix3<f64> {
    let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let x = (helper - n * n.dot(&helper)).normalize();
    let y = n.cross(&x);
    Matrix3::from_columns(&[x, y, *n])
}

/// Sphere at body-frame `center`: `[[αI, r·g·a], [r·g·aᵀ, α]] ⪰ 0` with
/// `α = aᵀf + b·g`, plus `α − g ≥ 0`.
fn sphere_conditions<C: Coefficient>(
    a: &[Poly<C>; 3],
    b: &Poly<C>,
    fk: &RationalPose,
    center: &Vector3<f64>,
    r: f64,
) -> [Condition<C>; 2] {
    let f = fk.point_numerator(center);
    let g = &fk.den;
    let alpha = dot(a, &f).add(&b.mul_real(g));
    let off: Vec<Poly<C>> = a.iter().map(|ai| ai.mul_real(&g.scale(r))).collect();
    let mut m = vec![vec![Poly::zero(); 4]; 4];
    for i in 0..3 {
        m[i][i] = alpha.clone();
        m[i][3] = off[i].clone();
        m[3][i] = off[i].clone();
    }
    m[3][3] = alpha.clone();
    let scalar = alpha.sub(&unit_like(g));
    [Condition::Matrix(m), Condition::Scalar(scalar)]
}

/// `g` lifted to decision coefficients.
fn unit_like<C: Coefficient>(g: &Polynomial) -> Poly<C> {
    Poly::from_terms(g.terms().map(|(m, c)| (m.clone(), C::from(*c))))
}

/// Conditions that keep `shape` (attached by `fk` to the plane's frame) on
/// `side` of `plane` for every `s ∈ P`, with denominators cleared.
pub fn plane_side_conditions<C: Coefficient>(
    shape: &Shape,
    side: Side,
    plane: &PlaneParam<C>,
    fk: &RationalPose,
    eps: f64,
) -> Vec<Condition<C>> {
    let (a, b) = plane.signed(side.sign());
    let g = &fk.den;
    match shape {
        Shape::Polytope { vertices } => vertices
            .iter()
            .map(|v| {
                let f = fk.point_numerator(v);
                Condition::Scalar(dot(&a, &f).add(&b.mul_real(g)).sub(&unit_like(g)))
            })
            .collect(),
        Shape::Sphere { center, radius } => {
            sphere_conditions(&a, &b, fk, center, radius + eps).to_vec()
        }
        Shape::Capsule { p1, p2, r1, r2 } => {
            let mut out = sphere_conditions(&a, &b, fk, p1, r1 + eps).to_vec();
            out.extend(sphere_conditions(&a, &b, fk, p2, r2 + eps));
            out
        }
        Shape::Cylinder { p1, p2, r1, r2 } => {
            let n = (p1 - p2).normalize();
            let h = (p1 - p2).norm() / 2.0;
            let mid = (p1 + p2) / 2.0;
            let rg = frame_with_z(&n);
            // Plane in the geometry frame: a'ᵀy + b' with a' = (R·R_G)ᵀa.
            let ga: [Poly<C>; 3] = std::array::from_fn(|k| {
                let col: [Polynomial; 3] = std::array::from_fn(|i| {
                    (0..3).fold(Polynomial::zero(), |acc, j| {
                        acc.add(&fk.rotation[i][j].scale(rg[(j, k)]))
                    })
                });
                dot(&a, &col)
            });
            let gb = b.mul_real(g).add(&dot(&a, &fk.point_numerator(&mid)));
            let rim = |alpha: Poly<C>, r: f64| {
                let x = ga[0].scale(r);
                let y = ga[1].scale(r);
                Condition::Matrix(vec![
                    vec![alpha.clone(), Poly::zero(), x.clone()],
                    vec![Poly::zero(), alpha.clone(), y.clone()],
                    vec![x, y, alpha],
                ])
            };
            let top = ga[2].scale(h).add(&gb);
            let bottom = gb.sub(&ga[2].scale(h));
            vec![
                rim(top, r1 + eps),
                rim(bottom, r2 + eps),
                Condition::Scalar(gb.sub(&unit_like(g))),
            ]
        }
    }
}

/// Polynomial description `{γ ≥ 0, h = 0}` of "x lies in the body".
#[derive(Clone, Debug, Default)]
pub struct Membership {
    pub gammas: Vec<Polynomial>,
    pub hs: Vec<Polynomial>,
    /// Auxiliary indeterminates introduced (convex weights, cross-section).
    pub aux: Vec<Var>,
}

/// Membership of the point `x` (in the frame `fk` maps into) in `shape`,
/// denominator-cleared. Fresh auxiliary variables are drawn from `next`.
pub fn membership_conditions(
    shape: &Shape,
    fk: &RationalPose,
    x: [Var; 3],
    next: &mut impl FnMut() -> Var,
) -> Membership {
    let g = &fk.den;
    let xp: [Polynomial; 3] = std::array::from_fn(|i| Polynomial::var(x[i]));
    let gx: [Polynomial; 3] = std::array::from_fn(|i| xp[i].mul(g));
    let mut out = Membership::default();
    let norm2 = |v: &[Polynomial; 3]| v.iter().fold(Polynomial::zero(), |acc, e| acc.add(&e.mul(e)));
    match shape {
        Shape::Polytope { vertices } => {
            let mus: Vec<Var> = vertices.iter().map(|_| next()).collect();
            let mut h = gx.clone();
            let mut sum = Polynomial::one();
            for (v, &mu) in vertices.iter().zip(&mus) {
                let f = fk.point_numerator(v);
                let m = Polynomial::var(mu);
                for i in 0..3 {
                    h[i] = h[i].sub(&f[i].mul(&m));
                }
                sum = sum.sub(&m);
                out.gammas.push(m);
            }
            out.hs.extend(h);
            out.hs.push(sum);
            out.aux = mus;
        }
        Shape::Sphere { center, radius } => {
            let f = fk.point_numerator(center);
            let d: [Polynomial; 3] = std::array::from_fn(|i| gx[i].sub(&f[i]));
            out.gammas.push(g.mul(g).scale(radius * radius).sub(&norm2(&d)));
        }
        Shape::Capsule { p1, p2, r1, r2 } => {
            let mu = next();
            let m = Polynomial::var(mu);
            let om = Polynomial::one().sub(&m);
            let f1 = fk.point_numerator(p1);
            let f2 = fk.point_numerator(p2);
            let d: [Polynomial; 3] =
                std::array::from_fn(|i| gx[i].sub(&f1[i].mul(&m)).sub(&f2[i].mul(&om)));
            let rmu = m.scale(*r1).add(&om.scale(*r2));
            out.gammas.push(g.mul(g).mul(&rmu.mul(&rmu)).sub(&norm2(&d)));
            out.gammas.push(m);
            out.gammas.push(om);
            out.aux = vec![mu];
        }
        Shape::Cylinder { p1, p2, r1, r2 } => {
            let mu = next();
            let vs = [next(), next(), next()];
            let m = Polynomial::var(mu);
            let om = Polynomial::one().sub(&m);
            let v: [Polynomial; 3] = std::array::from_fn(|i| Polynomial::var(vs[i]));
            let f1 = fk.point_numerator(p1);
            let f2 = fk.point_numerator(p2);
            let axis: [Polynomial; 3] = std::array::from_fn(|i| f1[i].sub(&f2[i]));
            out.hs.push(
                (0..3).fold(Polynomial::zero(), |acc, i| acc.add(&v[i].mul(&axis[i]))),
            );
            for i in 0..3 {
                out.hs.push(
                    gx[i]
                        .sub(&f1[i].mul(&m))
                        .sub(&f2[i].mul(&om))
                        .sub(&v[i].mul(g)),
                );
            }
            let rmu = m.scale(*r1).add(&om.scale(*r2));
            out.gammas.push(rmu.mul(&rmu).sub(&norm2(&v)));
            out.gammas.push(m);
            out.gammas.push(om);
            out.aux = vec![mu, vs[0], vs[1], vs[2]];
        }
    }
    out
}
