//! Fixed-configuration separation and intersection programs. For bodies
//! separated or interpenetrating by a positive margin exactly one of them
//! is feasible.

use nalgebra::{Matrix3, Vector3};

use super::{gjk, Shape};
use crate::soscomp::{BackendStatus, ConicModel, LinExpr, SolverSettings};
use crate::{Error, Result};

/// Optimal half-gap below which the separating program counts as infeasible.
pub const FIXED_MARGIN_TOL: f64 = 1e-7;

/// Membership residual accepted for an intersection point.
const MEMBERSHIP_TOL: f64 = 1e-8;

fn affine(c: f64, terms: &[(&LinExpr, f64)]) -> LinExpr {
    let mut out = LinExpr::constant(c);
    for (e, k) in terms {
        for &(i, v) in e.terms() {
            out.add_term(i, v * k);
        }
        out.constant += e.constant * k;
    }
    out
}

/// `σ(aᵀp + b) − t` as an affine expression.
fn plane_at(a: &[LinExpr], b: &LinExpr, t: &LinExpr, p: &Vector3<f64>, sigma: f64) -> LinExpr {
    affine(
        0.0,
        &[
            (&a[0], sigma * p.x),
            (&a[1], sigma * p.y),
            (&a[2], sigma * p.z),
            (b, sigma),
            (t, -1.0),
        ],
    )
}

fn add_side(m: &mut ConicModel, shape: &Shape, a: &[LinExpr], b: &LinExpr, t: &LinExpr, sigma: f64) {
    // Sphere-like rows: σ(aᵀo + b) − t ≥ r‖Pa‖.
    let ball = |m: &mut ConicModel, o: &Vector3<f64>, r: f64, proj: &Matrix3<f64>| {
        let mut v = vec![plane_at(a, b, t, o, sigma).scaled_by(1.0 / r)];
        for i in 0..3 {
            v.push(affine(
                0.0,
                &[(&a[0], proj[(i, 0)]), (&a[1], proj[(i, 1)]), (&a[2], proj[(i, 2)])],
            ));
        }
        m.add_soc(v);
    };
    match shape {
        Shape::Polytope { vertices } => {
            for v in vertices {
                m.add_nonneg(plane_at(a, b, t, v, sigma));
            }
        }
        Shape::Sphere { center, radius } => ball(m, center, *radius, &Matrix3::identity()),
        Shape::Capsule { p1, p2, r1, r2 } => {
            ball(m, p1, *r1, &Matrix3::identity());
            ball(m, p2, *r2, &Matrix3::identity());
        }
        Shape::Cylinder { p1, p2, r1, r2 } => {
            let n = (p1 - p2).normalize();
            let proj = Matrix3::identity() - n * n.transpose();
            ball(m, p1, *r1, &proj);
            ball(m, p2, *r2, &proj);
        }
    }
}

trait Scaled {
    fn scaled_by(self, k: f64) -> Self;
}

impl Scaled for LinExpr {
    fn scaled_by(self, k: f64) -> Self {
        affine(0.0, &[(&self, k)])
    }
}

/// Plane `aᵀx + b` with every point of `a_shape` at value `≥ 1` and every
/// point of `b_shape` at value `≤ −1`, or `None` if no plane separates
/// them by more than the solver tolerance.
pub fn fixed_separating_plane(a_shape: &Shape, b_shape: &Shape) -> Result<Option<(Vector3<f64>, f64)>> {
    let mut m = ConicModel::new();
    let a = m.new_vars(3);
    let b = m.new_var();
    let t = m.new_var();
    m.add_soc(vec![LinExpr::constant(1.0), a[0].clone(), a[1].clone(), a[2].clone()]);
    m.add_nonneg(affine(1.0, &[(&t, -1.0)]));
    add_side(&mut m, a_shape, &a, &b, &t, 1.0);
    add_side(&mut m, b_shape, &a, &b, &t, -1.0);
    m.minimize(affine(0.0, &[(&t, -1.0)]));
    let sol = m.solve(&SolverSettings::default());
    match sol.status {
        BackendStatus::Solved | BackendStatus::AlmostSolved => {}
        BackendStatus::Infeasible => return Ok(None),
        _ => return Err(Error::Solver(format!("separating plane: {}", sol.detail))),
    }
    if sol.x[4] <= FIXED_MARGIN_TOL {
        return Ok(None);
    }
    let av = Vector3::new(sol.x[0], sol.x[1], sol.x[2]);
    let bv = sol.x[3];
    // Re-balance and rescale against exact support values.
    let ma = a_shape.min_plane_value(&av, bv);
    let mb = b_shape.min_plane_value(&-av, -bv);
    if ma <= 0.0 || mb <= 0.0 {
        return Ok(None);
    }
    let b_bal = bv + (mb - ma) / 2.0;
    let margin = (ma + mb) / 2.0;
    Ok(Some((av / margin, b_bal / margin)))
}

/// A point in both shapes, or `None` when the program is infeasible.
pub fn fixed_intersection_point(a_shape: &Shape, b_shape: &Shape) -> Result<Option<Vector3<f64>>> {
    let mut m = ConicModel::new();
    let x = m.new_vars(3);
    for shape in [a_shape, b_shape] {
        add_membership(&mut m, shape, &x);
    }
    let sol = m.solve(&SolverSettings::default());
    match sol.status {
        BackendStatus::Solved | BackendStatus::AlmostSolved => {}
        BackendStatus::Infeasible => return Ok(None),
        _ => return Err(Error::Solver(format!("intersection point: {}", sol.detail))),
    }
    let p = Vector3::new(sol.x[0], sol.x[1], sol.x[2]);
    let residual = [a_shape, b_shape]
        .iter()
        .map(|s| (gjk::closest_point(s, &p) - p).norm())
        .fold(0.0, f64::max);
    if residual > MEMBERSHIP_TOL {
        return Err(Error::Solver(format!(
            "intersection point misses a body by {residual:.3e}"
        )));
    }
    Ok(Some(p))
}

fn add_membership(m: &mut ConicModel, shape: &Shape, x: &[LinExpr]) {
    let unit_weight = |m: &mut ConicModel| {
        let mu = m.new_var();
        m.add_nonneg(mu.clone());
        m.add_nonneg(affine(1.0, &[(&mu, -1.0)]));
        mu
    };
    // ‖x − μ p1 − (1−μ) p2 − v‖ ≤ μ r1 + (1−μ) r2 style rows.
    let blend = |i: usize, mu: &LinExpr, p1: &Vector3<f64>, p2: &Vector3<f64>| {
        affine(-p2[i], &[(&x[i], 1.0), (mu, p2[i] - p1[i])])
    };
    match shape {
        Shape::Polytope { vertices } => {
            let mus = m.new_vars(vertices.len());
            let mut sum = LinExpr::constant(-1.0);
            for mu in &mus {
                m.add_nonneg(mu.clone());
                sum = sum.plus(mu);
            }
            m.add_eq(sum);
            for i in 0..3 {
                let mut e = x[i].clone();
                for (v, mu) in vertices.iter().zip(&mus) {
                    e = e.plus(&mu.clone().scaled_by(-v[i]));
                }
                m.add_eq(e);
            }
        }
        Shape::Sphere { center, radius } => {
            let mut v = vec![LinExpr::constant(*radius)];
            v.extend((0..3).map(|i| affine(-center[i], &[(&x[i], 1.0)])));
            m.add_soc(v);
        }
        Shape::Capsule { p1, p2, r1, r2 } => {
            let mu = unit_weight(m);
            let mut v = vec![affine(*r2, &[(&mu, r1 - r2)])];
            v.extend((0..3).map(|i| blend(i, &mu, p1, p2)));
            m.add_soc(v);
        }
        Shape::Cylinder { p1, p2, r1, r2 } => {
            let mu = unit_weight(m);
            let n = (p1 - p2).normalize();
            let w = m.new_vars(3);
            for i in 0..3 {
                m.add_eq(blend(i, &mu, p1, p2).minus(&w[i]));
            }
            m.add_eq(affine(0.0, &[(&w[0], n.x), (&w[1], n.y), (&w[2], n.z)]));
            let mut v = vec![affine(*r2, &[(&mu, r1 - r2)])];
            v.extend(w);
            m.add_soc(v);
        }
    }
}
