//! GJK distance between convex shapes given by support functions.
//!
//! Used as the fast, independent collision oracle for large sample sweeps.
//! The simplex sub-problem is solved by brute force over all faces, which is
//! simple and robust for simplices of at most four points.

use nalgebra::{Matrix3, Vector3};

use super::Shape;

/// Closest points of two shapes. `distance == 0` means they intersect.
#[derive(Clone, Copy, Debug)]
pub struct Proximity {
    pub distance: f64,
    pub point_a: Vector3<f64>,
    pub point_b: Vector3<f64>,
}

const MAX_ITERS: usize = 128;
const REL_TOL: f64 = 1e-12;
const ABS_TOL: f64 = 1e-14;

impl Shape {
    /// Point of the shape maximizing `dᵀx`.
    pub fn support(&self, d: &Vector3<f64>) -> Vector3<f64> {
        let dn = d.norm();
        let unit = if dn > 0.0 { d / dn } else { Vector3::zeros() };
        match self {
            Shape::Polytope { vertices } => *vertices
                .iter()
                .max_by(|a, b| a.dot(d).total_cmp(&b.dot(d)))
                .expect("polytope has vertices"),
            Shape::Sphere { center, radius } => center + unit * *radius,
            Shape::Capsule { p1, p2, r1, r2 } => {
                let a = p1 + unit * *r1;
                let b = p2 + unit * *r2;
                if a.dot(d) >= b.dot(d) { a } else { b }
            }
            Shape::Cylinder { p1, p2, r1, r2 } => {
                let axis = (p1 - p2).normalize();
                let radial = d - axis * axis.dot(d);
                let radial = radial - axis * axis.dot(&radial);
                let rn = radial.norm();
                // Below this the radial part is rounding noise.
                let dir = if rn > 1e-12 * dn { radial / rn } else { Vector3::zeros() };
                let a = p1 + dir * *r1;
                let b = p2 + dir * *r2;
                if a.dot(d) >= b.dot(d) { a } else { b }
            }
        }
    }

    /// Some point of the shape.
    pub fn interior_point(&self) -> Vector3<f64> {
        match self {
            Shape::Polytope { vertices } => {
                vertices.iter().sum::<Vector3<f64>>() / vertices.len() as f64
            }
            Shape::Sphere { center, .. } => *center,
            Shape::Capsule { p1, p2, .. } | Shape::Cylinder { p1, p2, .. } => (p1 + p2) * 0.5,
        }
    }
}

#[derive(Clone, Copy)]
struct Vertex {
    w: Vector3<f64>,
    a: Vector3<f64>,
    b: Vector3<f64>,
}

/// Closest point to the origin of the affine hull of `pts`, with
/// barycentric weights, or `None` if the points are affinely dependent.
fn affine_closest(pts: &[Vector3<f64>]) -> Option<(Vector3<f64>, Vec<f64>)> {
    let k = pts.len();
    if k == 1 {
        return Some((pts[0], vec![1.0]));
    }
    // Minimize ‖p0 + Σ μ_i (p_i − p0)‖ over μ.
    let m = k - 1;
    let e: Vec<Vector3<f64>> = (1..k).map(|i| pts[i] - pts[0]).collect();
    let mut g = Matrix3::zeros();
    let mut r = Vector3::zeros();
    for i in 0..m {
        for j in 0..m {
            g[(i, j)] = e[i].dot(&e[j]);
        }
        r[i] = -e[i].dot(&pts[0]);
    }
    let scale = e.iter().map(|v| v.norm_squared()).fold(0.0, f64::max);
    let sub = g.view((0, 0), (m, m)).clone_owned();
    let det = sub.determinant();
    if det.abs() <= 1e-20 * scale.powi(m as i32) || scale == 0.0 {
        return None;
    }
    let mu = sub.lu().solve(&r.rows(0, m).clone_owned())?;
    let mut lambda = vec![1.0 - mu.sum()];
    lambda.extend(mu.iter().copied());
    let p = pts
        .iter()
        .zip(&lambda)
        .fold(Vector3::zeros(), |acc, (q, l)| acc + q * *l);
    Some((p, lambda))
}

/// Brute-force closest point of a simplex to the origin; returns the point
/// and the minimal sub-simplex (with weights) attaining it.
fn closest_on_simplex(s: &[Vertex]) -> (Vector3<f64>, Vec<(Vertex, f64)>) {
    let n = s.len();
    let mut best: Option<(f64, Vector3<f64>, Vec<(Vertex, f64)>)> = None;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let pts: Vec<Vector3<f64>> = idx.iter().map(|&i| s[i].w).collect();
        let Some((p, lam)) = affine_closest(&pts) else {
            continue;
        };
        if lam.iter().any(|&l| l < -1e-12) {
            continue;
        }
        let d = p.norm();
        if best.as_ref().is_none_or(|(bd, _, _)| d < *bd - 1e-15) {
            let sub = idx.iter().zip(lam).map(|(&i, l)| (s[i], l.max(0.0))).collect();
            best = Some((d, p, sub));
        }
    }
    let (_, p, sub) = best.expect("single vertices are always candidates");
    (p, sub)
}

fn witness(sub: &[(Vertex, f64)]) -> (Vector3<f64>, Vector3<f64>) {
    let total: f64 = sub.iter().map(|(_, l)| l).sum();
    let a = sub.iter().fold(Vector3::zeros(), |acc, (v, l)| acc + v.a * *l) / total;
    let b = sub.iter().fold(Vector3::zeros(), |acc, (v, l)| acc + v.b * *l) / total;
    (a, b)
}

fn support_pair(a: &Shape, b: &Shape, d: &Vector3<f64>) -> Vertex {
    let pa = a.support(&-d);
    let pb = b.support(d);
    Vertex { w: pa - pb, a: pa, b: pb }
}

/// Distance and closest points between two convex shapes.
pub fn distance(a: &Shape, b: &Shape) -> Proximity {
    let start = a.interior_point() - b.interior_point();
    let first = support_pair(a, b, &-start);
    let mut simplex = vec![first];
    let mut v = first.w;
    let mut sub = vec![(first, 1.0)];
    for _ in 0..MAX_ITERS {
        let vv = v.norm_squared();
        if vv <= ABS_TOL * ABS_TOL {
            let (pa, pb) = witness(&sub);
            return Proximity {
                distance: 0.0,
                point_a: pa,
                point_b: pb,
            };
        }
        let w = support_pair(a, b, &v);
        if vv - v.dot(&w.w) <= REL_TOL * vv + ABS_TOL {
            break;
        }
        if simplex.iter().any(|s| (s.w - w.w).norm_squared() <= 1e-24) {
            break;
        }
        simplex.push(w);
        let (p, reduced) = closest_on_simplex(&simplex);
        if p.norm_squared() >= vv {
            break;
        }
        v = p;
        simplex = reduced.iter().map(|(x, _)| *x).collect();
        sub = reduced;
        if simplex.len() == 4 {
            // Origin enclosed by a full-dimensional simplex.
            v = Vector3::zeros();
        }
    }
    let (pa, pb) = witness(&sub);
    Proximity {
        distance: v.norm(),
        point_a: pa,
        point_b: pb,
    }
}

/// Closest point of a shape to `x`.
pub fn closest_point(shape: &Shape, x: &Vector3<f64>) -> Vector3<f64> {
    let pt = Shape::Polytope { vertices: vec![*x] };
    distance(shape, &pt).point_a
}
