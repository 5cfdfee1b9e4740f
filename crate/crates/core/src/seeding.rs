//! Nonlinear seeding of large candidate polytopes.
//!
//! Candidates come from repeatedly cutting away the collision closest to
//! the current ellipsoid. They carry no guarantee and must go through
//! [`contract_to_feasible`](crate::regions::contract_to_feasible) before use.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::gjk::closest_point;
use crate::geometry::Shape;
use crate::kinematics::{TcLimits, WORLD};
use crate::regions::{max_inscribed_ellipsoid, Ellipsoid, RowKind, TcPolytope};
use crate::scene::Scene;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct SeedOptions {
    /// Local solves per closest-collision query.
    pub starts: usize,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// Largest contact residual accepted for a witness.
    pub residual_tol: f64,
    /// Largest row violation accepted for a witness.
    pub feasibility_tol: f64,
    /// Slack kept between a relaxed cut and the seed point.
    pub margin: f64,
    /// Relative ellipsoid-volume gain below which the outer loop stops.
    pub tol: f64,
    pub max_iters: usize,
    pub max_cuts_per_pair: usize,
    /// Radius of the ball around the seed used as the first ellipsoid.
    pub initial_radius: f64,
    pub rng_seed: u64,
}

impl Default for SeedOptions {
    fn default() -> Self {
        Self {
            starts: 16,
            outer_iters: 30,
            inner_iters: 60,
            residual_tol: 1e-6,
            feasibility_tol: 1e-8,
            margin: 1e-3,
            tol: 0.02,
            max_iters: 8,
            max_cuts_per_pair: 32,
            initial_radius: 1e-2,
            rng_seed: 0,
        }
    }
}

/// A colliding configuration with the shared contact point in both body
/// frames.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CollisionWitness {
    pub pair: (usize, usize),
    pub s_star: Vec<f64>,
    pub p_a: Vector3<f64>,
    pub p_b: Vector3<f64>,
    /// `‖Q⁻¹(s* − s0)‖` in the ellipsoid metric.
    pub distance: f64,
}

struct Problem<'a> {
    scene: &'a Scene,
    shapes: [&'a Shape; 2],
    links: [usize; 2],
    p: &'a TcPolytope,
    limits: TcLimits,
    qinv: DMatrix<f64>,
    center: DVector<f64>,
}

#[derive(Clone)]
struct Point {
    s: Vec<f64>,
    pa: Vector3<f64>,
    pb: Vector3<f64>,
}

struct Multipliers {
    lambda: Vector3<f64>,
    mu: Vec<f64>,
    rho: f64,
}

impl Problem<'_> {
    fn metric(&self, s: &[f64]) -> f64 {
        (&self.qinv * (DVector::from_column_slice(s) - &self.center)).norm_squared()
    }

    fn contact(&self, x: &Point) -> (Vector3<f64>, [nalgebra::Matrix3<f64>; 2]) {
        let ta = self.scene.tree.tc_fk(&x.s, WORLD, self.links[0]);
        let tb = self.scene.tree.tc_fk(&x.s, WORLD, self.links[1]);
        (ta.apply(&x.pa) - tb.apply(&x.pb), [ta.rotation, tb.rotation])
    }

    fn rows(&self, s: &[f64]) -> Vec<f64> {
        (0..self.p.num_rows())
            .map(|j| self.p.c.row(j).iter().zip(s).map(|(c, v)| c * v).sum::<f64>() - self.p.d[j])
            .collect()
    }

    fn lagrangian(&self, x: &Point, m: &Multipliers) -> f64 {
        let (h, _) = self.contact(x);
        let mut v = self.metric(&x.s) + m.lambda.dot(&h) + 0.5 * m.rho * h.norm_squared();
        for (g, mu) in self.rows(&x.s).iter().zip(&m.mu) {
            let t = (mu + m.rho * g).max(0.0);
            v += (t * t - mu * mu) / (2.0 * m.rho);
        }
        v
    }

    fn gradient(&self, x: &Point, m: &Multipliers) -> (Vec<f64>, Vector3<f64>, Vector3<f64>) {
        let (h, [ra, rb]) = self.contact(x);
        let w = m.lambda + h * m.rho;
        let mut gs = vec![0.0; x.s.len()];
        for (i, g) in gs.iter_mut().enumerate() {
            let eps = 1e-7 * x.s[i].abs().max(1.0);
            let mut hi = x.clone();
            let mut lo = x.clone();
            hi.s[i] += eps;
            lo.s[i] -= eps;
            *g = (self.lagrangian(&hi, m) - self.lagrangian(&lo, m)) / (2.0 * eps);
        }
        (gs, ra.transpose() * w, -(rb.transpose() * w))
    }

    fn project(&self, x: &mut Point) {
        for (v, (&l, &u)) in x.s.iter_mut().zip(self.limits.lower.iter().zip(&self.limits.upper)) {
            *v = v.clamp(l, u);
        }
        x.pa = closest_point(self.shapes[0], &x.pa);
        x.pb = closest_point(self.shapes[1], &x.pb);
    }

    /// Projected gradient with backtracking on the augmented Lagrangian.
    fn inner(&self, mut x: Point, m: &Multipliers, iters: usize) -> Point {
        let mut step = 1.0;
        let mut fx = self.lagrangian(&x, m);
        for _ in 0..iters {
            let (gs, ga, gb) = self.gradient(&x, m);
            let mut moved = false;
            for _ in 0..40 {
                let mut y = x.clone();
                for (v, g) in y.s.iter_mut().zip(&gs) {
                    *v -= step * g;
                }
                y.pa -= ga * step;
                y.pb -= gb * step;
                self.project(&mut y);
                let d2: f64 = y.s.iter().zip(&x.s).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                    + (y.pa - x.pa).norm_squared()
                    + (y.pb - x.pb).norm_squared();
                let fy = self.lagrangian(&y, m);
                if fy <= fx - 1e-4 * d2 / step {
                    moved = d2 > 1e-24;
                    x = y;
                    fx = fy;
                    step *= 2.0;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        x
    }

    fn solve(&self, start: Point, opts: &SeedOptions) -> Option<CollisionWitness> {
        let mut m = Multipliers { lambda: Vector3::zeros(), mu: vec![0.0; self.p.num_rows()], rho: 10.0 };
        let mut x = start;
        self.project(&mut x);
        let mut last = f64::INFINITY;
        for _ in 0..opts.outer_iters {
            x = self.inner(x, &m, opts.inner_iters);
            let (h, _) = self.contact(&x);
            let g = self.rows(&x.s);
            m.lambda += h * m.rho;
            for (mu, gi) in m.mu.iter_mut().zip(&g) {
                *mu = (*mu + m.rho * gi).max(0.0);
            }
            let viol = h.norm().max(g.iter().cloned().fold(0.0, f64::max));
            if viol < 0.01 * opts.residual_tol.min(opts.feasibility_tol * 100.0) {
                break;
            }
            if viol > 0.25 * last {
                m.rho = (m.rho * 4.0).min(1e9);
            }
            last = viol;
        }
        let (h, _) = self.contact(&x);
        let worst = self.rows(&x.s).into_iter().fold(f64::NEG_INFINITY, f64::max);
        if h.norm() > opts.residual_tol || worst > opts.feasibility_tol {
            return None;
        }
        Some(CollisionWitness {
            pair: (0, 0),
            distance: self.metric(&x.s).sqrt(),
            s_star: x.s,
            p_a: x.pa,
            p_b: x.pb,
        })
    }
}

/// Local search for the collision of one body pair nearest to the
/// ellipsoid center in the ellipsoid metric, over `p`. Returns the best
/// witness over all multi-starts, or `None` when no start converges to a
/// feasible contact.
pub fn find_closest_collision(
    scene: &Scene,
    pair: (usize, usize),
    p: &TcPolytope,
    e: &Ellipsoid,
    opts: &SeedOptions,
) -> Result<Option<CollisionWitness>> {
    let qinv = e.q.clone().try_inverse().ok_or(Error::Structure("singular ellipsoid".into()))?;
    let (a, b) = (&scene.bodies[pair.0], &scene.bodies[pair.1]);
    let problem = Problem {
        scene,
        shapes: [&a.shape, &b.shape],
        links: [a.link, b.link],
        p,
        limits: scene.tree.tc_limits(),
        qinv,
        center: e.center.clone(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed ^ ((pair.0 as u64) << 32 | pair.1 as u64));
    let mut starts = p.sample_uniform(&mut rng, opts.starts.saturating_sub(1))?;
    starts.insert(0, e.center.as_slice().to_vec());
    let found: Vec<CollisionWitness> = starts
        .into_par_iter()
        .filter_map(|s| {
            let start = Point { s, pa: a.shape.interior_point(), pb: b.shape.interior_point() };
            problem.solve(start, opts)
        })
        .collect();
    Ok(found
        .into_iter()
        .min_by(|x, y| x.distance.total_cmp(&y.distance))
        .map(|w| CollisionWitness { pair, ..w }))
}

/// Half-space `cᵀs ≤ d` tangent to the level set of the ellipsoid metric
/// through `s_star`, with `‖c‖ = 1`.
pub fn tangent_hyperplane(s_star: &[f64], e: &Ellipsoid) -> Result<(DVector<f64>, f64)> {
    let qinv = e.q.clone().try_inverse().ok_or(Error::Structure("singular ellipsoid".into()))?;
    let v = DVector::from_column_slice(s_star) - &e.center;
    let u = &qinv * &v;
    if u.norm() < 1.0 - 1e-12 {
        return Err(Error::Structure("point lies strictly inside the ellipsoid".into()));
    }
    let c = qinv.transpose() * u;
    let c = &c / c.norm();
    let d = c.dot(&DVector::from_column_slice(s_star));
    Ok((c, d))
}

/// Ball of the given radius around `s0`.
fn ball(s0: &[f64], radius: f64) -> Ellipsoid {
    let n = s0.len();
    Ellipsoid { q: DMatrix::identity(n, n) * radius, center: DVector::from_column_slice(s0) }
}

/// Grows an uncertified candidate polytope around the tangent
/// configuration `s0` by alternating closest-collision cuts with ellipsoid
/// refits. The result still has to be contracted and certified.
pub fn nonlinear_iris(scene: &Scene, s0: &[f64], opts: &SeedOptions) -> Result<TcPolytope> {
    let limits = scene.tree.tc_limits();
    if s0.len() != limits.dim() {
        return Err(Error::Dimension { expected: limits.dim(), found: s0.len() });
    }
    if !limits.contains(s0, 0.0) {
        return Err(Error::OutsidePolytope(s0.to_vec()));
    }
    if scene.in_collision(s0) {
        return Err(Error::InCollision(s0.to_vec()));
    }
    let base = TcPolytope::from_limits(&limits);
    let pairs = scene.checked_pairs();
    let mut ellipsoid = ball(s0, opts.initial_radius);
    let mut polytope = base.clone();
    let mut prev_det = 0.0;
    for iteration in 0..opts.max_iters {
        let mut p = base.clone();
        for &pair in &pairs {
            for _ in 0..opts.max_cuts_per_pair {
                let Some(w) = find_closest_collision(scene, pair, &p, &ellipsoid, opts)? else { break };
                let star = if ellipsoid.metric(&w.s_star) < 1.0 {
                    // The ellipsoid itself reaches the collision; cut at its boundary.
                    let v = DVector::from_column_slice(&w.s_star) - &ellipsoid.center;
                    let scale = 1.0 / ellipsoid.metric(&w.s_star).max(1e-12);
                    (&ellipsoid.center + v * scale).as_slice().to_vec()
                } else {
                    w.s_star.clone()
                };
                let (c, mut d) = tangent_hyperplane(&star, &ellipsoid)?;
                let at_seed = c.dot(&DVector::from_column_slice(s0));
                if at_seed > d - opts.margin {
                    d = at_seed + opts.margin;
                }
                let at_witness = c.dot(&DVector::from_column_slice(&w.s_star));
                let cut = TcPolytope::new(DMatrix::from_row_slice(1, c.len(), c.as_slice()), DVector::from_element(1, d), vec![
                    RowKind::Learned,
                ])?;
                p = p.stack(&cut);
                if at_witness <= d {
                    // The cut could not exclude the witness; more cuts would repeat it.
                    break;
                }
            }
        }
        let next = max_inscribed_ellipsoid(&p)?;
        let det = next.det();
        log::debug!("seeding iteration {iteration}: {} rows, det Q {det:.4e}", p.num_rows());
        polytope = p;
        ellipsoid = next;
        if prev_det > 0.0 && det / prev_det - 1.0 < opts.tol {
            break;
        }
        prev_det = det;
    }
    Ok(polytope)
}
