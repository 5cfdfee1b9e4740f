use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{max_inscribed_ellipsoid, Ellipsoid, RowKind, TcPolytope};
use crate::certifier::{
    certify_polytope, pair_conditions, plane_basis, CertifyOptions, CollisionPair, PlaneCertificate,
    PolytopeReport,
};
use crate::geometry::{Condition, PlaneParam};
use crate::polyalg::{Monomial, Var};
use crate::scene::Scene;
use crate::soscomp::{matrix_quadratic_form, DecisionPoly, LinExpr, SolveStatus, SosProgram};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct GrowOptions {
    /// Offset in `Σ log(δ_i + ε0)`.
    pub eps0: f64,
    pub certify: CertifyOptions,
}

impl Default for GrowOptions {
    fn default() -> Self {
        Self {
            eps0: 1e-4,
            certify: CertifyOptions::default(),
        }
    }
}

fn scaled(e: &LinExpr, k: f64) -> LinExpr {
    use crate::polyalg::Coefficient;
    e.scaled(k)
}

/// Pushes the learned faces of `p` away from `e` while keeping every
/// row multiplier of `certs` fixed and re-solving for planes and `λ0`.
/// Returns `None` when the program fails; `p` is then the answer.
pub fn grow_polytope(
    scene: &Scene,
    pairs: &[CollisionPair],
    p: &TcPolytope,
    e: &Ellipsoid,
    certs: &[PlaneCertificate],
    seed: &[f64],
    opts: &GrowOptions,
) -> Result<Option<(TcPolytope, Vec<PlaneParam>)>> {
    let n = p.dim();
    if certs.len() != pairs.len() {
        return Err(Error::Certification("one certificate per pair is required".into()));
    }
    let learned = p.rows_of(RowKind::Learned);
    if learned.is_empty() {
        return Ok(None);
    }
    let mut prog = SosProgram::new();
    // Row polynomials d_j − c_jᵀs; learned rows carry decision variables.
    let mut cvars: Vec<Vec<LinExpr>> = Vec::new();
    let mut dvars: Vec<LinExpr> = Vec::new();
    let mut rows: Vec<DecisionPoly> = Vec::with_capacity(p.num_rows());
    for j in 0..p.num_rows() {
        if p.kinds[j] == RowKind::Learned {
            let c = prog.model_mut().new_vars(n);
            let d = prog.model_mut().new_var();
            let mut row = DecisionPoly::constant_term(d.clone());
            for (i, ci) in c.iter().enumerate() {
                row.add_term(Monomial::var(Var(i as u32)), &scaled(ci, -1.0));
            }
            rows.push(row);
            cvars.push(c);
            dvars.push(d);
        } else {
            rows.push(p.row_polys()[j].map_coefficients(|&v| LinExpr::constant(v)));
        }
    }

    let mut planes = Vec::with_capacity(pairs.len());
    for (pair, cert) in pairs.iter().zip(certs) {
        let pb = plane_basis(pair, n, &opts.certify);
        let plane = PlaneParam {
            a: std::array::from_fn(|_| prog.new_free_poly(&pb)),
            b: prog.new_free_poly(&pb),
            frame: pair.frame,
        };
        let conds = pair_conditions(scene, pair, &plane, opts.certify.radius_eps);
        if conds.len() != cert.conditions.len() {
            return Err(Error::Certification("certificate does not match the pair".into()));
        }
        for (cond, cc) in conds.iter().zip(&cert.conditions) {
            let target = match cond {
                Condition::Scalar(q) => q.clone(),
                Condition::Matrix(m) => {
                    let s_basis: Vec<Monomial> = cc.bases[0]
                        .iter()
                        .filter(|m| m.vars().all(|v| v.0 < crate::soscomp::AUX_VAR_BASE))
                        .cloned()
                        .collect();
                    matrix_quadratic_form(m, &s_basis, 0)?.0
                }
            };
            let (_, fixed) = cc.multiplier_polys();
            let mut rhs = DecisionPoly::zero();
            for b in &cc.bases {
                rhs.add_assign(&prog.new_sos_poly(b).0);
            }
            for (lam, row) in fixed.iter().zip(&rows) {
                rhs.add_assign(&row.mul_real(&lam.dropped(1e-14)));
            }
            prog.require_zero(&target.sub(&rhs));
        }
        planes.push(plane);
    }

    // Face-pushing rows and objective.
    let limits = scene.tree.tc_limits();
    let reach = corner_reach(&limits.lower, &limits.upper, &e.center);
    let m = prog.model_mut();
    let mut cost = LinExpr::constant(0.0);
    for (c, d) in cvars.iter().zip(&dvars) {
        let delta = m.new_var();
        m.add_nonneg(delta.clone());
        let mut slack = d.minus(&delta);
        let mut at_center = d.clone();
        let mut at_seed = d.clone();
        for i in 0..n {
            slack = slack.minus(&scaled(&c[i], e.center[i]));
            at_center = at_center.minus(&scaled(&c[i], e.center[i]));
            at_seed = at_seed.minus(&scaled(&c[i], seed[i]));
        }
        let mut cone = vec![slack];
        for i in 0..n {
            let mut qc = LinExpr::constant(0.0);
            for k in 0..n {
                qc = qc.plus(&scaled(&c[k], e.q[(i, k)]));
            }
            cone.push(qc);
        }
        m.add_soc(cone);
        m.add_nonneg(at_seed);
        m.add_nonneg(LinExpr::constant(reach).minus(&at_center));
        let mut unit = vec![LinExpr::constant(1.0)];
        unit.extend(c.iter().cloned());
        m.add_soc(unit);
        let t = m.new_var();
        m.add_exp([t.clone(), LinExpr::constant(1.0), delta.plus(&LinExpr::constant(opts.eps0))]);
        cost = cost.minus(&t);
    }
    m.minimize(cost);

    let res = prog.solve(&opts.certify.settings, opts.certify.tol);
    if res.status != SolveStatus::Feasible {
        log::debug!(
            "growth step rejected: {:?} {:?} eig {:.2e} residual {:.2e}",
            res.status,
            res.backend,
            res.worst_eig(),
            res.max_eq_residual
        );
        return Ok(None);
    }
    let mut c = p.c.clone();
    let mut d = p.d.clone();
    for (k, &j) in learned.iter().enumerate() {
        for i in 0..n {
            c[(j, i)] = cvars[k][i].eval(&res.x);
        }
        d[j] = dvars[k].eval(&res.x);
    }
    let grown = TcPolytope::new(c, d, p.kinds.clone())?.normalized();
    Ok(Some((grown, planes.iter().map(|pl| pl.value(&res.x)).collect())))
}

/// Distance from `center` to the farthest corner of the limit box; rows
/// farther than this are redundant.
fn corner_reach(lower: &[f64], upper: &[f64], center: &DVector<f64>) -> f64 {
    lower
        .iter()
        .zip(upper)
        .enumerate()
        .map(|(i, (&l, &u))| (l - center[i]).abs().max((u - center[i]).abs()).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Smallest uniform contraction of the learned rows, within `bisect_tol`,
/// whose result certifies.
pub fn contract_to_feasible(
    scene: &Scene,
    pairs: &[CollisionPair],
    p: &TcPolytope,
    delta_max: f64,
    bisect_tol: f64,
    opts: &CertifyOptions,
) -> Result<(TcPolytope, PolytopeReport, f64)> {
    let report = certify_polytope(scene, pairs, p, opts)?;
    if report.certified() {
        return Ok((p.clone(), report, 0.0));
    }
    let attempt = |delta: f64| -> Result<Option<(TcPolytope, PolytopeReport)>> {
        let q = p.contracted(delta);
        match q.chebyshev_center() {
            Ok((_, r)) if r > 1e-9 => {}
            Ok(_) | Err(Error::EmptyPolytope) => return Ok(None),
            Err(e) => return Err(e),
        }
        let rep = certify_polytope(scene, pairs, &q, opts)?;
        Ok(rep.certified().then_some((q, rep)))
    };
    let Some(mut best) = attempt(delta_max)? else {
        return Err(Error::Certification(format!(
            "contraction by {delta_max} does not certify: {}",
            failure_summary(scene, pairs, &report)
        )));
    };
    let (mut lo, mut hi) = (0.0, delta_max);
    while hi - lo > bisect_tol {
        let mid = 0.5 * (lo + hi);
        match attempt(mid)? {
            Some(found) => {
                best = found;
                hi = mid;
            }
            None => lo = mid,
        }
    }
    Ok((best.0, best.1, hi))
}

fn failure_summary(scene: &Scene, pairs: &[CollisionPair], report: &PolytopeReport) -> String {
    pairs
        .iter()
        .zip(&report.outcomes)
        .filter(|(_, o)| o.certificate().is_none())
        .map(|(pr, o)| format!("{}/{} {}", scene.bodies[pr.a].name, scene.bodies[pr.b].name, o.label()))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Clone, Debug)]
pub struct AlternationOptions {
    /// Stop when the relative volume gain of one iteration falls below this.
    pub tol: f64,
    pub max_iters: usize,
    pub grow: GrowOptions,
    /// Contraction range and resolution used when a grown polytope does
    /// not re-certify.
    pub contract_max: f64,
    pub contract_tol: f64,
}

impl Default for AlternationOptions {
    fn default() -> Self {
        Self {
            tol: 0.02,
            max_iters: 100,
            grow: GrowOptions::default(),
            contract_max: 0.05,
            contract_tol: 1e-3,
        }
    }
}

/// One row of the iteration log.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub det_q: f64,
    pub certify_secs: f64,
    pub grow_secs: f64,
    pub ellipsoid_secs: f64,
    pub contracted: bool,
}

#[derive(Clone, Debug)]
pub struct AlternationResult {
    pub polytope: TcPolytope,
    pub ellipsoid: Ellipsoid,
    pub report: PolytopeReport,
    pub log: Vec<IterationRecord>,
}

impl AlternationResult {
    /// `det Q` of the last ellipsoid over the first.
    pub fn volume_ratio(&self) -> f64 {
        match (self.log.first(), self.log.last()) {
            (Some(a), Some(b)) if a.det_q > 0.0 => b.det_q / a.det_q,
            _ => 1.0,
        }
    }
}

/// Alternates certification, ellipsoid fitting and growth from a
/// certifiable `p0`.
pub fn bilinear_alternation(
    scene: &Scene,
    pairs: &[CollisionPair],
    p0: &TcPolytope,
    seed: &[f64],
    opts: &AlternationOptions,
) -> Result<AlternationResult> {
    let copts = &opts.grow.certify;
    let t = Instant::now();
    let mut report = certify_polytope(scene, pairs, p0, copts)?;
    if !report.certified() {
        return Err(Error::Certification(format!(
            "initial polytope: {}",
            failure_summary(scene, pairs, &report)
        )));
    }
    let certify_secs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let mut ellipsoid = max_inscribed_ellipsoid(p0)?;
    let mut log = vec![IterationRecord {
        iteration: 0,
        det_q: ellipsoid.det(),
        certify_secs,
        grow_secs: 0.0,
        ellipsoid_secs: t.elapsed().as_secs_f64(),
        contracted: false,
    }];
    let mut polytope = p0.clone();
    for iteration in 1..=opts.max_iters {
        let t = Instant::now();
        let certs = report.certificates();
        let Some((grown, _)) = grow_polytope(scene, pairs, &polytope, &ellipsoid, &certs, seed, &opts.grow)?
        else {
            break;
        };
        let grow_secs = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let mut next_report = certify_polytope(scene, pairs, &grown, copts)?;
        let mut next = grown;
        let mut contracted = false;
        if !next_report.certified() {
            match contract_to_feasible(scene, pairs, &next, opts.contract_max, opts.contract_tol, copts) {
                Ok((q, rep, delta)) => {
                    log::debug!("iteration {iteration}: contracted by {delta:.4}");
                    next = q;
                    next_report = rep;
                    contracted = true;
                }
                Err(e) => {
                    log::debug!("iteration {iteration}: {e}");
                    break;
                }
            }
        }
        let certify_secs = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let next_ellipsoid = max_inscribed_ellipsoid(&next)?;
        let ellipsoid_secs = t.elapsed().as_secs_f64();
        let (old, new) = (ellipsoid.det(), next_ellipsoid.det());
        if new < old {
            // Keep the previous region so logged volumes never decrease.
            break;
        }
        polytope = next;
        report = next_report;
        ellipsoid = next_ellipsoid;
        log.push(IterationRecord {
            iteration,
            det_q: new,
            certify_secs,
            grow_secs,
            ellipsoid_secs,
            contracted,
        });
        log::info!("iteration {iteration}: det Q {new:.6e}");
        if new / old - 1.0 < opts.tol {
            break;
        }
    }
    Ok(AlternationResult {
        polytope,
        ellipsoid,
        report,
        log,
    })
}
