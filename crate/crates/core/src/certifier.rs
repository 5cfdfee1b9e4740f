//! Per-pair certification of a polytope in tangent configuration space.
//!
//! The primary path searches a separating plane `a(s)ᵀx + b(s)` with SOS
//! multipliers for every plane-side condition. The refutation path proves
//! that no point lies in both bodies for any `s` in the polytope.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{
    membership_conditions, plane_side_conditions, Condition, Membership, PlaneParam, Shape, Side,
    DEFAULT_RADIUS_EPS,
};
use crate::kinematics::RationalPose;
use crate::polyalg::{coordinate_degree_basis, total_degree_basis, Coefficient, Monomial, Polynomial, Var};
use crate::regions::TcPolytope;
use crate::scene::Scene;
use crate::soscomp::{
    aux_var, gram_value_poly, matrix_quadratic_form, min_eigenvalue, RefutationBases, SolveResult,
    SolveStatus, SolverSettings, SosProgram, VerifyTolerances,
};
use crate::{Error, Result};

/// Two bodies checked against each other, with their poses in the frame
/// the separating plane is written in.
#[derive(Clone, Debug)]
pub struct CollisionPair {
    pub id: usize,
    pub a: usize,
    pub b: usize,
    pub frame: usize,
    pub fk_a: RationalPose,
    pub fk_b: RationalPose,
    /// Variables of the joints between the two links.
    pub chain_vars: Vec<Var>,
}

/// Pairs of bodies on distinct links, minus exclusions.
pub fn collision_pairs(scene: &Scene) -> Result<Vec<CollisionPair>> {
    let tree = &scene.tree;
    scene
        .checked_pairs()
        .into_iter()
        .enumerate()
        .map(|(id, (a, b))| {
            let (la, lb) = (scene.bodies[a].link, scene.bodies[b].link);
            let frame = tree.select_expressed_frame(la, lb);
            let mut chain_vars: Vec<Var> = tree.joints_between(la, lb).into_iter().map(|j| tree.var(j)).collect();
            chain_vars.sort();
            Ok(CollisionPair {
                id,
                a,
                b,
                frame,
                fk_a: tree.rational_fk(frame, la)?,
                fk_b: tree.rational_fk(frame, lb)?,
                chain_vars,
            })
        })
        .collect()
}

/// Variables the plane coefficients may depend on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaneVars {
    All,
    Chain,
}

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    /// Total degree of `a(s)` and `b(s)`.
    pub plane_degree: u32,
    pub plane_vars: PlaneVars,
    /// Coordinate degree of the multiplier Gram basis; multipliers have
    /// twice this degree.
    pub basis_degree: u32,
    /// Retry once with `basis_degree + 1` on an infeasible pair.
    pub escalate: bool,
    pub radius_eps: f64,
    /// Stop scheduling pairs after the first failure.
    pub early_exit: bool,
    pub settings: SolverSettings,
    pub tol: VerifyTolerances,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            plane_degree: 1,
            plane_vars: PlaneVars::All,
            basis_degree: 1,
            escalate: true,
            radius_eps: DEFAULT_RADIUS_EPS,
            early_exit: true,
            settings: SolverSettings::default(),
            tol: VerifyTolerances::default(),
        }
    }
}

/// Multipliers of one plane-side condition. Scalar conditions have one
/// basis; matrix conditions have one per auxiliary coordinate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionCertificate {
    pub matrix: bool,
    pub bases: Vec<Vec<Monomial>>,
    pub lambda0: Vec<DMatrix<f64>>,
    /// `lambdas[row][k]`.
    pub lambdas: Vec<Vec<DMatrix<f64>>>,
}

impl ConditionCertificate {
    /// `λ0` and `λ_j` as polynomials, summed over auxiliary coordinates.
    pub fn multiplier_polys(&self) -> (Polynomial, Vec<Polynomial>) {
        let sum = |grams: &[DMatrix<f64>]| {
            grams
                .iter()
                .zip(&self.bases)
                .fold(Polynomial::zero(), |acc, (g, b)| acc.add(&gram_value_poly(b, g)))
        };
        (sum(&self.lambda0), self.lambdas.iter().map(|l| sum(l)).collect())
    }

    fn min_eig(&self) -> f64 {
        self.lambda0
            .iter()
            .chain(self.lambdas.iter().flatten())
            .map(min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlaneCertificate {
    pub pair: usize,
    pub body_a: String,
    pub body_b: String,
    pub frame: usize,
    pub plane: PlaneParam,
    pub basis_degree: u32,
    pub conditions: Vec<ConditionCertificate>,
    pub max_gram: usize,
    pub min_eig: f64,
    pub max_residual: f64,
    pub solve_time: f64,
}

#[derive(Clone, Debug)]
pub enum PairOutcome {
    Certified(PlaneCertificate),
    /// No certificate at this degree; not a proof of collision.
    Infeasible(String),
    Indeterminate(String),
    /// Not attempted after an earlier failure.
    Skipped,
}

impl PairOutcome {
    pub fn certificate(&self) -> Option<&PlaneCertificate> {
        match self {
            PairOutcome::Certified(c) => Some(c),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PairOutcome::Certified(_) => "certified",
            PairOutcome::Infeasible(_) => "infeasible",
            PairOutcome::Indeterminate(_) => "indeterminate",
            PairOutcome::Skipped => "skipped",
        }
    }
}

#[derive(Clone, Debug)]
pub struct PolytopeReport {
    pub outcomes: Vec<PairOutcome>,
    pub elapsed: f64,
}

impl PolytopeReport {
    pub fn certified(&self) -> bool {
        self.outcomes.iter().all(|o| matches!(o, PairOutcome::Certified(_)))
    }

    pub fn certificates(&self) -> Vec<PlaneCertificate> {
        self.outcomes.iter().filter_map(|o| o.certificate().cloned()).collect()
    }

    pub fn max_gram(&self) -> usize {
        self.outcomes
            .iter()
            .filter_map(|o| o.certificate().map(|c| c.max_gram))
            .max()
            .unwrap_or(0)
    }
}

/// Variables of the polytope, `Var(0..n)`.
pub fn polytope_vars(n: usize) -> Vec<Var> {
    (0..n as u32).map(Var).collect()
}

/// Monomials of the plane coefficients.
pub fn plane_basis(pair: &CollisionPair, n: usize, opts: &CertifyOptions) -> Vec<Monomial> {
    let vars = match opts.plane_vars {
        PlaneVars::All => polytope_vars(n),
        PlaneVars::Chain => pair.chain_vars.clone(),
    };
    total_degree_basis(&vars, opts.plane_degree)
}

/// Plane-side conditions of a pair: body A positive, body B negative.
pub fn pair_conditions<C: Coefficient>(
    scene: &Scene,
    pair: &CollisionPair,
    plane: &PlaneParam<C>,
    eps: f64,
) -> Vec<Condition<C>> {
    let mut out = plane_side_conditions(&scene.bodies[pair.a].shape, Side::Positive, plane, &pair.fk_a, eps);
    out.extend(plane_side_conditions(&scene.bodies[pair.b].shape, Side::Negative, plane, &pair.fk_b, eps));
    out
}

fn check_polytope(scene: &Scene, p: &TcPolytope) -> Result<()> {
    if p.dim() != scene.dof() {
        return Err(Error::Dimension { expected: scene.dof(), found: p.dim() });
    }
    if !p.within_limits(&scene.tree.tc_limits(), 1e-9)? {
        return Err(Error::Certification("polytope leaves the joint limits".into()));
    }
    Ok(())
}

fn extract(
    prog: &SosProgram,
    res: &SolveResult,
    handles: &[(bool, Vec<usize>, Vec<Vec<usize>>)],
) -> Vec<ConditionCertificate> {
    handles
        .iter()
        .map(|(matrix, l0, ls)| ConditionCertificate {
            matrix: *matrix,
            bases: l0.iter().map(|&id| prog.gram(id).basis.clone()).collect(),
            lambda0: l0.iter().map(|&id| prog.gram_value(id, &res.x)).collect(),
            lambdas: ls
                .iter()
                .map(|ids| ids.iter().map(|&id| prog.gram_value(id, &res.x)).collect())
                .collect(),
        })
        .collect()
}

/// Adds the multiplier identities of `conds` to `prog` and returns, per
/// condition, whether it is a matrix condition and its Gram ids.
#[allow(clippy::type_complexity)]
pub(crate) fn add_conditions(
    prog: &mut SosProgram,
    conds: &[Condition<crate::soscomp::LinExpr>],
    rows: &[Polynomial],
    mult_basis: &[Monomial],
) -> Result<Vec<(bool, Vec<usize>, Vec<Vec<usize>>)>> {
    let mut handles = Vec::with_capacity(conds.len());
    for cond in conds {
        match cond {
            Condition::Scalar(p) => {
                let m = prog.putinar_nonneg(p, rows, mult_basis)?;
                handles.push((false, vec![m.lambda0], m.lambdas.iter().map(|&l| vec![l]).collect()));
            }
            Condition::Matrix(mat) => {
                let m = prog.lower_matrix_sos(mat, rows, mult_basis, 0)?;
                handles.push((true, m.lambda0, m.lambdas));
            }
        }
    }
    Ok(handles)
}

fn certify_pair_at(
    scene: &Scene,
    pair: &CollisionPair,
    p: &TcPolytope,
    opts: &CertifyOptions,
    degree: u32,
) -> Result<PairOutcome> {
    let start = Instant::now();
    let n = p.dim();
    let rows = p.row_polys();
    let mult_basis = coordinate_degree_basis(&polytope_vars(n), degree)?;
    let pb = plane_basis(pair, n, opts);
    let mut prog = SosProgram::new();
    let plane = PlaneParam {
        a: std::array::from_fn(|_| prog.new_free_poly(&pb)),
        b: prog.new_free_poly(&pb),
        frame: pair.frame,
    };
    let conds = pair_conditions(scene, pair, &plane, opts.radius_eps);
    let handles = match add_conditions(&mut prog, &conds, &rows, &mult_basis) {
        Ok(h) => h,
        Err(Error::Structure(msg)) => return Ok(PairOutcome::Infeasible(msg)),
        Err(e) => return Err(e),
    };
    let res = prog.solve(&opts.settings, opts.tol);
    match res.status {
        SolveStatus::Feasible => {
            let conditions = extract(&prog, &res, &handles);
            let min_eig = conditions.iter().map(|c| c.min_eig()).fold(f64::INFINITY, f64::min);
            Ok(PairOutcome::Certified(PlaneCertificate {
                pair: pair.id,
                body_a: scene.bodies[pair.a].name.clone(),
                body_b: scene.bodies[pair.b].name.clone(),
                frame: pair.frame,
                plane: plane.value(&res.x),
                basis_degree: degree,
                conditions,
                max_gram: prog.max_gram_size(),
                min_eig,
                max_residual: res.max_eq_residual,
                solve_time: start.elapsed().as_secs_f64(),
            }))
        }
        SolveStatus::Infeasible => Ok(PairOutcome::Infeasible(res.detail)),
        SolveStatus::Indeterminate => Ok(PairOutcome::Indeterminate(format!(
            "{:?}: worst eig {:.3e}, residual {:.3e}; {}",
            res.backend,
            res.worst_eig(),
            res.max_eq_residual,
            res.detail
        ))),
    }
}

/// Searches a separating plane and multipliers for one pair over `p`,
/// escalating the multiplier degree once if configured.
pub fn certify_pair_plane(
    scene: &Scene,
    pair: &CollisionPair,
    p: &TcPolytope,
    opts: &CertifyOptions,
) -> Result<PairOutcome> {
    check_polytope(scene, p)?;
    certify_pair_unchecked(scene, pair, p, opts)
}

fn certify_pair_unchecked(
    scene: &Scene,
    pair: &CollisionPair,
    p: &TcPolytope,
    opts: &CertifyOptions,
) -> Result<PairOutcome> {
    let first = certify_pair_at(scene, pair, p, opts, opts.basis_degree)?;
    if opts.escalate && !matches!(first, PairOutcome::Certified(_)) {
        log::debug!("pair {} escalates to basis degree {}", pair.id, opts.basis_degree + 1);
        return certify_pair_at(scene, pair, p, opts, opts.basis_degree + 1);
    }
    Ok(first)
}

/// Certifies every pair, in parallel, merged in pair order.
pub fn certify_polytope(
    scene: &Scene,
    pairs: &[CollisionPair],
    p: &TcPolytope,
    opts: &CertifyOptions,
) -> Result<PolytopeReport> {
    let start = Instant::now();
    check_polytope(scene, p)?;
    let stop = AtomicBool::new(false);
    let outcomes: Vec<Result<PairOutcome>> = pairs
        .par_iter()
        .map(|pair| {
            if stop.load(Ordering::Relaxed) {
                return Ok(PairOutcome::Skipped);
            }
            let out = certify_pair_unchecked(scene, pair, p, opts);
            if opts.early_exit && !matches!(out, Ok(PairOutcome::Certified(_))) {
                stop.store(true, Ordering::Relaxed);
            }
            out
        })
        .collect();
    Ok(PolytopeReport {
        outcomes: outcomes.into_iter().collect::<Result<_>>()?,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// Numeric plane at `s0` and the separation margins
/// `min_A(aᵀx + b) > 0 > max_B(aᵀx + b)` of a certified pair.
#[derive(Clone, Copy, Debug)]
pub struct Margins {
    pub a: Vector3<f64>,
    pub b: f64,
    pub min_a: f64,
    pub max_b: f64,
}

impl Margins {
    pub fn separates(&self) -> bool {
        self.min_a > 0.0 && self.max_b < 0.0
    }
}

pub fn evaluate_certificate(
    scene: &Scene,
    pair: &CollisionPair,
    p: &TcPolytope,
    cert: &PlaneCertificate,
    s0: &[f64],
) -> Result<Margins> {
    if !p.contains(s0, 1e-9) {
        return Err(Error::OutsidePolytope(s0.to_vec()));
    }
    let (a, b) = cert.plane.eval(s0);
    let body_a = scene.bodies[pair.a].posed(&scene.tree, s0, pair.frame);
    let body_b = scene.bodies[pair.b].posed(&scene.tree, s0, pair.frame);
    Ok(Margins {
        a,
        b,
        min_a: body_a.min_plane_value(&a, b),
        max_b: -body_b.min_plane_value(&-a, -b),
    })
}

/// Result of re-checking a stored certificate from scratch.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CertificateCheck {
    /// Largest coefficient mismatch of any multiplier identity.
    pub max_residual: f64,
    pub min_eig: f64,
}

impl CertificateCheck {
    pub fn passes(&self, tol: VerifyTolerances) -> bool {
        self.max_residual <= tol.eq && self.min_eig >= -tol.eig
    }
}

/// Rebuilds the condition polynomials from the scene and the stored plane
/// and checks every multiplier identity and Gram matrix.
pub fn verify_plane_certificate(
    scene: &Scene,
    pair: &CollisionPair,
    p: &TcPolytope,
    cert: &PlaneCertificate,
    eps: f64,
) -> Result<CertificateCheck> {
    let conds = pair_conditions(scene, pair, &cert.plane, eps);
    if conds.len() != cert.conditions.len() {
        return Err(Error::Certification(format!(
            "certificate has {} conditions, scene implies {}",
            cert.conditions.len(),
            conds.len()
        )));
    }
    let rows = p.row_polys();
    let mut max_residual: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for (cond, cc) in conds.iter().zip(&cert.conditions) {
        if cc.lambdas.len() != rows.len() {
            return Err(Error::Certification("multiplier count does not match polytope rows".into()));
        }
        let target = match cond {
            Condition::Scalar(q) => q.clone(),
            Condition::Matrix(m) => {
                let s_basis = cc.bases.first().map(|b| strip_aux(b)).unwrap_or_default();
                matrix_quadratic_form(m, &s_basis, 0)?.0
            }
        };
        let (l0, ls) = cc.multiplier_polys();
        let mut rhs = l0;
        for (l, r) in ls.iter().zip(&rows) {
            rhs = rhs.add(&l.mul(r));
        }
        max_residual = max_residual.max(target.sub(&rhs).max_abs_coefficient());
        min_eig = min_eig.min(cc.min_eig());
    }
    Ok(CertificateCheck { max_residual, min_eig })
}

/// Monomials of a lowered basis that involve no auxiliary variable.
fn strip_aux(basis: &[Monomial]) -> Vec<Monomial> {
    basis
        .iter()
        .filter(|m| m.vars().all(|v| v.0 < crate::soscomp::AUX_VAR_BASE))
        .cloned()
        .collect()
}

#[derive(Clone, Debug)]
pub struct RefuteOptions {
    /// Coordinate degree in `s` of the `λ0` Gram basis.
    pub basis_degree: u32,
    pub escalate: bool,
    /// Allow capsule and cylinder bodies (high-degree memberships).
    pub allow_curved: bool,
    /// Also impose the redundant products of each linear membership
    /// inequality with each polytope row.
    pub row_products: bool,
    pub settings: SolverSettings,
    pub tol: VerifyTolerances,
}

impl Default for RefuteOptions {
    fn default() -> Self {
        Self {
            basis_degree: 1,
            escalate: true,
            allow_curved: false,
            row_products: true,
            settings: SolverSettings::default(),
            tol: VerifyTolerances::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefutationCertificate {
    pub pair: usize,
    pub basis_degree: u32,
    pub lambda0_basis: Vec<Monomial>,
    pub lambda0: DMatrix<f64>,
    pub max_gram: usize,
    pub min_eig: f64,
    pub max_residual: f64,
    pub solve_time: f64,
}

#[derive(Clone, Debug)]
pub enum RefuteOutcome {
    Certified(RefutationCertificate),
    Infeasible(String),
    Indeterminate(String),
}

impl RefuteOutcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, RefuteOutcome::Certified(_))
    }
}

fn is_static(fk: &RationalPose) -> bool {
    fk.vars().is_empty()
}

/// Membership of `x` in a body. Polytopes drop their last weight through
/// `Σμ = 1`; a static polytope also returns `x` as an expression in its
/// weights so the caller can eliminate it. Spheres on moving links get an
/// auxiliary center `c` with `g·c = f`, which keeps the inequality quadratic.
fn refutation_membership(
    shape: &Shape,
    fk: &RationalPose,
    x: [Var; 3],
    next: &mut impl FnMut() -> Var,
    allow_curved: bool,
) -> Result<(Membership, Option<[Polynomial; 3]>)> {
    match shape {
        Shape::Polytope { vertices } => {
            let (rest, last) = vertices.split_at(vertices.len() - 1);
            let fl = fk.point_numerator(&last[0]);
            let mut e = fl.clone();
            let mut sum = Polynomial::one();
            let mut out = Membership::default();
            for v in rest {
                let mu = next();
                let m = Polynomial::var(mu);
                let f = fk.point_numerator(v);
                for i in 0..3 {
                    e[i] = e[i].add(&f[i].sub(&fl[i]).mul(&m));
                }
                sum = sum.sub(&m);
                out.gammas.push(m);
                out.aux.push(mu);
            }
            out.gammas.push(sum);
            if is_static(fk) {
                let g = fk.den.eval_slice(&[]);
                return Ok((out, Some(e.map(|p| p.scale(1.0 / g)))));
            }
            for i in 0..3 {
                out.hs.push(Polynomial::var(x[i]).mul(&fk.den).sub(&e[i]));
            }
            Ok((out, None))
        }
        Shape::Sphere { center, radius } if !is_static(fk) => {
            let c = [next(), next(), next()];
            let f = fk.point_numerator(center);
            let mut out = Membership::default();
            let mut gamma = Polynomial::constant(radius * radius);
            for i in 0..3 {
                let ci = Polynomial::var(c[i]);
                out.hs.push(ci.mul(&fk.den).sub(&f[i]));
                let d = Polynomial::var(x[i]).sub(&ci);
                gamma = gamma.sub(&d.mul(&d));
            }
            out.gammas.push(gamma);
            out.aux = c.to_vec();
            Ok((out, None))
        }
        Shape::Capsule { .. } | Shape::Cylinder { .. } if !allow_curved => Err(Error::Structure(format!(
            "refutation of {} bodies is disabled",
            shape.kind_name()
        ))),
        _ => Ok((membership_conditions(shape, fk, x, next), None)),
    }
}

/// Proves that the two bodies of `pair` share no point for any `s ∈ p`.
/// Written in the frame of a polytope body's link when there is one, so
/// that body is static and the common point is eliminated.
pub fn certify_pair_refutation(
    scene: &Scene,
    pair: &CollisionPair,
    p: &TcPolytope,
    opts: &RefuteOptions,
) -> Result<RefuteOutcome> {
    check_polytope(scene, p)?;
    let first = refute_at(scene, pair, p, opts, opts.basis_degree)?;
    if opts.escalate && !first.is_certified() {
        return refute_at(scene, pair, p, opts, opts.basis_degree + 1);
    }
    Ok(first)
}

fn refute_at(
    scene: &Scene,
    pair: &CollisionPair,
    p: &TcPolytope,
    opts: &RefuteOptions,
    degree: u32,
) -> Result<RefuteOutcome> {
    let start = Instant::now();
    let (mut ba, mut bb) = (&scene.bodies[pair.a], &scene.bodies[pair.b]);
    if !matches!(ba.shape, Shape::Polytope { .. }) && matches!(bb.shape, Shape::Polytope { .. }) {
        std::mem::swap(&mut ba, &mut bb);
    }
    let fk_a = scene.tree.rational_fk(ba.link, ba.link)?;
    let fk_b = scene.tree.rational_fk(ba.link, bb.link)?;
    let x = [aux_var(0), aux_var(1), aux_var(2)];
    let mut counter = 3u32;
    let mut next = || {
        counter += 1;
        aux_var(counter - 1)
    };
    let (ma, point) = refutation_membership(&ba.shape, &fk_a, x, &mut next, opts.allow_curved)?;
    let (mut mb, _) = refutation_membership(&bb.shape, &fk_b, x, &mut next, opts.allow_curved)?;
    let mut lifts = vec![Monomial::one()];
    match &point {
        Some(e) => {
            for q in mb.gammas.iter_mut().chain(mb.hs.iter_mut()) {
                for i in 0..3 {
                    *q = q.substitute(x[i], &e[i]);
                }
            }
        }
        None => lifts.extend(x.iter().map(|&v| Monomial::var(v))),
    }
    let mut gammas = ma.gammas;
    gammas.extend(mb.gammas);
    let rows = p.row_polys();
    if opts.row_products {
        let linear: Vec<Polynomial> = gammas.iter().filter(|g| g.total_degree() <= 1).cloned().collect();
        for w in &linear {
            gammas.extend(rows.iter().map(|r| w.mul(r)));
        }
    }
    gammas.extend(rows);
    let mut hs = ma.hs;
    hs.extend(mb.hs);
    hs.retain(|h| !h.is_zero());
    lifts.extend(ma.aux.iter().chain(&mb.aux).map(|&v| Monomial::var(v)));
    // The unlifted block goes one degree higher so row multipliers of the
    // lifted products can reach the same degree as in the plane program.
    let vars = polytope_vars(p.dim());
    let s_basis = coordinate_degree_basis(&vars, degree)?;
    let mut z0 = coordinate_degree_basis(&vars, degree + 1)?;
    z0.extend(
        lifts[1..]
            .iter()
            .flat_map(|l| s_basis.iter().map(move |m| l.mul(m))),
    );
    z0.sort();
    z0.dedup();
    let bases = RefutationBases::from_lambda0(&z0, &gammas, &hs);
    let mut prog = SosProgram::new();
    let mults = match prog.putinar_refutation(&gammas, &hs, &bases) {
        Ok(m) => m,
        Err(Error::Structure(msg)) => return Ok(RefuteOutcome::Infeasible(msg)),
        Err(e) => return Err(e),
    };
    let res = prog.solve(&opts.settings, opts.tol);
    Ok(match res.status {
        SolveStatus::Feasible => RefuteOutcome::Certified(RefutationCertificate {
            pair: pair.id,
            basis_degree: degree,
            lambda0_basis: z0,
            lambda0: prog.gram_value(mults.lambda0, &res.x),
            max_gram: prog.max_gram_size(),
            min_eig: res.worst_eig(),
            max_residual: res.max_eq_residual,
            solve_time: start.elapsed().as_secs_f64(),
        }),
        SolveStatus::Infeasible => RefuteOutcome::Infeasible(res.detail),
        SolveStatus::Indeterminate => RefuteOutcome::Indeterminate(format!(
            "{:?}: worst eig {:.3e}, residual {:.3e}",
            res.backend,
            res.worst_eig(),
            res.max_eq_residual
        )),
    })
}
