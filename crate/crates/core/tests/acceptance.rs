//! Acceptance checks, one line per criterion, then the Gram-block sizes.
//! Criterion names (`c1` ... `c10`) given as arguments select a subset.

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tcfree::bundle::RegionBundle;
use tcfree::certifier::{
    certify_pair_refutation, certify_polytope, collision_pairs, CollisionPair, RefuteOptions, RefuteOutcome,
};
use tcfree::geometry::gjk::distance;
use tcfree::geometry::{
    fixed_intersection_point, fixed_separating_plane, plane_side_conditions, Condition, PlaneParam, Shape, Side,
};
use tcfree::kinematics::{JointKind, KinematicTree, Pose, TcLimits, WORLD};
use tcfree::pipeline::{run_pipeline, PipelineOptions, PipelineReport};
use tcfree::polyalg::{coordinate_degree_basis, total_degree_basis};
use tcfree::raster::{collides, rasterize_tcspace};
use tcfree::regions::{max_inscribed_ellipsoid, IterationRecord, TcPolytope};
use tcfree::scene::{parse_scene, Scene};
use tcfree::soscomp::{LinExpr, SolveStatus, SolverSettings, SosProgram, VerifyTolerances};
use tcfree::{Polynomial, Var};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Runs shared between criteria, computed on first use.
#[derive(Default)]
struct Shared {
    pendulum: Option<(Vec<RegionBundle>, PipelineReport, f64)>,
    flipper: Option<(Vec<RegionBundle>, PipelineReport)>,
    grams: Vec<String>,
}

fn scene(name: &str) -> Scene {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenes").join(format!("{name}.toml"));
    parse_scene(path).expect("bundled scene parses")
}

fn pendulum(shared: &mut Shared) -> &(Vec<RegionBundle>, PipelineReport, f64) {
    if shared.pendulum.is_none() {
        let scene = scene("pendulum_on_rail");
        let opts = PipelineOptions { use_seeding: false, ..Default::default() }
            .with_certify(scene.options.certify_options());
        let t = Instant::now();
        let (bundles, report) = run_pipeline(&scene, &scene.seeds, &opts).expect("pipeline runs");
        shared.grams.push(format!("pendulum_on_rail growth: largest {}", report.largest_gram));
        shared.pendulum = Some((bundles, report, t.elapsed().as_secs_f64()));
    }
    shared.pendulum.as_ref().unwrap()
}

fn flipper(shared: &mut Shared) -> &(Vec<RegionBundle>, PipelineReport) {
    if shared.flipper.is_none() {
        let scene = scene("flipper");
        let opts = PipelineOptions::default().with_certify(scene.options.certify_options());
        let (bundles, report) = run_pipeline(&scene, &scene.seeds, &opts).expect("pipeline runs");
        shared.grams.push(format!("flipper seeding pipeline: largest {}", report.largest_gram));
        shared.flipper = Some((bundles, report));
    }
    shared.flipper.as_ref().unwrap()
}

/// 10^5 samples per grown pendulum region, none colliding, in at most
/// ten minutes including growth.
fn c1(shared: &mut Shared) -> Outcome {
    let scene = scene("pendulum_on_rail");
    let pairs = scene.checked_pairs();
    let (bundles, report, grow_secs) = pendulum(shared);
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut hits = 0;
    for b in bundles {
        for s in b.polytope.sample_uniform(&mut rng, 100_000).expect("sampling") {
            if collides(&scene, &pairs, &s).expect("oracle") {
                hits += 1;
            }
        }
    }
    let total = grow_secs + t.elapsed().as_secs_f64();
    outcome(
        report.all_certified() && !bundles.is_empty() && hits == 0 && total <= 600.0,
        format!(
            "{} regions from {} seeds, {} colliding of {} samples, {total:.1} s",
            bundles.len(),
            report.seeds.len(),
            hits,
            bundles.len() * 100_000
        ),
    )
}

fn fk_error(tree: &KinematicTree, link: &str, rng: &mut ChaCha8Rng, count: usize) -> f64 {
    let link = tree.link_index(link).unwrap();
    let fk = tree.rational_fk(WORLD, link).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..count {
        let q: Vec<f64> = tree.joints().iter().map(|j| rng.random_range(j.lower..j.upper)).collect();
        let s = tree.to_tc(&q).unwrap();
        let want = tree.trig_fk(&q, WORLD, link).unwrap();
        let got = fk.eval(&s);
        worst = worst
            .max((got.rotation - want.rotation).amax())
            .max((got.translation - want.translation).amax());
    }
    worst
}

/// Rational forward kinematics against the trigonometric form.
fn c2(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut dp = KinematicTree::new();
    dp.add_joint("j1", JointKind::Revolute, "world", "l1", Pose::identity(), Vector3::z(), (-3.0, 3.0))
        .unwrap();
    dp.add_joint(
        "j2",
        JointKind::Revolute,
        "l1",
        "l2",
        Pose::from_xyz_rpy([1.0, 0.0, 0.0], [0.0; 3]),
        Vector3::z(),
        (-3.0, 3.0),
    )
    .unwrap();
    let mut rpr = KinematicTree::new();
    rpr.add_joint(
        "r1",
        JointKind::Revolute,
        "world",
        "a",
        Pose::from_xyz_rpy([0.1, -0.2, 0.3], [0.2, -0.1, 0.4]),
        Vector3::new(0.0, 0.3, 1.0),
        (-3.0, 3.0),
    )
    .unwrap();
    rpr.add_joint(
        "p",
        JointKind::Prismatic,
        "a",
        "b",
        Pose::from_xyz_rpy([0.4, 0.0, 0.1], [0.3, 0.0, 0.0]),
        Vector3::x(),
        (-0.5, 0.8),
    )
    .unwrap();
    rpr.add_joint(
        "r2",
        JointKind::Revolute,
        "b",
        "c",
        Pose::from_xyz_rpy([0.0, 0.5, 0.0], [0.0, 0.7, -0.2]),
        Vector3::new(0.2, 1.0, 0.3),
        (-3.0, 3.0),
    )
    .unwrap();
    let e1 = fk_error(&dp, "l2", &mut rng, 1000);
    let e2 = fk_error(&rpr, "c", &mut rng, 1000);
    outcome(
        e1 <= 1e-9 && e2 <= 1e-9,
        format!("max error {e1:.2e} double pendulum, {e2:.2e} RPR chain, 1000 configurations each"),
    )
}

fn rand_vec(rng: &mut ChaCha8Rng, r: f64) -> Vector3<f64> {
    Vector3::new(rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r))
}

fn random_shape(rng: &mut ChaCha8Rng, kind: usize) -> Shape {
    let c = rand_vec(rng, 1.0);
    match kind {
        0 => {
            let rot = Rotation3::from_euler_angles(
                rng.random_range(-3.0..3.0),
                rng.random_range(-1.5..1.5),
                rng.random_range(-3.0..3.0),
            );
            let n = rng.random_range(1..9);
            Shape::Polytope { vertices: (0..n).map(|_| c + rot * rand_vec(rng, 0.5)).collect() }
        }
        1 => Shape::Sphere { center: c, radius: rng.random_range(0.1..0.6) },
        _ => {
            let d = rand_vec(rng, 0.5);
            let (r1, r2) = (rng.random_range(0.05..0.4), rng.random_range(0.05..0.4));
            if kind == 2 {
                Shape::Capsule { p1: c + d, p2: c - d, r1, r2 }
            } else {
                Shape::Cylinder { p1: c + d, p2: c - d, r1, r2 }
            }
        }
    }
}

fn translated(shape: &Shape, v: Vector3<f64>) -> Shape {
    shape.transformed(&Pose::new(nalgebra::Matrix3::identity(), v))
}

/// Separated by at least `m`, or still overlapping after any of 26
/// translations of length `m`.
fn margin_class(a: &Shape, b: &Shape, m: f64) -> Option<bool> {
    let d = distance(a, b).distance;
    if d >= m {
        return Some(false);
    }
    if d > 0.0 {
        return None;
    }
    for i in -1..=1 {
        for j in -1..=1 {
            for k in -1..=1 {
                if (i, j, k) == (0, 0, 0) {
                    continue;
                }
                let u = Vector3::new(i as f64, j as f64, k as f64).normalize() * m;
                if distance(a, &translated(b, u)).distance > 0.0 {
                    return None;
                }
            }
        }
    }
    Some(true)
}

/// Exactly one of the fixed separating-plane and intersection-point
/// programs is feasible on pairs with a clear margin.
fn c3(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut ok, mut overlapping, mut checked) = (0, 0, 0);
    let mut bad = Vec::new();
    while checked < 100 {
        let a = random_shape(&mut rng, checked % 4);
        let b = random_shape(&mut rng, (checked / 4) % 4);
        // Alternate overlapping and separated pairs.
        let Some(hit) = margin_class(&a, &b, 1e-4).filter(|&h| h == (checked % 2 == 0)) else { continue };
        let plane = fixed_separating_plane(&a, &b).expect("plane program").is_some();
        let point = fixed_intersection_point(&a, &b).expect("point program").is_some();
        if plane != point && point == hit {
            ok += 1;
        } else {
            bad.push(checked);
        }
        overlapping += hit as usize;
        checked += 1;
    }
    outcome(
        ok == 100,
        format!("{ok}/100 pairs ({overlapping} overlapping), failures {bad:?}"),
    )
}

/// Grid of GJK clearances over the limit box, cell centers row-major.
fn clearance_grid(scene: &Scene, res: usize) -> (TcLimits, Vec<f64>) {
    use rayon::prelude::*;
    let lim = scene.tree.tc_limits();
    let pairs = scene.checked_pairs();
    let h: Vec<f64> = (0..2).map(|k| (lim.upper[k] - lim.lower[k]) / res as f64).collect();
    let grid: Vec<f64> = (0..res * res)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % res, idx / res);
            let s = [lim.lower[0] + (i as f64 + 0.5) * h[0], lim.lower[1] + (j as f64 + 0.5) * h[1]];
            scene.clearance(&s, &pairs)
        })
        .collect();
    (lim, grid)
}

fn grid_points_in(lim: &TcLimits, res: usize, lo: &[f64], hi: &[f64]) -> Vec<usize> {
    let h: Vec<f64> = (0..2).map(|k| (lim.upper[k] - lim.lower[k]) / res as f64).collect();
    let mut out = Vec::new();
    for j in 0..res {
        let y = lim.lower[1] + (j as f64 + 0.5) * h[1];
        if y < lo[1] || y > hi[1] {
            continue;
        }
        for i in 0..res {
            let x = lim.lower[0] + (i as f64 + 0.5) * h[0];
            if x >= lo[0] && x <= hi[0] {
                out.push(j * res + i);
            }
        }
    }
    out
}

/// Boxes clear of obstacles by 0.05 on a 400 × 400 grid certify at the
/// default degree, the rest after one escalation.
fn c4(shared: &mut Shared) -> Outcome {
    let scene = scene("pendulum_on_rail");
    let pairs = collision_pairs(&scene).unwrap();
    let res = 400;
    let (lim, grid) = clearance_grid(&scene, res);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut boxes = Vec::new();
    while boxes.len() < 20 {
        let c: Vec<f64> = (0..2).map(|k| rng.random_range(lim.lower[k]..lim.upper[k])).collect();
        let half: Vec<f64> = (0..2).map(|k| rng.random_range(0.02..0.12) * (lim.upper[k] - lim.lower[k])).collect();
        let lo: Vec<f64> = (0..2).map(|k| c[k] - half[k]).collect();
        let hi: Vec<f64> = (0..2).map(|k| c[k] + half[k]).collect();
        if (0..2).any(|k| lo[k] < lim.lower[k] || hi[k] > lim.upper[k]) {
            continue;
        }
        let cells = grid_points_in(&lim, res, &lo, &hi);
        if cells.is_empty() || cells.iter().any(|&k| grid[k] < 0.05) {
            continue;
        }
        boxes.push(TcPolytope::box_around(&c, &half, &lim).unwrap());
    }
    let base = scene.options.certify_options();
    let plain = tcfree::certifier::CertifyOptions { escalate: false, early_exit: false, ..base.clone() };
    let escalated = tcfree::certifier::CertifyOptions { escalate: true, early_exit: false, ..base };
    let (mut first, mut after, mut gram) = (0, 0, 0);
    for b in &boxes {
        let r = certify_polytope(&scene, &pairs, b, &plain).unwrap();
        if r.certified() {
            first += 1;
            after += 1;
            gram = gram.max(r.max_gram());
            continue;
        }
        let r = certify_polytope(&scene, &pairs, b, &escalated).unwrap();
        if r.certified() {
            after += 1;
            gram = gram.max(r.max_gram());
        }
    }
    shared.grams.push(format!("grid-verified boxes: largest {gram}"));
    outcome(
        first >= 18 && after == 20,
        format!("{first}/20 at the default degree, {after}/20 after escalation"),
    )
}

fn monotone(log: &[IterationRecord]) -> bool {
    log.windows(2).all(|w| w[1].det_q >= w[0].det_q * (1.0 - 1e-8))
}

/// Analytic inscribed ellipsoids and nondecreasing logged volumes.
fn c5(shared: &mut Shared) -> Outcome {
    let unit = TcPolytope::from_limits(&TcLimits { lower: vec![-1.0, -1.0], upper: vec![1.0, 1.0] });
    let rect = TcPolytope::from_limits(&TcLimits { lower: vec![0.0, 0.0], upper: vec![2.0, 4.0] });
    let e1 = max_inscribed_ellipsoid(&unit).unwrap();
    let e2 = max_inscribed_ellipsoid(&rect).unwrap();
    let err1 = (&e1.q - DMatrix::identity(2, 2)).amax().max(e1.center.amax());
    let q2 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
    let err2 = (&e2.q - q2).amax().max((&e2.center - DVector::from_vec(vec![1.0, 2.0])).amax());
    let mut logs = 0;
    let mut bad = 0;
    let pend: Vec<Vec<IterationRecord>> = pendulum(shared).0.iter().map(|b| b.log.clone()).collect();
    let flip: Vec<Vec<IterationRecord>> = flipper(shared).0.iter().map(|b| b.log.clone()).collect();
    for log in pend.iter().chain(&flip) {
        logs += 1;
        bad += !monotone(log) as usize;
    }
    outcome(
        err1 <= 1e-6 && err2 <= 1e-6 && bad == 0 && logs > 0,
        format!("unit box error {err1:.2e}, rectangle error {err2:.2e}, {bad} of {logs} logs decrease"),
    )
}

/// Tenfold ellipsoid growth from a 0.01-side octagon in at most 100
/// iterations.
fn c6(shared: &mut Shared) -> Outcome {
    let (bundles, report, _) = pendulum(shared);
    let first = &report.seeds[0];
    let log = bundles.first().map(|b| b.log.as_slice()).unwrap_or(&[]);
    let ok = first.error.is_none() && first.iterations <= 100 && first.volume_ratio >= 10.0;
    outcome(
        ok && !log.is_empty(),
        format!(
            "seed {:?}: det Q ratio {:.1} after {} iterations",
            first.seed, first.volume_ratio, first.iterations
        ),
    )
}

/// Five seeds cover 80 % of the free raster cells of the flipper scene.
fn c7(shared: &mut Shared) -> Outcome {
    let scene = scene("flipper");
    let raster = rasterize_tcspace(&scene, 200).unwrap();
    let (bundles, report) = flipper(shared);
    let regions: Vec<TcPolytope> = bundles.iter().map(|b| b.polytope.clone()).collect();
    let cov = raster.coverage(&regions);
    let inside = raster.collisions_inside(&regions).len();
    outcome(
        report.all_certified() && report.seeds.len() == 5 && cov >= 0.8,
        format!(
            "coverage {cov:.3} of {} free cells (200 x 200), {} regions, {inside} collision cells inside",
            raster.free_count(),
            regions.len()
        ),
    )
}

fn is_curved(shape: &Shape) -> bool {
    matches!(shape, Shape::Capsule { .. } | Shape::Cylinder { .. })
}

/// Sampled oracle for one pair: true if some point of `p` collides.
fn pair_collides(scene: &Scene, pair: &CollisionPair, p: &TcPolytope, rng: &mut ChaCha8Rng) -> bool {
    let pts = p.sample_uniform(rng, 2000).unwrap();
    pts.iter().any(|s| {
        let a = scene.bodies[pair.a].posed(&scene.tree, s, WORLD);
        let b = scene.bodies[pair.b].posed(&scene.tree, s, WORLD);
        distance(&a, &b).distance == 0.0
    })
}

/// Refutation of polytope/sphere pairs on small octagons: never on a
/// colliding one, and on most free ones at the default degree.
fn c8(shared: &mut Shared) -> Outcome {
    let scene = scene("pendulum_on_rail");
    let lim = scene.tree.tc_limits();
    let pairs: Vec<CollisionPair> = collision_pairs(&scene)
        .unwrap()
        .into_iter()
        .filter(|p| {
            let (a, b) = (&scene.bodies[p.a].shape, &scene.bodies[p.b].shape);
            !is_curved(a)
                && !is_curved(b)
                && (matches!(a, Shape::Sphere { .. }) != matches!(b, Shape::Sphere { .. }))
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut free, mut hit) = (Vec::new(), Vec::new());
    let mut k = 0;
    while free.len() < 20 || hit.len() < 10 {
        let pair = &pairs[k % pairs.len()];
        let c: Vec<f64> = (0..2).map(|i| rng.random_range(lim.lower[i]..lim.upper[i])).collect();
        let side = rng.random_range(0.02..0.1);
        let Ok(p) = TcPolytope::octagon(&c, side, &lim) else { continue };
        let collides = pair_collides(&scene, pair, &p, &mut rng);
        // Free polytopes are kept only near their obstacle.
        let a = scene.bodies[pair.a].posed(&scene.tree, &c, WORLD);
        let b = scene.bodies[pair.b].posed(&scene.tree, &c, WORLD);
        let near = distance(&a, &b).distance < 0.3;
        if collides && hit.len() < 10 {
            hit.push((k % pairs.len(), p));
            k += 1;
        } else if !collides && near && free.len() < 20 {
            free.push((k % pairs.len(), p));
            k += 1;
        }
    }
    let plain = RefuteOptions { escalate: false, ..Default::default() };
    let escalated = RefuteOptions::default();
    let mut gram = 0;
    let mut note = |out: &RefuteOutcome| {
        if let RefuteOutcome::Certified(c) = out {
            gram = gram.max(c.max_gram);
        }
    };
    let mut unsound = 0;
    for (i, p) in &hit {
        let out = certify_pair_refutation(&scene, &pairs[*i], p, &escalated).unwrap();
        note(&out);
        unsound += out.is_certified() as usize;
    }
    let (mut first, mut after) = (0, 0);
    for (i, p) in &free {
        let out = certify_pair_refutation(&scene, &pairs[*i], p, &plain).unwrap();
        note(&out);
        if out.is_certified() {
            first += 1;
            after += 1;
            continue;
        }
        let out = certify_pair_refutation(&scene, &pairs[*i], p, &escalated).unwrap();
        note(&out);
        after += out.is_certified() as usize;
    }
    shared.grams.push(format!("refutation: largest {gram}"));
    outcome(
        unsound == 0 && first >= 15 && after == 20,
        format!(
            "{unsound}/10 colliding refuted, {first}/20 free at the default degree, {after}/20 after escalation, {} pairs",
            pairs.len()
        ),
    )
}

fn const_plane(a: Vector3<f64>, b: f64) -> PlaneParam {
    PlaneParam {
        a: std::array::from_fn(|i| Polynomial::constant(a[i])),
        b: Polynomial::constant(b),
        frame: WORLD,
    }
}

/// Cylinder end-cap matrix conditions against 64 rim samples.
fn c9(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut disagree, mut feasible, mut ends) = (0, 0, 0);
    for _ in 0..1000 {
        let mut tree = KinematicTree::new();
        let origin = Pose::from_xyz_rpy(
            [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)],
            [rng.random_range(-3.0..3.0), rng.random_range(-1.5..1.5), rng.random_range(-3.0..3.0)],
        );
        let axis = rand_vec(&mut rng, 1.0);
        tree.add_joint("j", JointKind::Revolute, "world", "arm", origin, axis, (-2.5, 2.5)).unwrap();
        let fk = tree.rational_fk(WORLD, tree.link_index("arm").unwrap()).unwrap();
        let shape = random_shape(&mut rng, 3);
        let Shape::Cylinder { p1, p2, r1, r2 } = shape else { unreachable!() };
        let (a, b) = (rand_vec(&mut rng, 2.0), rng.random_range(-2.0..2.0));
        let s = [rng.random_range(-1.5..1.5)];
        let conds = plane_side_conditions(&shape, Side::Positive, &const_plane(a, b), &fk, 0.0);
        let pose = fk.eval(&s);
        let n = (p1 - p2).normalize();
        let u = n.cross(&if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() }).normalize();
        let v = n.cross(&u);
        for (k, (end, r)) in [(p1, r1), (p2, r2)].into_iter().enumerate() {
            let Condition::Matrix(_) = &conds[k] else { panic!("cylinder ends are matrix conditions") };
            let eig = conds[k].eval(&s);
            let rim = (0..64)
                .map(|q| {
                    let phi = q as f64 * std::f64::consts::TAU / 64.0;
                    a.dot(&pose.apply(&(end + (u * phi.cos() + v * phi.sin()) * r))) + b
                })
                .fold(f64::INFINITY, f64::min);
            let (m_ok, r_ok) = (eig >= -1e-8, rim >= -1e-8);
            disagree += (m_ok != r_ok) as usize;
            feasible += m_ok as usize;
            ends += 1;
        }
    }
    outcome(
        disagree == 0,
        format!("{disagree} disagreements over {ends} end caps ({feasible} satisfied), 1000 poses"),
    )
}

fn lin(p: &Polynomial) -> tcfree::soscomp::DecisionPoly {
    p.map_coefficients(|&c| LinExpr::constant(c))
}

/// Constructed sums of squares are feasible; polynomials negative on a
/// box are never certified nonnegative there.
fn c10(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let settings = SolverSettings::default();
    let tol = VerifyTolerances::default();
    let mut feasible = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=3);
        let vars: Vec<Var> = (0..n).map(|i| Var(i as u32)).collect();
        let basis = total_degree_basis(&vars, 2);
        let mut p = Polynomial::zero();
        for _ in 0..rng.random_range(1..=4) {
            let q = Polynomial::from_terms(basis.iter().map(|m| (m.clone(), rng.random_range(-1.0..1.0))));
            p = p.add(&q.mul(&q));
        }
        let mut prog = SosProgram::new();
        prog.require_sos(&lin(&p), &basis);
        feasible += (prog.solve(&settings, tol).status == SolveStatus::Feasible) as usize;
    }
    let mut certified = 0;
    for _ in 0..20 {
        let n = rng.random_range(1..=2);
        let vars: Vec<Var> = (0..n).map(|i| Var(i as u32)).collect();
        let support = total_degree_basis(&vars, 2);
        let q = Polynomial::from_terms(support.iter().map(|m| (m.clone(), rng.random_range(-1.0..1.0))));
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        // Shift so that q(x) = −δ at a point x of the box.
        let delta = rng.random_range(1e-3..0.5);
        let p = q.sub(&Polynomial::constant(q.eval_slice(&x) + delta));
        assert!(p.eval_slice(&x) < 0.0);
        let rows: Vec<Polynomial> = vars
            .iter()
            .flat_map(|&v| [Polynomial::affine(1.0, &[(v, 1.0)]), Polynomial::affine(1.0, &[(v, -1.0)])])
            .collect();
        let basis = coordinate_degree_basis(&vars, 1).unwrap();
        let mut prog = SosProgram::new();
        prog.putinar_nonneg(&lin(&p), &rows, &basis).unwrap();
        certified += (prog.solve(&settings, tol).status == SolveStatus::Feasible) as usize;
    }
    outcome(
        feasible == 100 && certified == 0,
        format!("{feasible}/100 constructed sums of squares feasible, {certified}/20 negative polynomials certified"),
    )
}

type Check = fn(&mut Shared) -> Outcome;

fn main() {
    let checks: [(&str, &str, Check); 10] = [
        ("c1", "soundness sweep", c1),
        ("c2", "rational kinematics", c2),
        ("c3", "strong alternatives", c3),
        ("c4", "grid-verified boxes", c4),
        ("c5", "inscribed ellipsoid", c5),
        ("c6", "growth", c6),
        ("c7", "coverage", c7),
        ("c8", "refutation cross-check", c8),
        ("c9", "cylinder conditions", c9),
        ("c10", "SOS round-trips", c10),
    ];
    let selected: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut shared = Shared::default();
    let mut failed = 0;
    for (name, title, check) in checks {
        if !selected.is_empty() && !selected.iter().any(|s| s == name) {
            continue;
        }
        let t = Instant::now();
        let out = check(&mut shared);
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {name:<4} {title:<24} {} [{:.1} s]", out.detail, t.elapsed().as_secs_f64());
        failed += !out.pass as usize;
    }
    if let Some((_, report, _)) = &shared.pendulum {
        for s in &report.seeds {
            shared.grams.push(format!("pendulum_on_rail seed {:?}: {}", s.seed, s.max_gram));
        }
    }
    if let Some((_, report)) = &shared.flipper {
        for s in &report.seeds {
            shared.grams.push(format!("flipper seed {:?}: {}", s.seed, s.max_gram));
        }
    }
    for g in &shared.grams {
        println!("gram block {g}");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
