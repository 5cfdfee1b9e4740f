use nalgebra::{DMatrix, DVector, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::certifier::{collision_pairs, CertifyOptions};
use crate::geometry::Shape;
use crate::kinematics::{JointKind, KinematicTree, Pose};
use crate::scene::Scene;

fn limits(lower: &[f64], upper: &[f64]) -> TcLimits {
    TcLimits { lower: lower.to_vec(), upper: upper.to_vec() }
}

#[test]
fn unit_box_ellipsoid_is_identity() {
    let p = TcPolytope::from_limits(&limits(&[-1.0, -1.0], &[1.0, 1.0]));
    let e = max_inscribed_ellipsoid(&p).unwrap();
    assert!((&e.q - DMatrix::identity(2, 2)).amax() < 1e-5, "{}", e.q);
    assert!(e.center.amax() < 1e-6);
}

#[test]
fn rectangle_ellipsoid_is_axis_aligned() {
    let p = TcPolytope::from_limits(&limits(&[0.0, 0.0], &[2.0, 4.0]));
    let e = max_inscribed_ellipsoid(&p).unwrap();
    let want = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
    assert!((&e.q - want).amax() < 1e-5, "{}", e.q);
    assert!((&e.center - DVector::from_vec(vec![1.0, 2.0])).amax() < 1e-5);
    assert!((e.det() - 2.0).abs() < 1e-4);
}

#[test]
fn octagon_shape() {
    let lim = limits(&[-5.0, -5.0], &[5.0, 5.0]);
    let p = TcPolytope::octagon(&[1.0, -1.0], 0.1, &lim).unwrap();
    assert_eq!(p.num_rows(), 12);
    assert_eq!(p.rows_of(RowKind::Learned).len(), 8);
    let apothem = 0.1 * (1.0 + 2f64.sqrt()) / 2.0;
    assert!(p.contains(&[1.0 + apothem - 1e-9, -1.0], 0.0));
    assert!(!p.contains(&[1.0 + apothem + 1e-6, -1.0], 0.0));
    let e = max_inscribed_ellipsoid(&p).unwrap();
    assert!((e.q[(0, 0)] - apothem).abs() < 1e-5);
}

#[test]
fn contraction_moves_learned_rows_only() {
    let lim = limits(&[-1.0, -1.0], &[1.0, 1.0]);
    let p = TcPolytope::box_around(&[0.0, 0.0], &[2.0, 0.5], &lim).unwrap();
    let q = p.contracted(0.1);
    for j in 0..p.num_rows() {
        let shift = p.d[j] - q.d[j];
        match p.kinds[j] {
            RowKind::Learned => assert!((shift - 0.1).abs() < 1e-15),
            RowKind::Limit => assert_eq!(shift, 0.0),
        }
    }
    let (lo, hi) = q.bounding_box().unwrap();
    assert!((hi[0] - 1.0).abs() < 1e-7 && (hi[1] - 0.4).abs() < 1e-7, "{lo:?} {hi:?}");
}

#[test]
fn chebyshev_center_and_empty_detection() {
    let lim = limits(&[-1.0, -1.0], &[1.0, 1.0]);
    let p = TcPolytope::box_around(&[0.5, 0.0], &[0.2, 0.3], &lim).unwrap();
    let (x, r) = p.chebyshev_center().unwrap();
    assert!((r - 0.2).abs() < 1e-7 && (x[0] - 0.5).abs() < 1e-7);
    let c = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
    let d = DVector::from_vec(vec![-1.0, 0.0]);
    let empty = TcPolytope::new(c, d, vec![RowKind::Learned; 2]).unwrap();
    assert!(matches!(empty.chebyshev_center(), Err(Error::EmptyPolytope)));
}

#[test]
fn samples_lie_inside() {
    let lim = limits(&[-1.0, -1.0, -1.0], &[1.0, 1.0, 1.0]);
    let p = TcPolytope::octagon(&[0.2, 0.0, -0.1], 0.3, &lim).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pts = p.sample_uniform(&mut rng, 500).unwrap();
    assert_eq!(pts.len(), 500);
    assert!(pts.iter().all(|s| p.contains(s, 0.0)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inscribed_ellipsoid_is_contained(
        center in prop::array::uniform2(-0.5f64..0.5),
        half in prop::array::uniform2(0.05f64..0.6),
        tilt in -1.0f64..1.0,
    ) {
        let lim = limits(&[-1.0, -1.0], &[1.0, 1.0]);
        let mut p = TcPolytope::box_around(&center, &half, &lim).unwrap();
        let cut = DMatrix::from_row_slice(1, 2, &[tilt, 1.0]);
        let dc = DVector::from_vec(vec![tilt * center[0] + center[1] + 0.5 * half[1]]);
        p = TcPolytope::new(cut, dc, vec![RowKind::Learned]).unwrap().stack(&p).normalized();
        let e = max_inscribed_ellipsoid(&p).unwrap();
        prop_assert!(e.containment_violation(&p) < 1e-6);
        prop_assert!(e.det() > 0.0);
        for k in 0..16 {
            let a = k as f64 * std::f64::consts::PI / 8.0;
            let b = e.boundary_point(&DVector::from_vec(vec![a.cos(), a.sin()]));
            prop_assert!(p.max_violation(b.as_slice()) < 1e-6);
        }
    }
}

fn empty_scene() -> Scene {
    let mut tree = KinematicTree::new();
    for (j, (parent, child)) in [("world", "a"), ("a", "b")].into_iter().enumerate() {
        tree.add_joint(&format!("j{j}"), JointKind::Revolute, parent, child, Pose::identity(), Vector3::z(), (-1.0, 1.0))
            .unwrap();
    }
    let mut scene = Scene::new("empty", tree);
    scene.add_body("only", "b", Shape::Sphere { center: Vector3::x(), radius: 0.1 }).unwrap();
    scene
}

#[test]
fn growth_without_obstacles_reaches_the_limits() {
    let scene = empty_scene();
    let pairs = collision_pairs(&scene).unwrap();
    assert!(pairs.is_empty());
    let lim = scene.tree.tc_limits();
    let p0 = TcPolytope::octagon(&[0.0, 0.0], 0.05, &lim).unwrap();
    let res = bilinear_alternation(&scene, &pairs, &p0, &[0.0, 0.0], &AlternationOptions::default()).unwrap();
    let full = max_inscribed_ellipsoid(&TcPolytope::from_limits(&lim)).unwrap();
    assert!(res.ellipsoid.det() > 0.95 * full.det(), "{} vs {}", res.ellipsoid.det(), full.det());
    assert!(res.log.windows(2).all(|w| w[1].det_q >= w[0].det_q - 1e-8));
    assert!(res.polytope.contains(&[0.0, 0.0], 0.0));
}

/// Two-joint arm tip with a ball obstacle off to the side.
fn ball_scene() -> Scene {
    let mut tree = KinematicTree::new();
    tree.add_joint("j1", JointKind::Revolute, "world", "l1", Pose::identity(), Vector3::z(), (-2.0, 2.0))
        .unwrap();
    tree.add_joint(
        "j2",
        JointKind::Revolute,
        "l1",
        "l2",
        Pose::from_xyz_rpy([1.0, 0.0, 0.0], [0.0; 3]),
        Vector3::z(),
        (-2.0, 2.0),
    )
    .unwrap();
    let mut scene = Scene::new("ball", tree);
    scene.add_body("tip", "l2", Shape::Sphere { center: Vector3::new(0.6, 0.0, 0.0), radius: 0.1 }).unwrap();
    scene
        .add_body("ball", "world", Shape::Sphere { center: Vector3::new(1.0, 1.0, 0.0), radius: 0.3 })
        .unwrap();
    scene
}

#[test]
fn growth_step_keeps_certifiability_and_ellipsoid() {
    let scene = ball_scene();
    let pairs = collision_pairs(&scene).unwrap();
    let lim = scene.tree.tc_limits();
    let p = TcPolytope::octagon(&[0.0, 0.0], 0.1, &lim).unwrap();
    let opts = GrowOptions::default();
    let report = crate::certifier::certify_polytope(&scene, &pairs, &p, &opts.certify).unwrap();
    assert!(report.certified());
    let e = max_inscribed_ellipsoid(&p).unwrap();
    let (grown, _) = grow_polytope(&scene, &pairs, &p, &e, &report.certificates(), &[0.0, 0.0], &opts)
        .unwrap()
        .expect("growth program solves");
    assert!(e.containment_violation(&grown) < 1e-6);
    assert!(grown.contains(&[0.0, 0.0], 1e-9));
    let after = max_inscribed_ellipsoid(&grown).unwrap();
    assert!(after.det() > e.det());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let checked = scene.checked_pairs();
    for s in grown.sample_uniform(&mut rng, 300).unwrap() {
        assert!(scene.clearance(&s, &checked) > 0.0, "{s:?}");
    }
}

#[test]
fn alternation_grows_and_certifies() {
    let scene = ball_scene();
    let pairs = collision_pairs(&scene).unwrap();
    let lim = scene.tree.tc_limits();
    let p0 = TcPolytope::octagon(&[0.0, 0.0], 0.1, &lim).unwrap();
    let opts = AlternationOptions { max_iters: 6, ..Default::default() };
    let res = bilinear_alternation(&scene, &pairs, &p0, &[0.0, 0.0], &opts).unwrap();
    assert!(res.report.certified());
    assert!(res.volume_ratio() > 1.0);
    assert!(res.log.windows(2).all(|w| w[1].det_q >= w[0].det_q - 1e-8));
    let opts = CertifyOptions::default();
    let again = crate::certifier::certify_polytope(&scene, &pairs, &res.polytope, &opts).unwrap();
    assert!(again.certified());
}

#[test]
fn contraction_finds_certifiable_polytope() {
    let scene = ball_scene();
    let pairs = collision_pairs(&scene).unwrap();
    let lim = scene.tree.tc_limits();
    let center = [0.0, 0.0];
    let p = TcPolytope::octagon(&center, 0.6, &lim).unwrap();
    let checked = scene.checked_pairs();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let collides = p.sample_uniform(&mut rng, 2000).unwrap().iter().any(|s| scene.clearance(s, &checked) <= 0.0);
    let opts = CertifyOptions::default();
    let (q, rep, delta) = contract_to_feasible(&scene, &pairs, &p, 0.6, 0.02, &opts).unwrap();
    assert!(rep.certified());
    if collides {
        assert!(delta > 0.0);
    }
    assert!(q.rows_of(RowKind::Learned).iter().all(|&j| (p.d[j] - q.d[j] - delta).abs() < 1e-12));
}
