//! Seed, contract, alternate and verify, once per seed configuration.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundle::RegionBundle;
use crate::certifier::{collision_pairs, CertifyOptions, CollisionPair};
use crate::regions::{bilinear_alternation, contract_to_feasible, AlternationOptions, TcPolytope};
use crate::scene::Scene;
use crate::seeding::{nonlinear_iris, SeedOptions};
use crate::soscomp::VerifyTolerances;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    /// Start from a seeded candidate; otherwise from a small octagon.
    pub use_seeding: bool,
    pub octagon_side: f64,
    pub seeding: SeedOptions,
    pub contract_max: f64,
    pub contract_tol: f64,
    pub alternation: AlternationOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            use_seeding: true,
            octagon_side: 0.01,
            seeding: SeedOptions::default(),
            contract_max: 0.3,
            contract_tol: 5e-3,
            alternation: AlternationOptions::default(),
        }
    }
}

impl PipelineOptions {
    pub fn with_certify(mut self, certify: CertifyOptions) -> Self {
        self.alternation.grow.certify = certify;
        self
    }
}

/// Per-seed line of the summary report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedSummary {
    /// Seed in joint coordinates.
    pub seed: Vec<f64>,
    pub error: Option<String>,
    pub iterations: usize,
    pub volume_ratio: f64,
    pub det_q: f64,
    pub rows: usize,
    pub max_gram: usize,
    pub seed_secs: f64,
    pub contract_secs: f64,
    pub alternate_secs: f64,
    pub verify_secs: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineReport {
    pub scene: String,
    pub collision_pairs: usize,
    /// Rows of the largest Gram matrix over all bundles.
    pub largest_gram: usize,
    pub seeds: Vec<SeedSummary>,
    pub total_secs: f64,
}

impl PipelineReport {
    pub fn all_certified(&self) -> bool {
        self.seeds.iter().all(|s| s.error.is_none())
    }

    /// Plain-text table.
    pub fn table(&self) -> String {
        let mut out = format!(
            "scene {}\ncollision pairs {}\nlargest Gram block {}\n\
             seed                      status      iters  vol ratio   rows  gram  seed s  contract s  alternate s  verify s\n",
            self.scene, self.collision_pairs, self.largest_gram
        );
        for s in &self.seeds {
            let seed = format!("{:?}", s.seed.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>());
            let status = if s.error.is_some() { "failed" } else { "certified" };
            out.push_str(&format!(
                "{seed:<25} {status:<10} {:>6} {:>10.2} {:>6} {:>5} {:>7.2} {:>11.2} {:>12.2} {:>9.2}\n",
                s.iterations,
                s.volume_ratio,
                s.rows,
                s.max_gram,
                s.seed_secs,
                s.contract_secs,
                s.alternate_secs,
                s.verify_secs
            ));
            if let Some(e) = &s.error {
                out.push_str(&format!("  error: {e}\n"));
            }
        }
        out.push_str(&format!("total {:.2} s\n", self.total_secs));
        out
    }
}

fn empty_summary(seed: &[f64]) -> SeedSummary {
    SeedSummary {
        seed: seed.to_vec(),
        error: None,
        iterations: 0,
        volume_ratio: 1.0,
        det_q: 0.0,
        rows: 0,
        max_gram: 0,
        seed_secs: 0.0,
        contract_secs: 0.0,
        alternate_secs: 0.0,
        verify_secs: 0.0,
    }
}

fn run_seed(
    scene: &Scene,
    scene_text: &str,
    pairs: &[CollisionPair],
    q: &[f64],
    opts: &PipelineOptions,
    summary: &mut SeedSummary,
) -> Result<RegionBundle> {
    let inside = scene.tree.joints().iter().zip(q).all(|(j, &v)| v >= j.lower && v <= j.upper);
    if q.len() != scene.dof() || !inside {
        return Err(Error::Model(format!("seed {q:?} is outside the joint limits")));
    }
    let s0 = scene.tree.to_tc(q)?;
    if scene.in_collision(&s0) {
        return Err(Error::InCollision(q.to_vec()));
    }
    let lim = scene.tree.tc_limits();
    let copts = &opts.alternation.grow.certify;
    let octagon = TcPolytope::octagon(&s0, opts.octagon_side, &lim)?;
    let t = Instant::now();
    let candidate = if opts.use_seeding { nonlinear_iris(scene, &s0, &opts.seeding)? } else { octagon.clone() };
    summary.seed_secs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let contracted = contract_to_feasible(scene, pairs, &candidate, opts.contract_max, opts.contract_tol, copts);
    let start = match contracted {
        Ok((p, _, delta)) => {
            log::debug!("seed {q:?}: contracted by {delta:.4}");
            p
        }
        Err(Error::Certification(msg)) if opts.use_seeding => {
            log::debug!("seed {q:?}: seeded candidate rejected ({msg}), starting from an octagon");
            contract_to_feasible(scene, pairs, &octagon, opts.contract_max, opts.contract_tol, copts)?.0
        }
        Err(e) => return Err(e),
    };
    summary.contract_secs = t.elapsed().as_secs_f64();
    let seed = if start.contains(&s0, 0.0) { s0.clone() } else { start.chebyshev_center()?.0 };
    let t = Instant::now();
    let res = bilinear_alternation(scene, pairs, &start, &seed, &opts.alternation)?;
    summary.alternate_secs = t.elapsed().as_secs_f64();
    summary.iterations = res.log.len().saturating_sub(1);
    summary.volume_ratio = res.volume_ratio();
    summary.det_q = res.ellipsoid.det();
    summary.rows = res.polytope.num_rows();
    summary.max_gram = res.report.max_gram();
    let bundle = RegionBundle {
        scene: scene_text.to_string(),
        seed,
        polytope: res.polytope,
        certificates: res.report.certificates(),
        log: res.log,
    };
    let t = Instant::now();
    let check = RegionBundle::from_json(&bundle.to_json()?)?.verify(VerifyTolerances::default())?;
    summary.verify_secs = t.elapsed().as_secs_f64();
    if !check.passed {
        return Err(Error::Certification(check.problems.join("; ")));
    }
    Ok(bundle)
}

/// Runs every seed (joint coordinates) independently. Failed seeds are
/// reported and produce no bundle.
pub fn run_pipeline(
    scene: &Scene,
    seeds: &[Vec<f64>],
    opts: &PipelineOptions,
) -> Result<(Vec<RegionBundle>, PipelineReport)> {
    let start = Instant::now();
    let pairs = collision_pairs(scene)?;
    let text = scene.to_toml();
    let results: Vec<(Option<RegionBundle>, SeedSummary)> = seeds
        .par_iter()
        .map(|q| {
            let mut summary = empty_summary(q);
            match run_seed(scene, &text, &pairs, q, opts, &mut summary) {
                Ok(b) => (Some(b), summary),
                Err(e) => {
                    log::warn!("seed {q:?}: {e}");
                    summary.error = Some(e.to_string());
                    (None, summary)
                }
            }
        })
        .collect();
    let mut bundles = Vec::new();
    let mut summaries = Vec::new();
    for (b, s) in results {
        bundles.extend(b);
        summaries.push(s);
    }
    let report = PipelineReport {
        scene: scene.name.clone(),
        collision_pairs: pairs.len(),
        largest_gram: summaries.iter().map(|s| s.max_gram).max().unwrap_or(0),
        seeds: summaries,
        total_secs: start.elapsed().as_secs_f64(),
    };
    Ok((bundles, report))
}

#[cfg(test)]
mod tests {
    use nalgebra::Vector3;

    use super::*;
    use crate::geometry::Shape;
    use crate::kinematics::{JointKind, KinematicTree, Pose};

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
    fn zero_seeds_give_an_empty_report() {
        let (bundles, report) = run_pipeline(&ball_scene(), &[], &PipelineOptions::default()).unwrap();
        assert!(bundles.is_empty() && report.seeds.is_empty() && report.all_certified());
        assert_eq!(report.collision_pairs, 1);
    }

    #[test]
    fn colliding_seed_fails_alone() {
        let scene = ball_scene();
        let hit = scene.tree.from_tc(&[0.25, 0.9]);
        assert!(scene.in_collision(&[0.25, 0.9]));
        let opts = PipelineOptions {
            use_seeding: false,
            alternation: AlternationOptions { max_iters: 2, ..Default::default() },
            ..Default::default()
        };
        let (bundles, report) = run_pipeline(&scene, &[vec![0.0, 0.0], hit], &opts).unwrap();
        assert_eq!(bundles.len(), 1);
        assert!(report.seeds[0].error.is_none());
        assert!(report.seeds[1].error.as_deref().unwrap().contains("collision"));
        assert!(!report.all_certified());
        assert!(report.largest_gram > 0);
        assert!(report.table().contains("largest Gram block"));
        let back = RegionBundle::from_json(&bundles[0].to_json().unwrap()).unwrap();
        assert!(back.verify(VerifyTolerances::default()).unwrap().passed);
    }

    #[test]
    fn tampered_bundle_fails_verification() {
        let scene = ball_scene();
        let opts = PipelineOptions {
            use_seeding: false,
            alternation: AlternationOptions { max_iters: 1, ..Default::default() },
            ..Default::default()
        };
        let (bundles, _) = run_pipeline(&scene, &[vec![0.0, 0.0]], &opts).unwrap();
        let mut b = bundles[0].clone();
        let k = b.polytope.rows_of(crate::regions::RowKind::Learned)[0];
        b.polytope.d[k] += 0.5;
        assert!(!b.verify(VerifyTolerances::default()).unwrap().passed);
        let mut b = bundles[0].clone();
        b.certificates.clear();
        assert!(!b.verify(VerifyTolerances::default()).unwrap().passed);
    }
}
