//! Self-contained region files: the scene text, the polytope, its
//! certificates and the growth log.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::certifier::{collision_pairs, verify_plane_certificate, CertificateCheck, PlaneCertificate};
use crate::geometry::DEFAULT_RADIUS_EPS;
use crate::regions::{IterationRecord, TcPolytope};
use crate::scene::parse_scene_str;
use crate::soscomp::VerifyTolerances;
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionBundle {
    /// Scene text the certificates refer to.
    pub scene: String,
    /// Seed point in tangent coordinates.
    pub seed: Vec<f64>,
    pub polytope: TcPolytope,
    pub certificates: Vec<PlaneCertificate>,
    pub log: Vec<IterationRecord>,
}

/// Outcome of re-verifying a bundle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BundleCheck {
    pub pairs: usize,
    pub checks: Vec<CertificateCheck>,
    pub passed: bool,
    pub problems: Vec<String>,
}

impl RegionBundle {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Rebuilds every pair from the embedded scene and checks its stored
    /// certificate against the stored polytope.
    pub fn verify(&self, tol: VerifyTolerances) -> Result<BundleCheck> {
        let scene = parse_scene_str(&self.scene)?;
        let pairs = collision_pairs(&scene)?;
        let mut problems = Vec::new();
        let lim = scene.tree.tc_limits();
        if self.polytope.dim() != lim.dim() {
            return Err(Error::Dimension { expected: lim.dim(), found: self.polytope.dim() });
        }
        if !self.polytope.within_limits(&lim, 1e-9)? {
            problems.push("polytope leaves the joint limits".into());
        }
        if !self.polytope.contains(&self.seed, 1e-9) {
            problems.push("seed lies outside the polytope".into());
        }
        let mut checks = Vec::new();
        for pair in &pairs {
            let (a, b) = (&scene.bodies[pair.a].name, &scene.bodies[pair.b].name);
            let Some(cert) = self.certificates.iter().find(|c| &c.body_a == a && &c.body_b == b) else {
                problems.push(format!("no certificate for {a}/{b}"));
                continue;
            };
            let check = verify_plane_certificate(&scene, pair, &self.polytope, cert, DEFAULT_RADIUS_EPS)?;
            if !check.passes(tol) {
                problems.push(format!(
                    "{a}/{b}: residual {:.3e}, min eigenvalue {:.3e}",
                    check.max_residual, check.min_eig
                ));
            }
            checks.push(check);
        }
        Ok(BundleCheck { pairs: pairs.len(), checks, passed: problems.is_empty(), problems })
    }
}
