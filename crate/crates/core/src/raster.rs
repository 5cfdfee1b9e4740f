//! Collision rasters of two-dimensional tangent configuration spaces.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{fixed_intersection_point, gjk};
use crate::kinematics::WORLD;
use crate::regions::TcPolytope;
use crate::scene::Scene;
use crate::{Error, Result};

/// GJK distances above this skip the intersection program.
const SCREEN_DIST: f64 = 1e-6;

/// Cell verdicts over the limit box, row-major from the lower-left corner:
/// cell `(i, j)` has index `j * resolution + i` and center
/// `lower + (i + ½, j + ½) · step`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Raster {
    pub resolution: usize,
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub collision: Vec<bool>,
}

impl Raster {
    pub fn step(&self) -> [f64; 2] {
        let r = self.resolution as f64;
        [(self.upper[0] - self.lower[0]) / r, (self.upper[1] - self.lower[1]) / r]
    }

    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        let h = self.step();
        [self.lower[0] + (i as f64 + 0.5) * h[0], self.lower[1] + (j as f64 + 0.5) * h[1]]
    }

    pub fn is_collision(&self, i: usize, j: usize) -> bool {
        self.collision[j * self.resolution + i]
    }

    pub fn free_count(&self) -> usize {
        self.collision.iter().filter(|c| !**c).count()
    }

    /// Fraction of free cells whose center lies in at least one region.
    pub fn coverage(&self, regions: &[TcPolytope]) -> f64 {
        let free = self.free_count();
        if free == 0 {
            return 0.0;
        }
        let covered = (0..self.resolution)
            .flat_map(|j| (0..self.resolution).map(move |i| (i, j)))
            .filter(|&(i, j)| !self.is_collision(i, j))
            .filter(|&(i, j)| {
                let s = self.center(i, j);
                regions.iter().any(|p| p.contains(&s, 0.0))
            })
            .count();
        covered as f64 / free as f64
    }

    /// Cells of collision whose center lies in some region.
    pub fn collisions_inside(&self, regions: &[TcPolytope]) -> Vec<(usize, usize)> {
        (0..self.resolution)
            .flat_map(|j| (0..self.resolution).map(move |i| (i, j)))
            .filter(|&(i, j)| self.is_collision(i, j))
            .filter(|&(i, j)| regions.iter().any(|p| p.contains(&self.center(i, j), 0.0)))
            .collect()
    }
}

/// True if some checked pair has a common point at `s`. Pairs whose GJK
/// distance clearly exceeds zero are skipped; the rest are decided by the
/// fixed-configuration intersection program.
pub fn collides(scene: &Scene, pairs: &[(usize, usize)], s: &[f64]) -> Result<bool> {
    for &(a, b) in pairs {
        let sa = scene.bodies[a].posed(&scene.tree, s, WORLD);
        let sb = scene.bodies[b].posed(&scene.tree, s, WORLD);
        if gjk::distance(&sa, &sb).distance > SCREEN_DIST {
            continue;
        }
        if fixed_intersection_point(&sa, &sb)?.is_some() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Evaluates every cell center of a `resolution × resolution` grid over
/// the tangent-space limit box.
pub fn rasterize_tcspace(scene: &Scene, resolution: usize) -> Result<Raster> {
    let lim = scene.tree.tc_limits();
    if lim.dim() != 2 {
        return Err(Error::Dimension { expected: 2, found: lim.dim() });
    }
    if resolution == 0 {
        return Err(Error::Structure("raster resolution must be positive".into()));
    }
    let mut raster = Raster {
        resolution,
        lower: [lim.lower[0], lim.lower[1]],
        upper: [lim.upper[0], lim.upper[1]],
        collision: Vec::new(),
    };
    let pairs = scene.checked_pairs();
    let rows: Vec<Vec<bool>> = (0..resolution)
        .into_par_iter()
        .map(|j| (0..resolution).map(|i| collides(scene, &pairs, &raster.center(i, j))).collect())
        .collect::<Result<_>>()?;
    raster.collision = rows.concat();
    Ok(raster)
}
