//! Certified collision-free convex regions in the tangent configuration
//! space of a robot.
//!
//! Joint angles are reparametrized by `t = tan(θ/2)`, which turns forward
//! kinematics into rational functions. A polytope `{s | Cs ≤ d}` is
//! certified collision-free by finding, for every pair of bodies, a
//! separating plane that is polynomial in `s` together with
//! sums-of-squares multipliers proving the plane separates the bodies for
//! every `s` in the polytope. Regions are grown by alternating between
//! certificate search and polytope enlargement.
//!
//! Crate layout, bottom-up:
//! - [`polyalg`]: sparse polynomials, rational functions, monomial bases.
//! - [`kinematics`]: joints, trees, rational and trigonometric forward kinematics.
//! - [`geometry`]: convex bodies, fixed-configuration programs, plane-side and
//!   membership conditions, and a GJK distance oracle.
//! - [`soscomp`]: conic modelling, SOS programs, Clarabel backend.
//! - [`certifier`]: per-pair separating-plane and refutation certificates.
//! - [`regions`]: inscribed ellipsoids, growth, alternation, contraction.
//! - [`seeding`]: nonlinear IRIS-style seeding.
//! - [`scene`], [`bundle`], [`raster`], [`plots`], [`pipeline`]: file formats,
//!   rasterization and the end-to-end workflow.

pub mod bundle;
pub mod certifier;
pub mod geometry;
pub mod kinematics;
pub mod pipeline;
pub mod plots;
pub mod polyalg;
pub mod raster;
pub mod regions;
pub mod scene;
pub mod seeding;
pub mod soscomp;

pub use polyalg::{Monomial, Poly, Polynomial, RationalFn, Var};

/// Library error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("monomial basis over {vars} variables at coordinate degree {degree} exceeds the cap of {cap}")]
    BasisTooLarge { vars: usize, degree: u32, cap: usize },
    #[error("angle {0} is outside the open interval (-pi, pi)")]
    AngleDomain(f64),
    #[error("unknown frame `{0}`")]
    UnknownFrame(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("{}", format_issues(.0))]
    Scene(Vec<scene::SceneIssue>),
    #[error("structural error: {0}")]
    Structure(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("polytope is empty")]
    EmptyPolytope,
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("configuration {0:?} is in collision")]
    InCollision(Vec<f64>),
    #[error("point {0:?} lies outside the polytope")]
    OutsidePolytope(Vec<f64>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_issues(issues: &[scene::SceneIssue]) -> String {
    issues
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
