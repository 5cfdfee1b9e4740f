//! Polytopic regions in tangent configuration space: inscribed ellipsoids,
//! certificate-preserving growth, the alternation loop and contraction.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::kinematics::TcLimits;
use crate::polyalg::{Polynomial, Var};
use crate::soscomp::{BackendStatus, ConicModel, LinExpr, SolverSettings};
use crate::{Error, Result};

mod grow;

pub use grow::{
    bilinear_alternation, contract_to_feasible, grow_polytope, AlternationOptions, AlternationResult,
    GrowOptions, IterationRecord,
};

/// Origin of a polytope row. Growth and contraction only move learned rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Limit,
    Learned,
}

/// `{s | Cs ≤ d}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TcPolytope {
    pub c: DMatrix<f64>,
    pub d: DVector<f64>,
    pub kinds: Vec<RowKind>,
}

impl TcPolytope {
    pub fn new(c: DMatrix<f64>, d: DVector<f64>, kinds: Vec<RowKind>) -> Result<Self> {
        if c.nrows() != d.len() {
            return Err(Error::Dimension { expected: c.nrows(), found: d.len() });
        }
        if kinds.len() != d.len() {
            return Err(Error::Dimension { expected: d.len(), found: kinds.len() });
        }
        Ok(Self { c, d, kinds })
    }

    /// Box rows `lower ≤ s ≤ upper`.
    pub fn from_limits(limits: &TcLimits) -> Self {
        let n = limits.dim();
        let mut c = DMatrix::zeros(2 * n, n);
        let mut d = DVector::zeros(2 * n);
        for i in 0..n {
            c[(2 * i, i)] = 1.0;
            d[2 * i] = limits.upper[i];
            c[(2 * i + 1, i)] = -1.0;
            d[2 * i + 1] = -limits.lower[i];
        }
        Self { c, d, kinds: vec![RowKind::Limit; 2 * n] }
    }

    /// Learned rows `c·s ≤ d` intersected with the limit box.
    pub fn with_limits(c: DMatrix<f64>, d: DVector<f64>, limits: &TcLimits) -> Result<Self> {
        let learned = Self::new(c, d.clone(), vec![RowKind::Learned; d.len()])?;
        Ok(learned.stack(&Self::from_limits(limits)))
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn stack(&self, other: &TcPolytope) -> TcPolytope {
        let n = self.dim().max(other.dim());
        let m = self.num_rows() + other.num_rows();
        let mut c = DMatrix::zeros(m, n);
        c.view_mut((0, 0), (self.num_rows(), self.dim())).copy_from(&self.c);
        c.view_mut((self.num_rows(), 0), (other.num_rows(), other.dim()))
            .copy_from(&other.c);
        let d = DVector::from_iterator(m, self.d.iter().chain(other.d.iter()).copied());
        let mut kinds = self.kinds.clone();
        kinds.extend(&other.kinds);
        TcPolytope { c, d, kinds }
    }

    /// Polytope whose rows sit at the apothem of a regular octagon with
    /// side `side` around `center`: `±e_i` and `(±e_i ± e_j)/√2`. In two
    /// dimensions this is exactly the octagon. Limit rows are appended.
    pub fn octagon(center: &[f64], side: f64, limits: &TcLimits) -> Result<Self> {
        let n = center.len();
        if n != limits.dim() {
            return Err(Error::Dimension { expected: limits.dim(), found: n });
        }
        let apothem = side * (1.0 + 2f64.sqrt()) / 2.0;
        let mut rows: Vec<DVector<f64>> = Vec::new();
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut r = DVector::zeros(n);
                r[i] = sign;
                rows.push(r);
            }
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..n {
            for j in i + 1..n {
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut r = DVector::zeros(n);
                    r[i] = si * h;
                    r[j] = sj * h;
                    rows.push(r);
                }
            }
        }
        let s0 = DVector::from_column_slice(center);
        let c = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        let d = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.dot(&s0) + apothem));
        Self::with_limits(c, d, limits)
    }

    /// Axis-aligned box `center ± half`, plus limit rows.
    pub fn box_around(center: &[f64], half: &[f64], limits: &TcLimits) -> Result<Self> {
        let n = center.len();
        let lower: Vec<f64> = (0..n).map(|i| center[i] - half[i]).collect();
        let upper: Vec<f64> = (0..n).map(|i| center[i] + half[i]).collect();
        let mut p = Self::from_limits(&TcLimits { lower, upper });
        p.kinds = vec![RowKind::Learned; p.num_rows()];
        Ok(p.stack(&Self::from_limits(limits)))
    }

    pub fn dim(&self) -> usize {
        self.c.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.c.nrows()
    }

    pub fn contains(&self, s: &[f64], tol: f64) -> bool {
        let s = DVector::from_column_slice(s);
        (&self.c * s - &self.d).iter().all(|&v| v <= tol)
    }

    /// Largest row violation `max(Cs − d)`.
    pub fn max_violation(&self, s: &[f64]) -> f64 {
        let s = DVector::from_column_slice(s);
        (&self.c * s - &self.d).max()
    }

    /// Affine polynomials `d_j − c_jᵀs` in the variables `Var(0..n)`.
    pub fn row_polys(&self) -> Vec<Polynomial> {
        (0..self.num_rows())
            .map(|j| {
                let lin: Vec<(Var, f64)> = (0..self.dim())
                    .filter(|&i| self.c[(j, i)] != 0.0)
                    .map(|i| (Var(i as u32), -self.c[(j, i)]))
                    .collect();
                Polynomial::affine(self.d[j], &lin)
            })
            .collect()
    }

    /// Scales rows with `‖c_i‖ > 1` down to unit norm.
    pub fn normalized(&self) -> TcPolytope {
        let mut out = self.clone();
        for j in 0..out.num_rows() {
            let norm = out.c.row(j).norm();
            if norm > 1.0 {
                out.c.row_mut(j).scale_mut(1.0 / norm);
                out.d[j] /= norm;
            }
        }
        out
    }

    /// Shrinks learned rows: `c_iᵀs ≤ d_i − δ`.
    pub fn contracted(&self, delta: f64) -> TcPolytope {
        let mut out = self.clone();
        for j in 0..out.num_rows() {
            if out.kinds[j] == RowKind::Learned {
                out.d[j] -= delta;
            }
        }
        out
    }

    /// Rows of the given kind.
    pub fn rows_of(&self, kind: RowKind) -> Vec<usize> {
        (0..self.num_rows()).filter(|&j| self.kinds[j] == kind).collect()
    }

    /// True if every row of `limits` holds on the polytope.
    pub fn within_limits(&self, limits: &TcLimits, tol: f64) -> Result<bool> {
        let (lo, hi) = self.bounding_box()?;
        Ok((0..self.dim()).all(|i| lo[i] >= limits.lower[i] - tol && hi[i] <= limits.upper[i] + tol))
    }

    /// Extent along each coordinate, by linear programming.
    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.dim();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut m = ConicModel::new();
                let s = m.new_vars(n);
                self.add_rows(&mut m, &s);
                m.minimize(LinExpr::term(i, sign));
                let sol = m.solve(&SolverSettings::default());
                match sol.status {
                    BackendStatus::Solved | BackendStatus::AlmostSolved => {}
                    BackendStatus::Infeasible => return Err(Error::EmptyPolytope),
                    BackendStatus::Unbounded => return Err(Error::Unbounded),
                    BackendStatus::Failed => return Err(Error::Solver(sol.detail)),
                }
                if sign > 0.0 {
                    lo[i] = sol.x[i];
                } else {
                    hi[i] = sol.x[i];
                }
            }
        }
        Ok((lo, hi))
    }

    /// Adds `Cs ≤ d` for decision expressions `s`.
    pub fn add_rows(&self, m: &mut ConicModel, s: &[LinExpr]) {
        for j in 0..self.num_rows() {
            let mut e = LinExpr::constant(self.d[j]);
            for i in 0..self.dim() {
                if self.c[(j, i)] != 0.0 {
                    e = e.minus(&s[i].clone_scaled(self.c[(j, i)]));
                }
            }
            m.add_nonneg(e);
        }
    }

    /// Uniform samples by rejection from the bounding box.
    pub fn sample_uniform(&self, rng: &mut impl Rng, count: usize) -> Result<Vec<Vec<f64>>> {
        let (lo, hi) = self.bounding_box()?;
        let mut out = Vec::with_capacity(count);
        let mut tries = 0usize;
        while out.len() < count {
            let s: Vec<f64> = lo
                .iter()
                .zip(&hi)
                .map(|(&l, &h)| if h > l { rng.random_range(l..h) } else { l })
                .collect();
            if self.contains(&s, 0.0) {
                out.push(s);
            }
            tries += 1;
            if tries > 1000 * count.max(1000) {
                return Err(Error::Structure("rejection sampling made no progress".into()));
            }
        }
        Ok(out)
    }

    /// Chebyshev center, used as a fallback interior point.
    pub fn chebyshev_center(&self) -> Result<(Vec<f64>, f64)> {
        let n = self.dim();
        let mut m = ConicModel::new();
        let s = m.new_vars(n);
        let r = m.new_var();
        for j in 0..self.num_rows() {
            let norm = self.c.row(j).norm();
            let mut e = LinExpr::constant(self.d[j]).minus(&r.clone_scaled(norm));
            for i in 0..n {
                e = e.minus(&s[i].clone_scaled(self.c[(j, i)]));
            }
            m.add_nonneg(e);
        }
        m.minimize(r.clone_scaled(-1.0));
        let sol = m.solve(&SolverSettings::default());
        match sol.status {
            BackendStatus::Solved | BackendStatus::AlmostSolved => {}
            BackendStatus::Infeasible => return Err(Error::EmptyPolytope),
            BackendStatus::Unbounded => return Err(Error::Unbounded),
            BackendStatus::Failed => return Err(Error::Solver(sol.detail)),
        }
        // A negative radius means the rows cannot all hold.
        if sol.x[n] < -1e-9 {
            return Err(Error::EmptyPolytope);
        }
        Ok((sol.x[..n].to_vec(), sol.x[n].max(0.0)))
    }
}

trait ScaledExpr {
    fn clone_scaled(&self, k: f64) -> LinExpr;
}

impl ScaledExpr for LinExpr {
    fn clone_scaled(&self, k: f64) -> LinExpr {
        use crate::polyalg::Coefficient;
        self.scaled(k)
    }
}

/// `{Q·u + s0 | ‖u‖ ≤ 1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub q: DMatrix<f64>,
    pub center: DVector<f64>,
}

impl Ellipsoid {
    /// Volume proxy `det Q`.
    pub fn det(&self) -> f64 {
        self.q.determinant()
    }

    /// `‖Q⁻¹(s − s0)‖`; at most one inside the ellipsoid.
    pub fn metric(&self, s: &[f64]) -> f64 {
        let v = DVector::from_column_slice(s) - &self.center;
        match self.q.clone().lu().solve(&v) {
            Some(u) => u.norm(),
            None => f64::INFINITY,
        }
    }

    /// Largest containment violation `‖Q c_i‖ − (d_i − c_iᵀs0)`.
    pub fn containment_violation(&self, p: &TcPolytope) -> f64 {
        (0..p.num_rows())
            .map(|j| {
                let c = p.c.row(j).transpose();
                (&self.q * &c).norm() - (p.d[j] - c.dot(&self.center))
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Boundary point in direction `u` (normalized).
    pub fn boundary_point(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.q * (u / u.norm()) + &self.center
    }
}

/// Maximum-volume ellipsoid inscribed in `p`.
pub fn max_inscribed_ellipsoid(p: &TcPolytope) -> Result<Ellipsoid> {
    let n = p.dim();
    let mut m = ConicModel::new();
    // [[Q, Z], [Zᵀ, diag(Z)]] ⪰ 0 with Z lower triangular gives
    // log det Q ≥ Σ log Z_ii.
    let blk = m.new_psd(2 * n);
    let block = m.psd_block(blk).clone();
    let q = |i: usize, j: usize| block.entry(i, j);
    for i in 0..n {
        for j in 0..n {
            if i < j {
                m.add_eq(block.entry(i, n + j));
                m.add_eq(block.entry(n + i, n + j));
            }
        }
        m.add_eq(block.entry(n + i, n + i).minus(&block.entry(i, n + i)));
    }
    let s0 = m.new_vars(n);
    for j in 0..p.num_rows() {
        let mut cone = Vec::with_capacity(n + 1);
        let mut slack = LinExpr::constant(p.d[j]);
        for i in 0..n {
            slack = slack.minus(&s0[i].clone_scaled(p.c[(j, i)]));
        }
        cone.push(slack);
        for i in 0..n {
            let mut e = LinExpr::constant(0.0);
            for k in 0..n {
                if p.c[(j, k)] != 0.0 {
                    e = e.plus(&q(i, k).clone_scaled(p.c[(j, k)]));
                }
            }
            cone.push(e);
        }
        m.add_soc(cone);
    }
    let t = m.new_vars(n);
    let mut cost = LinExpr::constant(0.0);
    for i in 0..n {
        m.add_exp([t[i].clone(), LinExpr::constant(1.0), block.entry(i, n + i)]);
        cost = cost.minus(&t[i]);
    }
    m.minimize(cost);
    let sol = m.solve(&SolverSettings::default());
    match sol.status {
        BackendStatus::Solved | BackendStatus::AlmostSolved => {}
        BackendStatus::Infeasible => return Err(Error::EmptyPolytope),
        BackendStatus::Unbounded => return Err(Error::Unbounded),
        BackendStatus::Failed => return Err(Error::Solver(format!("ellipsoid: {}", sol.detail))),
    }
    let qm = DMatrix::from_fn(n, n, |i, j| q(i, j).eval(&sol.x));
    let center = DVector::from_iterator(n, s0.iter().map(|e| e.eval(&sol.x)));
    Ok(Ellipsoid { q: (&qm + qm.transpose()) * 0.5, center })
}

#[cfg(test)]
mod tests;
