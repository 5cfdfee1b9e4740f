//! A small conic modelling layer over Clarabel.
//!
//! Constraints are affine expressions in scalar decision variables placed in
//! zero, nonnegative, second-order, exponential or PSD cones. PSD blocks own
//! their entries as decision variables so Gram matrices can be read back
//! directly from the primal solution.

use std::fmt::Write as _;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::DMatrix;

use crate::polyalg::Coefficient;

/// Affine expression `constant + Σ coef·x[var]`, terms sorted by variable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub constant: f64,
    terms: Vec<(usize, f64)>,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn var(i: usize) -> Self {
        Self::term(i, 1.0)
    }

    pub fn term(i: usize, c: f64) -> Self {
        Self {
            constant: 0.0,
            terms: if c == 0.0 { Vec::new() } else { vec![(i, c)] },
        }
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }

    pub fn plus(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        Coefficient::add_assign(&mut out, other);
        out
    }

    pub fn minus(&self, other: &LinExpr) -> LinExpr {
        self.plus(&other.scaled(-1.0))
    }

    pub fn add_term(&mut self, i: usize, c: f64) {
        Coefficient::add_assign(self, &LinExpr::term(i, c));
    }

    /// Drops terms with `|coef| < tol` and zeroes a tiny constant.
    pub fn dropped(&self, tol: f64) -> LinExpr {
        LinExpr {
            constant: if self.constant.abs() < tol { 0.0 } else { self.constant },
            terms: self
                .terms
                .iter()
                .copied()
                .filter(|&(_, c)| c.abs() >= tol)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.terms
            .iter()
            .fold(self.constant.abs(), |m, &(_, c)| m.max(c.abs()))
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl Coefficient for LinExpr {
    fn zero() -> Self {
        LinExpr::default()
    }

    fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.is_empty()
    }

    fn add_assign(&mut self, other: &Self) {
        self.constant += other.constant;
        if other.terms.is_empty() {
            return;
        }
        if self.terms.is_empty() {
            self.terms = other.terms.clone();
            return;
        }
        let mut merged = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (a, b) = (&self.terms, &other.terms);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if a[i].0 < b[j].0 {
                merged.push(a[i]);
                i += 1;
            } else if a[i].0 > b[j].0 {
                merged.push(b[j]);
                j += 1;
            } else {
                let c = a[i].1 + b[j].1;
                if c != 0.0 {
                    merged.push((a[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
        merged.extend_from_slice(&a[i..]);
        merged.extend_from_slice(&b[j..]);
        self.terms = merged;
    }

    fn scaled(&self, k: f64) -> Self {
        if k == 0.0 {
            return LinExpr::default();
        }
        LinExpr {
            constant: self.constant * k,
            terms: self.terms.iter().map(|&(i, c)| (i, c * k)).collect(),
        }
    }
}

/// A symmetric PSD matrix variable.
#[derive(Clone, Debug)]
pub struct PsdBlock {
    pub dim: usize,
    /// Variable index of entry `(i, j)` with `i ≤ j`, column-major upper triangle.
    vars: Vec<usize>,
}

impl PsdBlock {
    fn tri_index(i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        j * (j + 1) / 2 + i
    }

    pub fn var(&self, i: usize, j: usize) -> usize {
        self.vars[Self::tri_index(i, j)]
    }

    pub fn entry(&self, i: usize, j: usize) -> LinExpr {
        LinExpr::var(self.var(i, j))
    }

    pub fn value(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| x[self.var(i, j)])
    }

    /// Replaces the block's entries in `x` by its nearest PSD matrix
    /// (negative eigenvalues clipped to zero).
    pub fn project(&self, x: &mut [f64]) {
        if self.dim == 0 {
            return;
        }
        let m = self.value(x);
        let eig = ((&m + m.transpose()) * 0.5).symmetric_eigen();
        let clipped = eig.eigenvalues.map(|v| v.max(0.0));
        let p = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
        for j in 0..self.dim {
            for i in 0..=j {
                x[self.var(i, j)] = p[(i, j)];
            }
        }
    }
}

/// Backend outcome before independent verification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendStatus {
    Solved,
    AlmostSolved,
    Infeasible,
    Unbounded,
    Failed,
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: BackendStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: u32,
    pub solve_time: f64,
    pub detail: String,
}

/// Solver accuracy knobs forwarded to the backend.
#[derive(Clone, Debug)]
pub struct SolverSettings {
    pub max_iter: u32,
    pub tol_gap: f64,
    pub tol_feas: f64,
    /// Coefficients of assembled rows below this magnitude are dropped.
    pub drop_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol_gap: 1e-8,
            tol_feas: 1e-8,
            drop_tol: crate::polyalg::DEFAULT_DROP_TOL,
        }
    }
}

/// Conic program `minimize cost` subject to affine expressions in cones.
#[derive(Clone, Debug, Default)]
pub struct ConicModel {
    n: usize,
    zeros: Vec<LinExpr>,
    nonneg: Vec<LinExpr>,
    socs: Vec<Vec<LinExpr>>,
    exps: Vec<[LinExpr; 3]>,
    psd: Vec<PsdBlock>,
    cost: LinExpr,
}

impl ConicModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_equalities(&self) -> usize {
        self.zeros.len()
    }

    pub fn psd_blocks(&self) -> &[PsdBlock] {
        &self.psd
    }

    pub fn equalities(&self) -> &[LinExpr] {
        &self.zeros
    }

    pub fn new_var(&mut self) -> LinExpr {
        self.n += 1;
        LinExpr::var(self.n - 1)
    }

    pub fn new_vars(&mut self, k: usize) -> Vec<LinExpr> {
        (0..k).map(|_| self.new_var()).collect()
    }

    /// Adds a `dim × dim` PSD matrix variable and returns its block index.
    pub fn new_psd(&mut self, dim: usize) -> usize {
        let start = self.n;
        let len = dim * (dim + 1) / 2;
        self.n += len;
        self.psd.push(PsdBlock {
            dim,
            vars: (start..start + len).collect(),
        });
        self.psd.len() - 1
    }

    pub fn psd_block(&self, k: usize) -> &PsdBlock {
        &self.psd[k]
    }

    pub fn add_eq(&mut self, e: LinExpr) {
        self.zeros.push(e);
    }

    pub fn add_nonneg(&mut self, e: LinExpr) {
        self.nonneg.push(e);
    }

    /// `t ≥ ‖x‖₂` for `v = [t, x…]`.
    pub fn add_soc(&mut self, v: Vec<LinExpr>) {
        assert!(!v.is_empty());
        self.socs.push(v);
    }

    /// `y·exp(x/y) ≤ z` for `[x, y, z]`.
    pub fn add_exp(&mut self, v: [LinExpr; 3]) {
        self.exps.push(v);
    }

    pub fn minimize(&mut self, cost: LinExpr) {
        self.cost = cost;
    }

    /// Sparse text dump: header, cone sizes, then `row col value` triplets
    /// of `A` and the `b` vector, in the backend convention `s = b − Ax`.
    pub fn dump(&self, settings: &SolverSettings) -> String {
        let (a, b, cones) = self.assemble(settings.drop_tol);
        let mut out = String::new();
        let _ = writeln!(out, "vars {} rows {}", self.n, b.len());
        for c in &cones {
            let _ = writeln!(out, "cone {}", cone_label(c));
        }
        for (r, col, v) in a {
            let _ = writeln!(out, "A {r} {col} {v:e}");
        }
        for (r, v) in b.iter().enumerate() {
            if *v != 0.0 {
                let _ = writeln!(out, "b {r} {v:e}");
            }
        }
        for &(i, c) in self.cost.terms() {
            let _ = writeln!(out, "q {i} {c:e}");
        }
        out
    }

    fn assemble(&self, drop_tol: f64) -> (Vec<(usize, usize, f64)>, Vec<f64>, Vec<SupportedConeT<f64>>) {
        let mut trip = Vec::new();
        let mut b = Vec::new();
        let mut cones = Vec::new();
        let push = |e: &LinExpr, trip: &mut Vec<(usize, usize, f64)>, b: &mut Vec<f64>| {
            let row = b.len();
            let e = e.dropped(drop_tol);
            for &(i, c) in e.terms() {
                trip.push((row, i, -c));
            }
            b.push(e.constant);
        };
        if !self.zeros.is_empty() {
            for e in &self.zeros {
                push(e, &mut trip, &mut b);
            }
            cones.push(SupportedConeT::ZeroConeT(self.zeros.len()));
        }
        if !self.nonneg.is_empty() {
            for e in &self.nonneg {
                push(e, &mut trip, &mut b);
            }
            cones.push(SupportedConeT::NonnegativeConeT(self.nonneg.len()));
        }
        for s in &self.socs {
            for e in s {
                push(e, &mut trip, &mut b);
            }
            cones.push(SupportedConeT::SecondOrderConeT(s.len()));
        }
        for s in &self.exps {
            for e in s {
                push(e, &mut trip, &mut b);
            }
            cones.push(SupportedConeT::ExponentialConeT());
        }
        let sqrt2 = std::f64::consts::SQRT_2;
        for blk in &self.psd {
            for j in 0..blk.dim {
                for i in 0..=j {
                    let scale = if i == j { 1.0 } else { sqrt2 };
                    let row = b.len();
                    trip.push((row, blk.var(i, j), -scale));
                    b.push(0.0);
                }
            }
            cones.push(SupportedConeT::PSDTriangleConeT(blk.dim));
        }
        (trip, b, cones)
    }

    pub fn solve(&self, settings: &SolverSettings) -> ConicSolution {
        let failed = |detail: String| ConicSolution {
            status: BackendStatus::Failed,
            x: vec![0.0; self.n],
            objective: f64::NAN,
            iterations: 0,
            solve_time: 0.0,
            detail,
        };
        let (trip, b, cones) = self.assemble(settings.drop_tol);
        if b.is_empty() {
            // Nothing constrains the variables; only a zero cost is bounded.
            let status = if self.cost.is_constant() {
                BackendStatus::Solved
            } else {
                BackendStatus::Unbounded
            };
            return ConicSolution {
                status,
                x: vec![0.0; self.n],
                objective: self.cost.constant,
                iterations: 0,
                solve_time: 0.0,
                detail: String::new(),
            };
        }
        let m = b.len();
        let (ri, (ci, vi)): (Vec<usize>, (Vec<usize>, Vec<f64>)) =
            trip.into_iter().map(|(r, c, v)| (r, (c, v))).unzip();
        let a = CscMatrix::new_from_triplets(m, self.n, ri, ci, vi);
        let p = CscMatrix::<f64>::zeros((self.n, self.n));
        let mut q = vec![0.0; self.n];
        for &(i, c) in self.cost.terms() {
            q[i] += c;
        }
        let opts = match DefaultSettingsBuilder::default()
            .verbose(false)
            .direct_solve_method("faer".to_string())
            .max_iter(settings.max_iter)
            .tol_gap_abs(settings.tol_gap)
            .tol_gap_rel(settings.tol_gap)
            .tol_feas(settings.tol_feas)
            .build()
        {
            Ok(o) => o,
            Err(e) => return failed(format!("settings: {e}")),
        };
        let mut solver = match DefaultSolver::new(&p, &q, &a, &b, &cones, opts) {
            Ok(s) => s,
            Err(e) => return failed(format!("setup: {e:?}")),
        };
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved => BackendStatus::Solved,
            SolverStatus::AlmostSolved => BackendStatus::AlmostSolved,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                BackendStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                BackendStatus::Unbounded
            }
            _ => BackendStatus::Failed,
        };
        ConicSolution {
            status,
            x: sol.x.clone(),
            objective: sol.obj_val + self.cost.constant,
            iterations: sol.iterations,
            solve_time: sol.solve_time,
            detail: format!("{:?}", sol.status),
        }
    }

    /// Largest violation of equality rows at `x`.
    pub fn max_eq_residual(&self, x: &[f64]) -> f64 {
        self.zeros.iter().fold(0.0, |m, e| m.max(e.eval(x).abs()))
    }

    /// Most negative slack over nonnegative, second-order and exponential rows.
    pub fn min_cone_slack(&self, x: &[f64]) -> f64 {
        let mut worst = f64::INFINITY;
        for e in &self.nonneg {
            worst = worst.min(e.eval(x));
        }
        for s in &self.socs {
            let t = s[0].eval(x);
            let norm = s[1..].iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
            worst = worst.min(t - norm);
        }
        for [ex, ey, ez] in &self.exps {
            let (xv, yv, zv) = (ex.eval(x), ey.eval(x), ez.eval(x));
            let slack = if yv > 0.0 { zv - yv * (xv / yv).exp() } else { zv.min(-xv) };
            worst = worst.min(slack);
        }
        worst
    }
}

fn cone_label(c: &SupportedConeT<f64>) -> String {
    match c {
        SupportedConeT::ZeroConeT(n) => format!("zero {n}"),
        SupportedConeT::NonnegativeConeT(n) => format!("nonneg {n}"),
        SupportedConeT::SecondOrderConeT(n) => format!("soc {n}"),
        SupportedConeT::ExponentialConeT() => "exp 3".to_string(),
        SupportedConeT::PSDTriangleConeT(n) => format!("psd {n}"),
        other => format!("{other:?}"),
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}
