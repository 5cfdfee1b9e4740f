use std::collections::BTreeSet;

use nalgebra::DMatrix;

use super::conic::{min_eigenvalue, BackendStatus, ConicModel, LinExpr, SolverSettings};
use super::DecisionPoly;
use crate::polyalg::{Coefficient, Monomial, Poly, Polynomial, Var};
use crate::{Error, Result};

/// First id used for auxiliary indeterminates (matrix-lowering vectors,
/// membership points, convex weights). Configuration variables stay below.
pub const AUX_VAR_BASE: u32 = 1_000_000;

pub fn aux_var(k: u32) -> Var {
    Var(AUX_VAR_BASE + k)
}

pub type GramId = usize;

/// Basis `z` and PSD block index of one SOS polynomial `zᵀXz`.
#[derive(Clone, Debug)]
pub struct GramBlock {
    pub basis: Vec<Monomial>,
    pub block: usize,
}

/// Tolerances of the post-solve verification gate.
#[derive(Clone, Copy, Debug)]
pub struct VerifyTolerances {
    pub eig: f64,
    pub eq: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self { eig: 1e-7, eq: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Feasible,
    Infeasible,
    Indeterminate,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub backend: BackendStatus,
    pub x: Vec<f64>,
    pub min_eigs: Vec<f64>,
    pub max_eq_residual: f64,
    pub min_cone_slack: f64,
    pub objective: f64,
    pub solve_time: f64,
    pub detail: String,
}

impl SolveResult {
    pub fn is_feasible(&self) -> bool {
        self.status == SolveStatus::Feasible
    }

    pub fn worst_eig(&self) -> f64 {
        self.min_eigs.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Multipliers of `p = λ0 + Σ λ_j row_j`.
#[derive(Clone, Debug)]
pub struct PutinarMultipliers {
    pub lambda0: GramId,
    pub lambdas: Vec<GramId>,
}

/// Multipliers of a lowered matrix condition: `lambda0[k]` and
/// `lambdas[j][k]` are SOS in `(ū_k, s)`.
#[derive(Clone, Debug)]
pub struct MatrixMultipliers {
    pub aux: Vec<Var>,
    pub lambda0: Vec<GramId>,
    pub lambdas: Vec<Vec<GramId>>,
}

/// Bases for the emptiness identity `−1 = λ0 + Σ λ_i γ_i + Σ φ_k h_k`.
#[derive(Clone, Debug)]
pub struct RefutationBases {
    pub lambda0: Vec<Monomial>,
    pub gammas: Vec<Vec<Monomial>>,
    pub phis: Vec<Vec<Monomial>>,
}

impl RefutationBases {
    /// Derives multiplier bases from the `λ0` Gram basis so that every
    /// product stays inside the support of `λ0`.
    pub fn from_lambda0(z0: &[Monomial], gammas: &[Polynomial], hs: &[Polynomial]) -> Self {
        let s0: BTreeSet<Monomial> = z0
            .iter()
            .flat_map(|a| z0.iter().map(move |b| a.mul(b)))
            .collect();
        let gamma_bases = gammas
            .iter()
            .map(|g| {
                z0.iter()
                    .filter(|z| {
                        let zz = z.mul(z);
                        g.terms().all(|(t, _)| s0.contains(&zz.mul(t)))
                    })
                    .cloned()
                    .collect()
            })
            .collect();
        let phis = hs
            .iter()
            .map(|h| {
                let Some((lead, _)) = h.terms().next() else {
                    return Vec::new();
                };
                s0.iter()
                    .filter_map(|m| m.div(lead))
                    .filter(|m| h.terms().all(|(t, _)| s0.contains(&m.mul(t))))
                    .collect()
            })
            .collect();
        Self {
            lambda0: z0.to_vec(),
            gammas: gamma_bases,
            phis,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RefutationMultipliers {
    pub lambda0: GramId,
    /// `None` when the derived basis for that inequality is empty.
    pub lambdas: Vec<Option<GramId>>,
    pub phis: Vec<DecisionPoly>,
}

/// `zᵀXz` as a decision polynomial.
pub fn gram_poly(basis: &[Monomial], block: &super::conic::PsdBlock) -> DecisionPoly {
    let mut p = DecisionPoly::zero();
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let k = if i == j { 1.0 } else { 2.0 };
            p.add_term(basis[i].mul(&basis[j]), &LinExpr::term(block.var(i, j), k));
        }
    }
    p
}

/// Number of auxiliary coordinates a `k × k` matrix condition needs.
pub fn matrix_aux_count(dim: usize) -> usize {
    dim.saturating_sub(1)
}

/// An SOS program: polynomial identities over Gram-matrix variables plus
/// any extra conic rows placed directly on the model.
#[derive(Clone, Debug)]
pub struct SosProgram {
    model: ConicModel,
    grams: Vec<GramBlock>,
    /// Cap on the summed dimension of all PSD blocks.
    pub psd_cap: usize,
}

impl Default for SosProgram {
    fn default() -> Self {
        Self::new()
    }
}

impl SosProgram {
    pub fn new() -> Self {
        Self {
            model: ConicModel::new(),
            grams: Vec::new(),
            psd_cap: 1 << 20,
        }
    }

    pub fn model(&self) -> &ConicModel {
        &self.model
    }

    pub fn model_mut(&mut self) -> &mut ConicModel {
        &mut self.model
    }

    pub fn grams(&self) -> &[GramBlock] {
        &self.grams
    }

    pub fn gram(&self, id: GramId) -> &GramBlock {
        &self.grams[id]
    }

    pub fn max_gram_size(&self) -> usize {
        self.grams.iter().map(|g| g.basis.len()).max().unwrap_or(0)
    }

    /// Polynomial with one free coefficient per support monomial.
    pub fn new_free_poly(&mut self, support: &[Monomial]) -> DecisionPoly {
        let mut p = DecisionPoly::zero();
        for m in support {
            let v = self.model.new_var();
            p.add_term(m.clone(), &v);
        }
        p
    }

    /// Fresh SOS polynomial `zᵀXz` with `X ⪰ 0`.
    pub fn new_sos_poly(&mut self, basis: &[Monomial]) -> (DecisionPoly, GramId) {
        let block = self.model.new_psd(basis.len());
        let p = gram_poly(basis, self.model.psd_block(block));
        self.grams.push(GramBlock {
            basis: basis.to_vec(),
            block,
        });
        (p, self.grams.len() - 1)
    }

    /// Coefficient matching `p ≡ 0`.
    pub fn require_zero(&mut self, p: &DecisionPoly) {
        for (_, c) in p.terms() {
            self.model.add_eq(c.clone());
        }
    }

    /// `p` is SOS on `basis`.
    pub fn require_sos(&mut self, p: &DecisionPoly, basis: &[Monomial]) -> GramId {
        let (q, id) = self.new_sos_poly(basis);
        self.require_zero(&p.sub(&q));
        id
    }

    /// Rejects identities that cannot hold because a constant nonzero
    /// coefficient of `p` sits on a monomial no multiplier product reaches.
    fn structural_check(p: &DecisionPoly, reachable: &BTreeSet<Monomial>) -> Result<()> {
        for (m, c) in p.terms() {
            if c.is_constant() && c.constant != 0.0 && !reachable.contains(m) {
                return Err(Error::Structure(format!(
                    "monomial {m} of the target is outside the multiplier support"
                )));
            }
        }
        Ok(())
    }

    fn square_support(basis: &[Monomial]) -> BTreeSet<Monomial> {
        basis
            .iter()
            .flat_map(|a| basis.iter().map(move |b| a.mul(b)))
            .collect()
    }

    fn with_rows(base: &BTreeSet<Monomial>, rows: &[Polynomial]) -> BTreeSet<Monomial> {
        let mut out = base.clone();
        for r in rows {
            for (t, _) in r.terms() {
                for m in base {
                    out.insert(m.mul(t));
                }
            }
        }
        out
    }

    /// `p = λ0 + Σ_j λ_j·rows[j]` with SOS `λ` on `mult_basis`, where each
    /// row is an affine polynomial `d_j − c_jᵀs` of the polytope.
    pub fn putinar_nonneg(
        &mut self,
        p: &DecisionPoly,
        rows: &[Polynomial],
        mult_basis: &[Monomial],
    ) -> Result<PutinarMultipliers> {
        let reach = Self::with_rows(&Self::square_support(mult_basis), rows);
        Self::structural_check(p, &reach)?;
        let (l0, lambda0) = self.new_sos_poly(mult_basis);
        let mut rhs = l0;
        let mut lambdas = Vec::with_capacity(rows.len());
        for r in rows {
            let (lj, id) = self.new_sos_poly(mult_basis);
            rhs.add_assign(&lj.mul_real(r));
            lambdas.push(id);
        }
        self.require_zero(&p.sub(&rhs));
        Ok(PutinarMultipliers { lambda0, lambdas })
    }

    /// `−1 = λ0 + Σ λ_i γ_i + Σ φ_k h_k`: certifies that
    /// `{γ ≥ 0, h = 0}` is empty.
    pub fn putinar_refutation(
        &mut self,
        gammas: &[Polynomial],
        hs: &[Polynomial],
        bases: &RefutationBases,
    ) -> Result<RefutationMultipliers> {
        if bases.gammas.len() != gammas.len() || bases.phis.len() != hs.len() {
            return Err(Error::Structure("basis count does not match constraint count".into()));
        }
        let (mut rhs, lambda0) = self.new_sos_poly(&bases.lambda0);
        let mut lambdas = Vec::with_capacity(gammas.len());
        for (g, b) in gammas.iter().zip(&bases.gammas) {
            if b.is_empty() {
                lambdas.push(None);
                continue;
            }
            let (l, id) = self.new_sos_poly(b);
            rhs.add_assign(&l.mul_real(g));
            lambdas.push(Some(id));
        }
        let mut phis = Vec::with_capacity(hs.len());
        for (h, b) in hs.iter().zip(&bases.phis) {
            let phi = self.new_free_poly(b);
            rhs.add_assign(&phi.mul_real(h));
            phis.push(phi);
        }
        let target = DecisionPoly::constant_term(LinExpr::constant(-1.0));
        if !rhs.terms().any(|(m, _)| m.is_one()) {
            return Err(Error::Structure("no multiplier reaches the constant monomial".into()));
        }
        self.require_zero(&target.sub(&rhs));
        Ok(RefutationMultipliers {
            lambda0,
            lambdas,
            phis,
        })
    }

    /// Lowers `M(s) ⪰ 0 on P` to `[ū;1]ᵀM[ū;1] = λ0 + Σ_j λ_j row_j` with
    /// `λ = Σ_k λ_k(ū_k, s)`, each `λ_k` SOS on `[ū_k·z(s); z(s)]`.
    /// Off-diagonal entries between two auxiliary coordinates must vanish.
    pub fn lower_matrix_sos(
        &mut self,
        m: &[Vec<DecisionPoly>],
        rows: &[Polynomial],
        s_basis: &[Monomial],
        aux_offset: u32,
    ) -> Result<MatrixMultipliers> {
        let (sigma, aux, bases) = matrix_quadratic_form(m, s_basis, aux_offset)?;
        let naux = aux.len();
        let mut reach_base = BTreeSet::new();
        for b in &bases {
            reach_base.extend(Self::square_support(b));
        }
        let reach = Self::with_rows(&reach_base, rows);
        Self::structural_check(&sigma, &reach)?;

        let mut rhs = DecisionPoly::zero();
        let mut lambda0 = Vec::with_capacity(naux);
        for b in &bases {
            let (l, id) = self.new_sos_poly(b);
            rhs.add_assign(&l);
            lambda0.push(id);
        }
        let mut lambdas = Vec::with_capacity(rows.len());
        for r in rows {
            let mut ids = Vec::with_capacity(naux);
            let mut lam = DecisionPoly::zero();
            for b in &bases {
                let (l, id) = self.new_sos_poly(b);
                lam.add_assign(&l);
                ids.push(id);
            }
            rhs.add_assign(&lam.mul_real(r));
            lambdas.push(ids);
        }
        self.require_zero(&sigma.sub(&rhs));
        Ok(MatrixMultipliers {
            aux,
            lambda0,
            lambdas,
        })
    }

    /// Checks the size cap and returns the conic program.
    pub fn compile(&self) -> Result<&ConicModel> {
        let total: usize = self.model.psd_blocks().iter().map(|b| b.dim).sum();
        if total > self.psd_cap {
            return Err(Error::Structure(format!(
                "total PSD dimension {total} exceeds the cap {}",
                self.psd_cap
            )));
        }
        Ok(&self.model)
    }

    /// Solves and applies the verification gate: a result is `Feasible`
    /// only if every Gram block is PSD and every identity holds to tolerance.
    pub fn solve(&self, settings: &SolverSettings, tol: VerifyTolerances) -> SolveResult {
        if let Err(e) = self.compile() {
            return SolveResult {
                status: SolveStatus::Indeterminate,
                backend: BackendStatus::Failed,
                x: vec![0.0; self.model.num_vars()],
                min_eigs: Vec::new(),
                max_eq_residual: f64::INFINITY,
                min_cone_slack: f64::NEG_INFINITY,
                objective: f64::NAN,
                solve_time: 0.0,
                detail: e.to_string(),
            };
        }
        let sol = self.model.solve(settings);
        let usable = matches!(sol.status, BackendStatus::Solved | BackendStatus::AlmostSolved);
        let mut x = sol.x;
        let (mut min_eigs, mut max_eq_residual, mut min_cone_slack) = self.gate_values(&x);
        let passes = |eigs: &[f64], res: f64, slack: f64| {
            eigs.iter().all(|&e| e >= -tol.eig) && res <= tol.eq && slack >= -tol.eq
        };
        if usable && !passes(&min_eigs, max_eq_residual, min_cone_slack) {
            // Small negative eigenvalues from the interior-point method are
            // clipped; the repaired point must pass the same gate.
            let mut y = x.clone();
            for b in self.model.psd_blocks() {
                b.project(&mut y);
            }
            let (e, r, c) = self.gate_values(&y);
            if passes(&e, r, c) {
                (x, min_eigs, max_eq_residual, min_cone_slack) = (y, e, r, c);
            }
        }
        let gate = passes(&min_eigs, max_eq_residual, min_cone_slack);
        let status = match sol.status {
            BackendStatus::Solved | BackendStatus::AlmostSolved if gate => SolveStatus::Feasible,
            BackendStatus::Infeasible => SolveStatus::Infeasible,
            _ => SolveStatus::Indeterminate,
        };
        SolveResult {
            status,
            backend: sol.status,
            x,
            min_eigs,
            max_eq_residual,
            min_cone_slack,
            objective: sol.objective,
            solve_time: sol.solve_time,
            detail: sol.detail,
        }
    }

    /// Smallest eigenvalue per block, largest equality residual and most
    /// negative cone slack at `x`.
    fn gate_values(&self, x: &[f64]) -> (Vec<f64>, f64, f64) {
        let eigs = self.model.psd_blocks().iter().map(|b| min_eigenvalue(&b.value(x))).collect();
        (eigs, self.model.max_eq_residual(x), self.model.min_cone_slack(x))
    }

    pub fn gram_value(&self, id: GramId, x: &[f64]) -> DMatrix<f64> {
        self.model.psd_block(self.grams[id].block).value(x)
    }

    /// Numeric polynomial `zᵀXz` at a solution.
    pub fn gram_poly_value(&self, id: GramId, x: &[f64]) -> Polynomial {
        let g = &self.grams[id];
        gram_value_poly(&g.basis, &self.gram_value(id, x))
    }
}

/// `[ū;1]ᵀM[ū;1]` for a symmetric matrix without cross terms between
/// auxiliary coordinates, with the multiplier bases `[ū_k·z; z]`.
#[allow(clippy::type_complexity)]
pub fn matrix_quadratic_form<C: Coefficient + PartialEq>(
    m: &[Vec<Poly<C>>],
    s_basis: &[Monomial],
    aux_offset: u32,
) -> Result<(Poly<C>, Vec<Var>, Vec<Vec<Monomial>>)> {
    let dim = m.len();
    if dim == 0 || m.iter().any(|r| r.len() != dim) {
        return Err(Error::Structure("matrix condition is not square".into()));
    }
    let naux = matrix_aux_count(dim);
    for i in 0..naux {
        for j in 0..naux {
            if i != j && !m[i][j].is_zero() {
                return Err(Error::Structure(format!(
                    "cross term between auxiliary coordinates {i} and {j}"
                )));
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            if m[i][j] != m[j][i] {
                return Err(Error::Structure("matrix condition is not symmetric".into()));
            }
        }
    }
    let aux: Vec<Var> = (0..naux as u32).map(|k| aux_var(aux_offset + k)).collect();
    let last = dim - 1;
    let mut sigma = m[last][last].clone();
    for (k, &u) in aux.iter().enumerate() {
        let uk = Monomial::var(u);
        sigma.add_assign(&m[k][k].mul_monomial(&uk.mul(&uk)));
        sigma.add_assign(&m[k][last].mul_monomial(&uk).scale(2.0));
    }
    let bases = aux
        .iter()
        .map(|&u| {
            let uk = Monomial::var(u);
            let mut b: Vec<Monomial> = s_basis.iter().map(|z| z.mul(&uk)).collect();
            b.extend(s_basis.iter().cloned());
            b.sort();
            b
        })
        .collect();
    Ok((sigma, aux, bases))
}

/// `zᵀXz` for a numeric Gram matrix.
pub fn gram_value_poly(basis: &[Monomial], x: &DMatrix<f64>) -> Polynomial {
    let mut p = Polynomial::zero();
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let k = if i == j { 1.0 } else { 2.0 };
            p.add_term(basis[i].mul(&basis[j]), &(k * x[(i, j)]));
        }
    }
    p
}

/// Evaluates the decision coefficients at a solution.
pub fn value_of(p: &DecisionPoly, x: &[f64]) -> Polynomial {
    Poly::from_terms(p.terms().map(|(m, c)| (m.clone(), c.eval(x))))
}
