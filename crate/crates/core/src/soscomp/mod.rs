//! Sums-of-squares programs and their lowering to a conic program.

pub mod conic;
mod sos;

pub use conic::{min_eigenvalue, BackendStatus, ConicModel, LinExpr, SolverSettings};
pub use sos::{
    aux_var, gram_poly, matrix_aux_count, GramBlock, GramId, MatrixMultipliers, PutinarMultipliers,
    RefutationBases, RefutationMultipliers, SolveResult, SolveStatus, SosProgram, VerifyTolerances,
    AUX_VAR_BASE, gram_value_poly, matrix_quadratic_form, value_of,
};

/// Polynomial whose coefficients are affine in the decision variables.
pub type DecisionPoly = crate::polyalg::Poly<LinExpr>;
