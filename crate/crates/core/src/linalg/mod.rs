//! Dense matrix arithmetic, matrix exponentials, and lp norms: the numerical
//! substrate for every experiment module.

mod eig;
mod expm;
mod matrix;
mod norm;

pub use eig::{hermitian_eigenvalues, singular_values};
pub use expm::matrix_exp;
pub use matrix::{Matrix, Vector};
pub use norm::{
    operator_norm, trace_norm, vector_norm, Certainty, EstimateParams, NormContext, NormMode,
    OperatorNorm,
};

